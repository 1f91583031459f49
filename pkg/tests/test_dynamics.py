import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jchsim.dynamics import (
    EvolutionSpec,
    check_periodicity,
    evolve,
    expm_hermitian,
    floquet_effective,
    propagator,
    unitarity_error,
    unitary_log,
)
from jchsim.effective import derive_two_site, loop_frame, rotating_frame
from jchsim.errors import BranchAmbiguityError, ConfigError, DimensionError, HermiticityError, NormDriftError
from jchsim.hilbert import project_excitation_number
from jchsim.model import (
    DriveSpec,
    InterSiteCoupling,
    SiteSpec,
    build_driven_two_site,
    loop_drives,
    two_spin_site,
)
from jchsim.stroboscopic import (
    LatticeOperators,
    StroboscopicSpec,
    predicted_coefficients,
    protocol_bandwidth,
    step_hamiltonians,
    stroboscopic_sequence,
)


def random_hermitian(dim, rng):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (m + m.conj().T) / 2


def small_driven():
    site = SiteSpec((4000.0,), (4300.0,), ((60.0,),), qubit_labels=("q",))
    drives = [DriveSpec(0, "q", 1, 40.0, 250.0, 0.4), DriveSpec(1, "q", 1, 25.0, 500.0, 1.1)]
    return build_driven_two_site(site, drives, InterSiteCoupling((20.0,)))


# -- evolution -------------------------------------------------------------------


def test_eigenstate_populations_constant():
    rng = np.random.default_rng(0)
    h = random_hermitian(6, rng)
    _, vecs = np.linalg.eigh(h)
    psi = vecs[:, 2]
    proj = np.outer(psi, psi.conj())
    res = evolve(EvolutionSpec(h, 3.0, psi, observables={"p": proj}, n_samples=50))
    assert np.max(np.abs(res.observables["p"] - 1)) < 1e-10


def test_two_level_rabi_at_coupling_splitting():
    coupling = 2.5
    h = np.array([[0, coupling], [coupling, 0]], dtype=complex)
    res = evolve(EvolutionSpec(h, 1.0, np.array([1, 0], dtype=complex),
                               observables={"p1": np.diag([0, 1])}, n_samples=201))
    # population oscillates at twice the coupling (cyclic units)
    np.testing.assert_allclose(res.observables["p1"], np.sin(2 * np.pi * coupling * res.times) ** 2, atol=1e-10)


def test_norm_conserved_on_driven_evolution():
    h = small_driven()
    psi = np.zeros(h.dimension, dtype=complex)
    psi[1] = 1
    res = evolve(EvolutionSpec(h, 0.02, psi, dt=2e-5, record_stride=50))
    assert np.max(np.abs(res.norms - 1)) < 1e-8
    assert res.columns()[0] == "t"


def test_driven_evolution_records_on_stride():
    h = small_driven()
    psi = np.zeros(h.dimension, dtype=complex)
    psi[0] = 1
    res = evolve(EvolutionSpec(h, 0.01, psi, dt=1e-4, record_stride=10))
    np.testing.assert_allclose(res.times, np.arange(11) * 1e-3, atol=1e-15)


def test_evolution_spec_validation():
    with pytest.raises(ConfigError):
        EvolutionSpec(np.eye(2), 1.0, np.array([1.0, 1.0]))
    with pytest.raises(ConfigError):
        EvolutionSpec(np.eye(2), -1.0, np.array([1.0, 0.0]))
    with pytest.raises(DimensionError):
        evolve(EvolutionSpec(np.eye(3), 1.0, np.array([1.0, 0.0])))
    with pytest.raises(ConfigError):
        evolve(EvolutionSpec(small_driven(), 1.0, np.eye(16)[0]))


def test_non_hermitian_rejected():
    h = np.array([[0, 0], [0, -0.5j]])
    with pytest.raises(HermiticityError):
        evolve(EvolutionSpec(h, 1.0, np.array([0, 1], dtype=complex), n_samples=5))
    with pytest.raises(HermiticityError):
        propagator(h, 1.0)


def test_norm_drift_detected(monkeypatch):
    import jchsim.dynamics as dyn

    def leaky(h, psi0, spec):
        times = np.linspace(0, spec.t_final, 3)
        return times, np.array([psi0, 0.999 * psi0, 0.99 * psi0])

    monkeypatch.setattr(dyn, "_evolve_static", leaky)
    with pytest.raises(NormDriftError, match="norm drift"):
        evolve(EvolutionSpec(np.eye(2), 1.0, np.array([1, 0], dtype=complex)))


def test_sparse_krylov_matches_dense():
    from jchsim.dynamics import DENSE_THRESHOLD

    rng = np.random.default_rng(5)
    dim = DENSE_THRESHOLD + 4
    import scipy.sparse as sp

    diag = rng.normal(size=dim)
    off = rng.normal(size=dim - 1)
    h = sp.diags([off, diag, off], [-1, 0, 1], format="csr").astype(complex)
    psi = np.zeros(dim, dtype=complex)
    psi[dim // 2] = 1
    res = evolve(EvolutionSpec(h, 0.2, psi, n_samples=3))
    sub = slice(dim // 2 - 40, dim // 2 + 40)
    local = h[sub, sub].toarray()
    ref = expm_hermitian(local, 0.2) @ psi[sub]
    # the wavepacket stays far from the truncated edges
    np.testing.assert_allclose(res.final_state[sub], ref, atol=1e-8)


# -- propagators -----------------------------------------------------------------


def test_zero_time_propagator_is_identity():
    rng = np.random.default_rng(1)
    np.testing.assert_allclose(propagator(random_hermitian(5, rng), 0.0), np.eye(5), atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 12), st.floats(0.0, 2.0), st.integers(0, 2**31 - 1))
def test_static_routes_agree_and_unitary(dim, t, seed):
    h = random_hermitian(dim, np.random.default_rng(seed))
    u1 = propagator(h, t, method="eigh")
    u2 = propagator(h, t, method="expm")
    assert np.max(np.abs(u1 - u2)) < 1e-8
    assert unitarity_error(u1) < 1e-8


def test_static_integrator_route_agrees():
    rng = np.random.default_rng(2)
    h = random_hermitian(6, rng)
    u_exact = propagator(h, 0.3)
    u_steps = propagator(lambda t: h, 0.3, n_steps=50)
    assert np.max(np.abs(u_exact - u_steps)) < 1e-8


def test_group_property_for_periodic_hamiltonian():
    h = small_driven()
    period = h.period()
    u1 = propagator(h, period, n_steps=400)
    u2 = propagator(h, 2 * period, n_steps=800)
    assert np.max(np.abs(u2 - u1 @ u1)) < 1e-8


def test_unknown_method_and_time_dependent_needs_steps():
    with pytest.raises(ConfigError):
        propagator(np.eye(2), 1.0, method="taylor")
    with pytest.raises(ConfigError):
        propagator(small_driven(), 1.0)


def test_magnus_integrator_is_at_least_fourth_order():
    h = small_driven()
    t = 0.02
    ref = propagator(h, t, n_steps=6400)
    errors = [np.max(np.abs(propagator(h, t, n_steps=n) - ref)) for n in (50, 100, 200)]
    orders = [np.log2(errors[k] / errors[k + 1]) for k in range(2)]
    assert min(orders) >= 3.8, (errors, orders)


# -- Floquet -----------------------------------------------------------------------


def test_static_floquet_recovers_hamiltonian():
    rng = np.random.default_rng(4)
    h = random_hermitian(5, rng)
    h *= 0.4 / np.max(np.abs(np.linalg.eigvalsh(h)))
    res = floquet_effective(h, 1.0)
    assert np.max(np.abs(res.effective_hamiltonian - h)) < 1e-8
    assert res.unitarity_error < 1e-8
    assert res.hermiticity_error < 1e-8


def test_branch_ambiguity_raises():
    # an eigenphase exactly at the zone boundary
    h = np.diag([0.5, 0.0])
    with pytest.raises(BranchAmbiguityError):
        floquet_effective(h, 1.0)
    with pytest.raises(BranchAmbiguityError):
        unitary_log(np.diag([-1.0, 1.0]).astype(complex))


def test_periodicity_check():
    h = small_driven()
    assert check_periodicity(h, h.period()) < 1e-10
    with pytest.raises(ConfigError):
        check_periodicity(h, 0.37 * h.period())


def test_quasienergies_invariant_under_time_origin_shift():
    h = small_driven()
    period = h.period()
    a = floquet_effective(h, period, n_steps=400).quasienergies
    b = floquet_effective(h.shifted(0.31 * period), period, n_steps=400).quasienergies
    fold = lambda x: np.sort(np.mod(x + 0.5 / period, 1 / period))  # noqa: E731
    np.testing.assert_allclose(fold(a), fold(b), atol=1e-8)


def test_frame_shift_preserves_quasienergies():
    site = SiteSpec((4000.0,), (4300.0,), ((60.0,),), qubit_labels=("q",))
    h = build_driven_two_site(site, [DriveSpec(0, "q", 1, 40.0, 500.0, 0.4)], InterSiteCoupling((20.0,)))
    period = 1 / 500.0
    frame = {"q@0": 4000.0, "q@1": 4000.0, "a1@0": 4000.0, "a1@1": 4000.0}
    a = floquet_effective(h, period, n_steps=400).quasienergies
    b = floquet_effective(rotating_frame(h, frame), period, n_steps=400).quasienergies
    fold = lambda x: np.sort(np.mod(x, 1 / period))  # noqa: E731
    diff = np.abs(fold(a) - fold(b))
    assert np.max(np.minimum(diff, 1 / period - diff)) < 1e-8


def test_driven_floquet_matches_effective_model():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        site = two_spin_site(3000, 7000, 4000, 8000, 0.0, 0.0)
        drives = loop_drives(site, [60.0] * 4, 400.0)
        coupling = InterSiteCoupling((20.0, 20.0))
        d = derive_two_site(site, drives, coupling, strict=False)
    h = build_driven_two_site(site, drives, coupling)
    hp = rotating_frame(h, loop_frame(site, drives))
    proj = project_excitation_number(h.static.space, 1)
    period = 1 / 400.0
    res = floquet_effective(lambda t: proj.restrict(hp.matrix(t)).toarray(), period, n_steps=800)
    # compare the qubit-like quasienergies with the second-order model (shifted frame)
    effective = np.linalg.eigvalsh(d.model.single_particle_matrix(2))
    q = np.sort(res.quasienergies)
    idx = np.argsort(np.abs(q[:, None] - effective[None, :]).min(axis=1))[:4]
    qubit_like = np.sort(q[idx])
    bound = 20.0 * (60.0 / 800.0) ** 3 * 400.0 + 20.0 * (60.0 / 800.0) ** 2 * 20.0
    assert np.max(np.abs(qubit_like - np.sort(effective))) < bound


# -- stroboscopic protocol ------------------------------------------------------


def test_zero_gradient_gives_kinetic_only():
    res = stroboscopic_sequence(StroboscopicSpec(size=8, kappa=0.0))
    assert abs(res.rashba_coefficient) < 1e-12
    assert abs(res.spin_orbit_coefficient) < 1e-12
    ops = LatticeOperators(8, 0.5)
    kinetic = ops.kinetic.toarray()
    offset = np.trace(res.effective_hamiltonian - kinetic).real / kinetic.shape[0]
    assert np.max(np.abs(res.effective_hamiltonian - kinetic - offset * np.eye(kinetic.shape[0]))) < 1e-8


def test_step_hamiltonians_hermitian_and_quartered():
    ops = LatticeOperators(6, 0.5)
    steps = step_hamiltonians(ops, 0.05)
    assert len(steps) == 4
    for s in steps:
        m = s.toarray() if hasattr(s, "toarray") else s
        assert np.max(np.abs(m - m.conj().T)) < 1e-12


def test_rashba_coefficient_scales_inversely_with_frequency():
    ops = LatticeOperators(8, 0.5)
    band = protocol_bandwidth(ops, 0.05)
    a = stroboscopic_sequence(StroboscopicSpec(size=8, omega=100 * band), ops)
    b = stroboscopic_sequence(StroboscopicSpec(size=8, omega=200 * band), ops)
    assert a.rashba_coefficient / b.rashba_coefficient == pytest.approx(2.0, rel=0.01)


def test_fitted_coefficients_match_prediction():
    res = stroboscopic_sequence(StroboscopicSpec(size=16, bandwidth_factor=50))
    rashba, spin_orbit = predicted_coefficients(0.05, 0.5, res.fit["omega"])
    assert res.rashba_coefficient == pytest.approx(rashba, rel=0.05)
    assert res.spin_orbit_coefficient == pytest.approx(spin_orbit, rel=0.15)
    assert res.unitarity_error < 1e-8
    assert res.hermiticity_error < 1e-8


def test_small_lattice_warns():
    with pytest.warns(UserWarning):
        stroboscopic_sequence(StroboscopicSpec(size=6))


def test_slow_cycle_rejected():
    ops = LatticeOperators(8, 0.5)
    band = protocol_bandwidth(ops, 0.05)
    with pytest.raises(BranchAmbiguityError):
        stroboscopic_sequence(StroboscopicSpec(size=8, omega=0.3 * band, bandwidth_factor=None), ops)
