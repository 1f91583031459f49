import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jchsim.dynamics import propagator
from jchsim.effective import (
    RamanDrive,
    apply_rwa,
    assign_bond_detunings,
    check_frequency_matching,
    combine,
    compensate_spin_flip_tone,
    derive_two_site,
    eliminate_static,
    frame_propagator_factor,
    loop_frame,
    model_from_sector,
    polariton_analysis,
    raman_drives,
    raman_effective_field,
    rotating_frame,
    sideband_shifts,
    validate_bond_frequencies,
)
from jchsim.errors import ConfigError, ResonanceError, SingularEliminationError, ValidityError
from jchsim.experiments import run_static_elimination
from jchsim.lattice import chain, square
from jchsim.model import (
    DriveSpec,
    InterSiteCoupling,
    SiteSpec,
    build_driven_two_site,
    build_jch,
    jc_site,
    loop_drives,
    preset,
    two_spin_site,
)


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def static_device(g=100.0, delta=1000.0, hopping=30.0, g_other=None):
    site = two_spin_site(3000, 7000, 3000 + delta, 7000 + delta, g, g if g_other is None else g_other)
    return build_jch(chain(2), site, InterSiteCoupling((hopping, hopping)))


def soc_device(phases=(0.0, 0.0, 0.0, 0.0), amplitude=100.0, detuning=100.0, hopping=40.0):
    site = preset("dispersive_soc").site
    drives = loop_drives(site, [amplitude] * 4, detuning, phases)
    return site, drives, InterSiteCoupling((hopping, hopping))


# -- static elimination ----------------------------------------------------------


def test_static_zero_coupling_gives_no_induced_hops():
    r = eliminate_static(static_device(g=0.0))
    assert all(abs(v) == 0 for v in r.spin_conserving_hops.values())
    assert r.renormalized_params["J[a1@0,a1@1]"] == 30.0
    assert r.renormalized_params["omega[down@0]"] == 3000.0


def test_static_hop_matches_formula():
    r = eliminate_static(static_device())
    for hop in r.spin_conserving_hops.values():
        assert abs(hop) == pytest.approx(30 * 100 * 100 / 1000**2, rel=1e-12)
    assert r.renormalized_params["J[a1@0,a1@1]"] == pytest.approx(30 * (1 - 0.01), rel=1e-12)
    assert r.renormalized_params["omega[down@0]"] == pytest.approx(3000 - 10, rel=1e-12)
    assert r.renormalized_params["omega[a1@0]"] == pytest.approx(4000 + 10, rel=1e-12)


def test_static_symmetric_shifts_are_equal():
    r = eliminate_static(static_device(g=80.0))
    p = r.renormalized_params
    assert p["omega[down@0]"] == p["omega[down@1]"]
    assert p["omega[up@0]"] == p["omega[up@1]"]


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 250.0), st.floats(0.0, 250.0), st.floats(1.0, 60.0))
def test_static_hop_formula_property(g_down, g_up, hopping):
    site = two_spin_site(3000, 7000, 4000, 8000, g_down, g_up)
    r = eliminate_static(build_jch(chain(2), site, InterSiteCoupling((hopping, hopping))), strict=False)
    down = r.spin_conserving_hops[("down@0", "down@1")]
    up = r.spin_conserving_hops[("up@0", "up@1")]
    assert abs(down) == pytest.approx(hopping * g_down**2 / 1000**2, rel=1e-12, abs=1e-14)
    assert abs(up) == pytest.approx(hopping * g_up**2 / 1000**2, rel=1e-12, abs=1e-14)
    assert r.effective_hamiltonian.hermiticity_error() < 1e-12


def test_static_validity_limits():
    with pytest.raises(SingularEliminationError, match="elimination singular"):
        eliminate_static(static_device(delta=0.0))
    with pytest.raises(ValidityError):
        eliminate_static(static_device(g=400.0))
    with pytest.warns(UserWarning):
        warnings.simplefilter("always")
        eliminate_static(static_device(g=200.0))
    r = eliminate_static(static_device(g=400.0), strict=False)
    assert not r.validity["ratio_ok"]


@pytest.mark.parametrize("g_ratio", np.linspace(0.03, 0.15, 5))
@pytest.mark.parametrize("j_ratio", np.linspace(0.01, 0.05, 5))
def test_static_oracle_grid(g_ratio, j_ratio):
    result = run_static_elimination(g_over_delta=float(g_ratio), hopping_over_delta=float(j_ratio))
    assert result.verdict("energy_error").passed, result.verdict("energy_error")


# -- rotating frame and RWA ------------------------------------------------------


def test_zero_frame_is_identity():
    p = preset("typical_device")
    h = build_driven_two_site(p.site, p.drives, p.coupling)
    hp = rotating_frame(h, {})
    for t in (0.0, 1.3e-4, 0.01):
        assert abs(hp.matrix(t) - h.matrix(t)).max() < 1e-9


def test_loop_frame_mode_detunings():
    site, drives, coupling = soc_device(detuning=120.0)
    frame = loop_frame(site, drives)
    assert site.mode_freqs[0] - frame["a1@0"] == pytest.approx(120.0)
    assert site.mode_freqs[1] - frame["a2@0"] == pytest.approx(120.0)
    assert frame["down@0"] == site.qubit_freqs[0]


def test_frame_propagator_equivalence():
    rng = np.random.default_rng(11)
    site = SiteSpec((4000.0,), (4300.0,), ((60.0,),), qubit_labels=("q",))
    drives = [DriveSpec(0, "q", 1, 40.0, 250.0, rng.uniform(0, 6)),
              DriveSpec(1, "q", 1, 25.0, 500.0, rng.uniform(0, 6))]
    h = build_driven_two_site(site, drives, InterSiteCoupling((20.0,)), photon_cutoff=1)
    frame = {"q@0": 3800.0, "q@1": 4100.0, "a1@0": 4000.0, "a1@1": 4200.0}
    hp = rotating_frame(h, frame)
    t = 0.004
    u = propagator(h, t, n_steps=4000)
    up = propagator(hp, t, n_steps=4000)
    rebuilt = frame_propagator_factor(h.static.space, frame, t)[:, None] * up
    fidelity = abs(np.trace(u.conj().T @ rebuilt)) / u.shape[0]
    assert fidelity > 1 - 1e-8


def test_rwa_without_drives_is_static_part():
    p = preset("typical_device")
    h = build_driven_two_site(p.site, [], p.coupling)
    rwa = apply_rwa(rotating_frame(h, {}))
    assert abs(rwa.matrix - h.static.matrix).max() < 1e-12


def test_rwa_single_drive_term():
    site = preset("typical_device").site
    phase = 0.7
    drive = DriveSpec(0, "down", 1, 100.0, 800.0, phase)
    h = build_driven_two_site(site, [drive], InterSiteCoupling((30.0, 30.0)))
    frame = {"a1@0": 3800.0, "a1@1": 3800.0, "a2@0": 7800.0, "a2@1": 7800.0,
             "down@0": 3000.0, "down@1": 3000.0, "up@0": 7000.0, "up@1": 7000.0}
    rwa = apply_rwa(rotating_frame(h, frame), cutoff=100.0)
    space = h.static.space
    exc = space.index(tuple(1 if lab == "down@0" else 0 for lab in space.labels))
    photon = space.index(tuple(1 if lab == "a1@0" else 0 for lab in space.labels))
    element = rwa.toarray()[exc, photon]
    # f cos(wt + phi) with the mode above the qubit leaves (f/2) e^{+i phi} on c^dag a
    assert element == pytest.approx(100.0 / 2 * np.exp(1j * phase), abs=1e-9)


def test_rwa_fidelity_bound_over_one_period():
    p = preset("typical_device")
    h = build_driven_two_site(p.site, p.drives, p.coupling)
    hp = rotating_frame(h, loop_frame(p.site, p.drives))
    period = 1 / 800.0
    rwa = apply_rwa(hp)
    u_exact = propagator(hp, period, n_steps=400)
    u_rwa = propagator(rwa, period)
    fidelity = abs(np.trace(u_rwa.conj().T @ u_exact)) / u_exact.shape[0]
    f_over_w = 100.0 / 800.0
    assert fidelity > 1 - 10 * f_over_w**2


def test_frequency_matching_violation_named():
    site, drives, coupling = soc_device()
    bad = list(drives)
    bad[1] = DriveSpec(bad[1].site, bad[1].spin, bad[1].mode, bad[1].amplitude, bad[1].frequency + 5.0)
    with pytest.raises(ResonanceError, match="ω1\\+ω2 ≠ ω↑−ω↓"):
        check_frequency_matching(site, bad)
    with pytest.raises(ResonanceError):
        derive_two_site(site, bad, coupling)


# -- driven elimination ----------------------------------------------------------


def test_spin_changing_hop_formula():
    site, drives, coupling = soc_device()
    d = derive_two_site(site, drives, coupling, strict=False)
    for hop in d.driven.spin_changing_hops.values():
        assert hop == pytest.approx(40 * 100 * 100 / (4 * 100**2), rel=1e-12)
    assert d.driven.renormalized_params["J[a1@0,a1@1]"] == pytest.approx(40 * (1 - 2 * 100**2 / (8 * 100**2)))


def test_zero_phases_give_real_positive_hops():
    site, drives, coupling = soc_device()
    d = derive_two_site(site, drives, coupling, strict=False)
    for hop in d.driven.spin_changing_hops.values():
        assert abs(hop.imag) < 1e-12 and hop.real > 0


def test_pi_on_fourth_drive_gives_pi_flux():
    site, drives, coupling = soc_device(phases=(0, 0, 0, np.pi))
    d = derive_two_site(site, drives, coupling, strict=False)
    assert abs(abs(d.model.loop_flux()) - np.pi) < 1e-9
    t = d.model.bond_matrix(0, 1)
    assert np.sign(t[0, 1].real) == -np.sign(t[1, 0].real)


def test_driven_validity_limits():
    site, drives, coupling = soc_device(amplitude=100.0, detuning=100.0)
    with pytest.raises(ValidityError):
        derive_two_site(site, drives, coupling, strict=True)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=4, max_size=4))
def test_loop_flux_is_phase_combination(phases):
    site, drives, coupling = soc_device(phases=tuple(phases), amplitude=50.0)
    d = derive_two_site(site, drives, coupling, strict=False)
    expected = -(phases[0] + phases[1] + phases[2] - phases[3])
    diff = np.angle(np.exp(1j * (d.model.loop_flux() - expected)))
    assert abs(diff) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_gauge_invariance_property(a, b, shift1, shift2):
    base = (a, b, 0.3, 0.1)
    # redistribute while keeping p1 + p2 + p3 - p4 fixed
    moved = (a + shift1, b - shift1 + shift2, 0.3 - shift2 + 0.5, 0.1 + 0.5)
    spectra = []
    for phases in (base, moved):
        site, drives, coupling = soc_device(phases=phases, amplitude=50.0)
        d = derive_two_site(site, drives, coupling, strict=False)
        spectra.append(np.linalg.eigvalsh(d.model.single_particle_matrix(2)))
    np.testing.assert_allclose(spectra[0], spectra[1], atol=1e-10)


def test_combine_structure():
    p = preset("dispersive_soc")
    d = derive_two_site(p.site, p.drives, p.coupling, strict=False)
    t = d.model.bond_matrix(0, 1)
    assert np.all(np.abs(t) > 0)
    assert d.model.interaction == "hard_core"
    undriven = derive_two_site(p.site, [DriveSpec(x.site, x.spin, x.mode, 0.0, x.frequency) for x in p.drives],
                               p.coupling, strict=False)
    tz = undriven.model.bond_matrix(0, 1)
    assert abs(tz[0, 1]) < 1e-12 and abs(tz[1, 0]) < 1e-12
    assert abs(tz[0, 0]) > 0


def test_combine_rejects_mismatched_pairs():
    p = preset("dispersive_soc")
    d = derive_two_site(p.site, p.drives, p.coupling, strict=False)
    site = SiteSpec((3000, 7000), (4000, 8000), ((100, 0), (0, 100)), qubit_labels=("left", "right"))
    other = eliminate_static(build_jch(chain(2), site, InterSiteCoupling((30, 30))))
    with pytest.raises(ConfigError, match="inconsistent site pairs"):
        combine(other, d.driven)


def test_effective_hamiltonians_hermitian():
    p = preset("dispersive_soc")
    d = derive_two_site(p.site, p.drives, p.coupling, strict=False)
    assert d.static.effective_hamiltonian.hermiticity_error() < 1e-12
    assert d.driven.effective_hamiltonian.hermiticity_error() < 1e-12
    h = d.model.single_particle_matrix(2)
    assert np.max(np.abs(h - h.conj().T)) < 1e-12


def test_model_from_sector_round_trip():
    m = np.array([[1.0, 0.2, 0.5, 0.1j], [0.2, 2.0, -0.1j, 0.4],
                  [0.5, 0.1j, 1.0, 0.2], [-0.1j, 0.4, 0.2, 2.0]])
    model = model_from_sector(m, ["down@0", "up@0", "down@1", "up@1"])
    rebuilt = model.single_particle_matrix(2)
    # the model orders spins (up, down) on each site
    order = [1, 0, 3, 2]
    np.testing.assert_allclose(rebuilt, m[np.ix_(order, order)], atol=1e-14)


# -- sideband compensation ---------------------------------------------------------


def test_sideband_shifts_vanish_without_rotating_terms():
    site = two_spin_site(3000, 7000, 4000, 8000, 0.0, 0.0)
    drives = loop_drives(site, [100.0] * 4, 200.0)
    frame = loop_frame(site, drives)
    undriven = build_driven_two_site(site, [], InterSiteCoupling((30.0, 30.0)))
    assert np.max(np.abs(sideband_shifts(rotating_frame(undriven, frame)))) < 1e-12
    driven = build_driven_two_site(site, drives, InterSiteCoupling((30.0, 30.0)))
    assert np.max(np.abs(sideband_shifts(rotating_frame(driven, frame)))) > 0


def test_compensation_preserves_other_tones():
    site = two_spin_site(2000, 6000, 4000, 8000, 0.0, 0.0)
    drives = loop_drives(site, [500.0] * 4, 1000.0)
    adjusted, offset = compensate_spin_flip_tone(site, drives, InterSiteCoupling((100.0, 100.0)))
    assert offset > 0
    changed = [k for k, (a, b) in enumerate(zip(drives, adjusted)) if a.frequency != b.frequency]
    assert changed == [1]
    assert adjusted[1].frequency == pytest.approx(drives[1].frequency + offset)


# -- multi-bond planning -----------------------------------------------------------


def test_bond_detunings_distinct_on_shared_sites():
    lat = square(3)
    plan = assign_bond_detunings(lat, 200.0, 50.0)
    for (i, j), det in plan.items():
        for (k, l), other in plan.items():
            if (i, j) != (k, l) and {i, j} & {k, l}:
                assert det != other
    validate_bond_frequencies(lat, {e: (d, 2 * d) for e, d in plan.items()})


def test_bond_collision_rejected():
    lat = chain(3)
    with pytest.raises(ResonanceError):
        validate_bond_frequencies(lat, {(0, 1): (100.0, 200.0), (1, 2): (200.0, 100.0)})


# -- polaritons ----------------------------------------------------------------


def test_resonant_polariton_equal_hopping():
    a = polariton_analysis(jc_site(4000, 4000, 100), 10.0)
    assert abs(a.effective_hops["LP"] - a.effective_hops["UP"]) < 1e-10 * 10.0
    assert a.effective_hops["LP"] == pytest.approx(5.0, rel=1e-10)
    assert a.photon_weight["LP"] == pytest.approx(0.5)


def test_dispersive_polariton_ratio_follows_photon_weight():
    a = polariton_analysis(jc_site(3000, 4000, 100), 10.0)
    ratio = a.effective_hops["UP"] / a.effective_hops["LP"]
    weight_ratio = a.photon_weight["UP"] / a.photon_weight["LP"]
    assert ratio > 50
    assert ratio == pytest.approx(weight_ratio, rel=0.05)


def test_uncoupled_photonic_branch():
    a = polariton_analysis(jc_site(5000, 4000, 0.0), 10.0)
    assert a.photon_weight["LP"] == 1.0
    assert a.effective_hops["LP"] == pytest.approx(10.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(3000, 5000), st.floats(10, 300))
def test_photon_weights_bounded(qubit_freq, g):
    a = polariton_analysis(jc_site(qubit_freq, 4000, g), 5.0)
    for w in a.photon_weight.values():
        assert -1e-12 <= w <= 1 + 1e-12
    assert a.photon_weight["LP"] + a.photon_weight["UP"] <= 1 + 1e-10


def test_branch_ambiguity_flagged():
    with pytest.warns(UserWarning):
        warnings.simplefilter("always")
        a = polariton_analysis(jc_site(4000, 4000, 100), 80.0)
    assert a.ambiguous


# -- Raman ----------------------------------------------------------------------


def test_raman_rate_formula_and_field():
    site = jc_site(4000, 4000, 1000)
    d1, d2 = raman_drives(site, 10.0, 100.0)
    field = raman_effective_field(site, d1, d2)
    assert field.effective_rabi == pytest.approx(0.5, rel=1e-9)
    assert abs(field.field_vector[2]) < 1e-6
    assert np.linalg.norm(field.field_vector) == pytest.approx(
        np.hypot(field.effective_rabi, field.effective_detuning), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(1, 20), st.floats(1, 20), st.floats(-3, 3), st.floats(0, 6.2))
def test_raman_field_norm_property(r1, r2, det, phase):
    site = jc_site(4000, 4000, 1000)
    d1, d2 = raman_drives(site, 10.0, 100.0, two_photon_detuning=det, phases=(phase, 0.0))
    d1 = RamanDrive(d1.amplitude * r1 / 10, d1.frequency, d1.phase)
    d2 = RamanDrive(d2.amplitude * r2 / 10, d2.frequency, d2.phase)
    f = raman_effective_field(site, d1, d2)
    assert np.linalg.norm(f.field_vector) == pytest.approx(np.hypot(f.effective_rabi, f.effective_detuning),
                                                           abs=1e-12)


def test_raman_single_drive_gives_no_rate():
    site = jc_site(4000, 4000, 1000)
    d1, d2 = raman_drives(site, 10.0, 100.0)
    field = raman_effective_field(site, RamanDrive(0.0, d1.frequency), d2)
    assert field.effective_rabi == 0.0
    assert field.effective_detuning != 0.0


def test_raman_resonant_intermediate_rejected():
    site = jc_site(4000, 4000, 1000)
    with pytest.raises(SingularEliminationError, match="intermediate level resonant"):
        raman_drives(site, 10.0, 0.0)
    d1, d2 = raman_drives(site, 10.0, 100.0)
    lp = d1.frequency + 100.0
    with pytest.raises(SingularEliminationError, match="intermediate level resonant"):
        raman_effective_field(site, RamanDrive(d1.amplitude, lp), d2)
