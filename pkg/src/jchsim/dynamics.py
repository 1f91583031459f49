"""Time evolution, propagators and Floquet effective Hamiltonians.

Hamiltonians are cyclic frequencies (MHz) and times are microseconds, so a
static propagator is ``exp(-2 pi i H t)``. Time-dependent problems use the
fourth-order Magnus integrator (two Gauss nodes, one commutator). Dense
steps are exponentiated by batched Hermitian eigendecomposition and large
sparse ones by Krylov action (``scipy.sparse.linalg.expm_multiply``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import BranchAmbiguityError, ConfigError, DimensionError, HermiticityError, NormDriftError
from .hilbert import Operator, hermiticity_error
from .model import DrivenHamiltonian, FourierHamiltonian

TWO_PI = 2.0 * np.pi
DENSE_THRESHOLD = 4096
NORM_TOL = 1e-8
_GAUSS = (0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0)
_COMM = np.sqrt(3.0) / 12.0
_CHUNK_BYTES = 64 * 2**20

HamiltonianLike = Union[Operator, np.ndarray, sp.spmatrix, DrivenHamiltonian, FourierHamiltonian, Callable]


def expm_hermitian(h: np.ndarray, t: float, angular: bool = False) -> np.ndarray:
    """``exp(-2 pi i h t)``, or ``exp(-i h t)`` when ``angular``, via eigendecomposition."""
    vals, vecs = np.linalg.eigh(h)
    phase = vals * t if angular else TWO_PI * vals * t
    return (vecs * np.exp(-1j * phase)) @ vecs.conj().T


def _as_static_matrix(h) -> np.ndarray | sp.csr_matrix | None:
    if isinstance(h, Operator):
        return h.matrix
    if sp.issparse(h):
        return sp.csr_matrix(h)
    if isinstance(h, np.ndarray):
        return h
    return None


def _require_hermitian(h, tol: float = 1e-12) -> None:
    scale = max(1.0, float(abs(h).max()) if h.shape[0] else 0.0)
    if hermiticity_error(h) > tol * scale:
        raise HermiticityError("Hamiltonian is not Hermitian; unitary evolution is undefined")


def _dense(m) -> np.ndarray:
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def _dimension(h) -> int:
    if isinstance(h, (DrivenHamiltonian, FourierHamiltonian)):
        return h.dimension
    static = _as_static_matrix(h)
    if static is not None:
        return static.shape[0]
    return _as_matrix(h(0.0)).shape[0]


def _as_matrix(value):
    if isinstance(value, Operator):
        return value.matrix
    return value


# -- Magnus steps ----------------------------------------------------------------


class _MagnusGenerator:
    """Produces Hermitian step generators ``K`` with ``U_step = exp(-i K)``."""

    def __init__(self, hamiltonian, dt: float):
        self.dt = float(dt)
        self.h = hamiltonian
        self.kind = "callable"
        if isinstance(hamiltonian, DrivenHamiltonian):
            self.kind = "driven"
            self.h0 = hamiltonian.static.toarray()
            self.vs = np.array([t.operator.toarray() for t in hamiltonian.terms]) if hamiltonian.terms \
                else np.zeros((0,) + self.h0.shape, dtype=complex)
            n = len(self.vs)
            self.c0 = np.array([v @ self.h0 - self.h0 @ v for v in self.vs]) if n else self.vs
            self.pairs = [(k, l) for k in range(n) for l in range(k + 1, n)]
            self.ckl = np.array([self.vs[k] @ self.vs[l] - self.vs[l] @ self.vs[k] for k, l in self.pairs]) \
                if self.pairs else np.zeros((0,) + self.h0.shape, dtype=complex)
        elif isinstance(hamiltonian, FourierHamiltonian):
            self.kind = "callable"
            self.h = hamiltonian

    def batch(self, t0s: np.ndarray) -> np.ndarray:
        dt = self.dt
        s = _COMM * TWO_PI**2 * dt**2
        if self.kind == "driven":
            ham = self.h
            a = ham.coefficients(t0s + _GAUSS[1] * dt)  # (n_terms, n_steps) at t2
            b = ham.coefficients(t0s + _GAUSS[0] * dt)  # at t1
            k = np.broadcast_to(np.pi * dt * 2 * self.h0, (t0s.size,) + self.h0.shape).copy()
            if len(self.vs):
                k += np.pi * dt * np.einsum("kn,kij->nij", a + b, self.vs)
                k += -1j * s * np.einsum("kn,kij->nij", a - b, self.c0)
                if self.pairs:
                    idx_k = np.array([p[0] for p in self.pairs])
                    idx_l = np.array([p[1] for p in self.pairs])
                    w = a[idx_k] * b[idx_l] - a[idx_l] * b[idx_k]
                    k += -1j * s * np.einsum("pn,pij->nij", w, self.ckl)
            return k
        out = []
        for t0 in t0s:
            h1 = _dense(_as_matrix(self.h(t0 + _GAUSS[0] * dt)))
            h2 = _dense(_as_matrix(self.h(t0 + _GAUSS[1] * dt)))
            out.append(np.pi * dt * (h1 + h2) - 1j * s * (h2 @ h1 - h1 @ h2))
        return np.array(out)

    def sparse_step(self, t0: float) -> sp.csr_matrix:
        dt = self.dt
        s = _COMM * TWO_PI**2 * dt**2
        if self.kind == "driven":
            h1 = self.h.matrix(t0 + _GAUSS[0] * dt)
            h2 = self.h.matrix(t0 + _GAUSS[1] * dt)
        else:
            h1 = sp.csr_matrix(_as_matrix(self.h(t0 + _GAUSS[0] * dt)))
            h2 = sp.csr_matrix(_as_matrix(self.h(t0 + _GAUSS[1] * dt)))
        return (np.pi * dt * (h1 + h2) - 1j * s * (h2 @ h1 - h1 @ h2)).tocsr()


def _step_unitaries(gen: _MagnusGenerator, t0s: np.ndarray):
    """Yield dense step unitaries chunk by chunk."""
    dim = _dimension(gen.h)
    chunk = max(1, int(_CHUNK_BYTES // (16 * dim * dim * 3)))
    for start in range(0, t0s.size, chunk):
        ks = gen.batch(t0s[start:start + chunk])
        ks = 0.5 * (ks + np.conj(np.swapaxes(ks, -1, -2)))
        vals, vecs = np.linalg.eigh(ks)
        yield np.einsum("nij,nj,nkj->nik", vecs, np.exp(-1j * vals), vecs.conj())


# -- evolution -------------------------------------------------------------------


@dataclass
class EvolutionSpec:
    hamiltonian: HamiltonianLike
    t_final: float
    initial_state: np.ndarray
    dt: float | None = None
    observables: Mapping[str, object] = field(default_factory=dict)
    record_stride: int = 1
    n_samples: int = 201
    norm_tol: float = NORM_TOL
    store_states: bool = False

    def __post_init__(self):
        psi = np.asarray(self.initial_state, dtype=complex)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ConfigError(f"initial state norm {np.linalg.norm(psi):.12f} is not 1")
        if self.t_final < 0:
            raise ConfigError("t_final must be >= 0")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be >= 1")
        self.initial_state = psi


@dataclass
class EvolutionResult:
    times: np.ndarray
    observables: dict
    norms: np.ndarray
    final_state: np.ndarray
    states: np.ndarray | None = None

    def columns(self) -> list[str]:
        return ["t", *self.observables, "norm"]

    def rows(self) -> list[list[float]]:
        cols = [self.times, *self.observables.values(), self.norms]
        return [[float(c[k]) for c in cols] for k in range(self.times.size)]


def _observable(obs):
    if callable(obs) and not isinstance(obs, (Operator, np.ndarray)) and not sp.issparse(obs):
        return obs
    mat = _as_matrix(obs)
    return lambda psi: float(np.real(np.vdot(psi, mat @ psi)))


def evolve(spec: EvolutionSpec) -> EvolutionResult:
    """Integrate the Schrödinger equation and record observables."""
    h = spec.hamiltonian
    psi0 = spec.initial_state
    dim = _dimension(h)
    if psi0.size != dim:
        raise DimensionError(f"state of length {psi0.size} for a Hamiltonian of dimension {dim}")
    observers = {name: _observable(o) for name, o in spec.observables.items()}
    static = _as_static_matrix(h)
    if static is not None:
        _require_hermitian(static)
        times, states = _evolve_static(static, psi0, spec)
    else:
        times, states = _evolve_driven(h, psi0, spec)
    norms = np.linalg.norm(states, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > spec.norm_tol:
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise NormDriftError(f"norm drift {drift:.3e} at t = {times[bad]:.6g} exceeds {spec.norm_tol:g}; "
                             "reduce dt")
    obs = {name: np.array([f(psi) for psi in states]) for name, f in observers.items()}
    return EvolutionResult(times, obs, norms, states[-1].copy(),
                           states if spec.store_states else None)


def _evolve_static(h, psi0, spec: EvolutionSpec):
    if spec.dt is not None:
        n = int(round(spec.t_final / spec.dt))
        times = np.arange(0, n + 1, spec.record_stride) * spec.dt
    else:
        times = np.linspace(0.0, spec.t_final, spec.n_samples)
    if h.shape[0] <= DENSE_THRESHOLD:
        vals, vecs = np.linalg.eigh(_dense(h))
        coeff = vecs.conj().T @ psi0
        phases = np.exp(-1j * TWO_PI * np.outer(times, vals))
        states = (phases * coeff[None, :]) @ vecs.T
        return times, states
    h = sp.csr_matrix(h)
    if times.size == 1:
        return times, psi0[None, :].copy()
    states = expm_multiply(-1j * TWO_PI * h, psi0, start=times[0], stop=times[-1],
                           num=times.size, endpoint=True)
    return times, np.asarray(states)


def _evolve_driven(h, psi0, spec: EvolutionSpec):
    if spec.dt is None:
        raise ConfigError("time-dependent evolution needs dt")
    n_steps = int(round(spec.t_final / spec.dt))
    dt = spec.t_final / n_steps if n_steps else 0.0
    gen = _MagnusGenerator(h, dt)
    t0s = np.arange(n_steps) * dt
    stride = spec.record_stride
    times = [0.0]
    states = [psi0.copy()]
    psi = psi0.copy()
    dim = psi0.size
    if dim <= DENSE_THRESHOLD // 16:
        step = 0
        for us in _step_unitaries(gen, t0s):
            for u in us:
                psi = u @ psi
                step += 1
                if step % stride == 0 or step == n_steps:
                    times.append(step * dt)
                    states.append(psi.copy())
    else:
        for step, t0 in enumerate(t0s, start=1):
            psi = expm_multiply(-1j * gen.sparse_step(t0), psi)
            if step % stride == 0 or step == n_steps:
                times.append(step * dt)
                states.append(psi.copy())
    return np.array(times), np.array(states)


# -- propagators ---------------------------------------------------------------


def propagator(hamiltonian: HamiltonianLike, t: float, dt: float | None = None, n_steps: int | None = None,
               method: str = "eigh", t0: float = 0.0) -> np.ndarray:
    """Full unitary over ``[t0, t0 + t]``.

    Static Hamiltonians use ``method='eigh'`` (eigendecomposition) or
    ``'expm'`` (scipy Padé). Time-dependent ones multiply Magnus steps.
    """
    dim = _dimension(hamiltonian)
    if dim > DENSE_THRESHOLD:
        raise DimensionError(f"dimension {dim} exceeds the dense threshold {DENSE_THRESHOLD}; "
                             "use evolve() for state-by-state application")
    static = _as_static_matrix(hamiltonian)
    if static is not None:
        _require_hermitian(static)
        h = _dense(static)
        if method == "eigh":
            return expm_hermitian(h, t)
        if method == "expm":
            return sla.expm(-1j * TWO_PI * t * h)
        raise ConfigError(f"unknown propagator method {method!r}")
    if n_steps is None:
        if dt is None:
            raise ConfigError("time-dependent propagator needs dt or n_steps")
        n_steps = max(1, int(np.ceil(t / dt - 1e-9)))
    step = t / n_steps
    gen = _MagnusGenerator(hamiltonian, step)
    u = np.eye(dim, dtype=complex)
    for us in _step_unitaries(gen, t0 + np.arange(n_steps) * step):
        for s in us:
            u = s @ u
    return u


def unitarity_error(u: np.ndarray) -> float:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


# -- Floquet -------------------------------------------------------------------


@dataclass
class FloquetResult:
    floquet_operator: np.ndarray
    effective_hamiltonian: np.ndarray
    quasienergies: np.ndarray
    period: float
    unitarity_error: float
    hermiticity_error: float
    rashba_coefficient: float | None = None
    spin_orbit_coefficient: float | None = None
    fit: dict = field(default_factory=dict)
    kick_corrected_hamiltonian: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "quasienergies": [float(x) for x in self.quasienergies],
            "unitarity_error": self.unitarity_error,
            "hermiticity_error": self.hermiticity_error,
            "rashba_coefficient": self.rashba_coefficient,
            "spin_orbit_coefficient": self.spin_orbit_coefficient,
            "fit": self.fit,
        }


def unitary_log(u: np.ndarray, branch_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Eigenphases in ``(-pi, pi]`` and the Hermitian generator ``G`` with ``u = exp(-i G)``."""
    tri, z = sla.schur(u, output="complex")
    phases = np.angle(np.diag(tri))
    if np.any(np.abs(phases) > np.pi - branch_tol):
        worst = float(np.max(np.abs(phases)))
        raise BranchAmbiguityError(
            f"eigenphase {worst:.6f} is within {branch_tol:g} of the branch cut; increase the drive frequency")
    gen = (z * (-phases)) @ z.conj().T
    return -phases, 0.5 * (gen + gen.conj().T)


def check_periodicity(hamiltonian, period: float, tol: float = 1e-10, samples: int = 5) -> float:
    """Max relative deviation of ``H(t + T)`` from ``H(t)`` on a few sample times."""
    static = _as_static_matrix(hamiltonian)
    if static is not None:
        return 0.0
    worst = 0.0
    for t in np.linspace(0.0, period, samples, endpoint=False) + 0.1234 * period:
        h1 = _dense(_as_matrix(hamiltonian(t) if not isinstance(hamiltonian, DrivenHamiltonian)
                               else hamiltonian.matrix(t)))
        h2 = _dense(_as_matrix(hamiltonian(t + period) if not isinstance(hamiltonian, DrivenHamiltonian)
                               else hamiltonian.matrix(t + period)))
        scale = max(1.0, float(np.max(np.abs(h1))))
        worst = max(worst, float(np.max(np.abs(h1 - h2))) / scale)
    if worst > tol:
        raise ConfigError(f"Hamiltonian is not periodic with period {period:g} (deviation {worst:.3e})")
    return worst


def floquet_effective(hamiltonian: HamiltonianLike, period: float, n_steps: int | None = None,
                      dt: float | None = None, periodicity_tol: float = 1e-10,
                      branch_tol: float = 1e-6) -> FloquetResult:
    """Floquet operator over one period and ``H_eff = (i / 2 pi T) log U(T)``.

    Quasienergies are folded into ``(-1/(2T), 1/(2T)]``.
    """
    check_periodicity(hamiltonian, period, periodicity_tol)
    if _as_static_matrix(hamiltonian) is None and n_steps is None and dt is None:
        raise ConfigError("a time-dependent Floquet problem needs n_steps or dt")
    u = propagator(hamiltonian, period, dt=dt, n_steps=n_steps)
    phases, gen = unitary_log(u, branch_tol)
    heff = gen / (TWO_PI * period)
    return FloquetResult(
        floquet_operator=u,
        effective_hamiltonian=heff,
        quasienergies=np.sort(phases / (TWO_PI * period)),
        period=float(period),
        unitarity_error=unitarity_error(u),
        hermiticity_error=hermiticity_error(heff),
    )
