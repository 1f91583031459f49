"""Four-step stroboscopic protocol producing Rashba-type spin-orbit coupling.

One cycle of period ``T = 2 pi / omega`` applies, for ``T/4`` each,

    2 T_x,   T_x + T_y + V,   2 T_y,   T_x + T_y - V,   V = kappa (x sigma_x - y sigma_y)

on an ``L x L`` spin-1/2 lattice. Units are dimensionless with ``hbar = 1``
and angular ``omega``, so each step is ``exp(-i H T/4)``. Kinetic terms are
nearest-neighbour hopping ``t (2 - shift - shift^T)`` with ``t = 1/(2m)``
(lattice spacing 1), which approximates ``p^2/2m`` at the band bottom.
Momentum is the lattice operator ``sin(k)``; coordinates are measured from
the lattice centre and boundaries are open.

The slow dynamics is compared with

    H_0 + lambda_R (p_x sigma_x + p_y sigma_y) + Omega_SO L_z sigma_z,
    lambda_R = pi kappa / (8 m omega),  Omega_SO = -(8 m / 3) lambda_R^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dynamics import FloquetResult, expm_hermitian, unitary_log, unitarity_error
from .errors import BranchAmbiguityError, ConfigError
from .hilbert import hermiticity_error

SIGMA = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class StroboscopicSpec:
    size: int = 16
    mass: float = 0.5
    kappa: float = 0.05
    omega: float | None = None
    bandwidth_factor: float | None = 50.0
    n_cycles: int = 1

    def __post_init__(self):
        if self.size < 2:
            raise ConfigError("lattice side must be >= 2")
        if self.mass <= 0:
            raise ConfigError("mass must be > 0")
        if self.omega is None and self.bandwidth_factor is None:
            raise ConfigError("give omega or bandwidth_factor")
        if self.n_cycles < 1:
            raise ConfigError("n_cycles must be >= 1")


class LatticeOperators:
    """Kinetic, position, momentum and spin operators on the spinful square lattice.

    Basis ordering is ``(x, y, spin)`` with spin fastest.
    """

    def __init__(self, size: int, mass: float):
        n = size
        hop = 1.0 / (2.0 * mass)
        shift = sp.diags(np.ones(n - 1), -1, shape=(n, n), format="csr")
        eye = sp.identity(n, format="csr")
        kin1 = hop * (2 * eye - shift - shift.T)
        mom1 = 0.5j * (shift - shift.T)
        pos1 = sp.diags(np.arange(n) - (n - 1) / 2)
        s0 = sp.csr_matrix(SIGMA["0"])

        def k3(a, b, c):
            return sp.kron(sp.kron(a, b), c, format="csr")

        self.size = n
        self.mass = mass
        self.tx = k3(kin1, eye, s0)
        self.ty = k3(eye, kin1, s0)
        self.x = k3(pos1, eye, s0)
        self.y = k3(eye, pos1, s0)
        self.px = k3(mom1, eye, s0)
        self.py = k3(eye, mom1, s0)
        self.sigma = {a: k3(eye, eye, sp.csr_matrix(SIGMA[a])) for a in "xyz"}
        self.identity = sp.identity(2 * n * n, format="csr", dtype=complex)

    @property
    def kinetic(self):
        return self.tx + self.ty

    def gradient(self, kappa: float):
        return kappa * (self.x @ self.sigma["x"] - self.y @ self.sigma["y"])

    def rashba_operator(self):
        return self.px @ self.sigma["x"] + self.py @ self.sigma["y"]

    def lz_sz_operator(self):
        return (self.x @ self.py - self.y @ self.px) @ self.sigma["z"]


def step_hamiltonians(ops: LatticeOperators, kappa: float) -> list:
    v = ops.gradient(kappa)
    h0 = ops.kinetic
    return [2 * ops.tx, h0 + v, 2 * ops.ty, h0 - v]


def protocol_bandwidth(ops: LatticeOperators, kappa: float) -> float:
    """Largest spectral width among the four step Hamiltonians."""
    return max(float(np.ptp(np.linalg.eigvalsh(h.toarray()))) for h in step_hamiltonians(ops, kappa))


def predicted_coefficients(kappa: float, mass: float, omega: float) -> tuple[float, float]:
    lam = np.pi * kappa / (8.0 * mass * omega)
    return lam, -(8.0 * mass / 3.0) * lam**2


def fit_operators(delta: np.ndarray, ops: list[np.ndarray]) -> tuple[np.ndarray, float]:
    """Least-squares coefficients of ``delta`` on the given operators (Frobenius metric)."""
    gram = np.array([[np.vdot(a, b).real for b in ops] for a in ops])
    rhs = np.array([np.vdot(a, delta).real for a in ops])
    coeff = np.linalg.solve(gram, rhs)
    resid = delta - sum(c * o for c, o in zip(coeff, ops))
    return coeff, float(np.linalg.norm(resid))


def stroboscopic_sequence(spec: StroboscopicSpec, ops: LatticeOperators | None = None) -> FloquetResult:
    """Floquet operator of one cycle and fitted spin-orbit coefficients.

    The stroboscopic Hamiltonian ``H_F`` (from the log of the cycle unitary)
    contains a first-order kick term set by the choice of cycle origin; it is
    removed by ``H_eff = e^{i K} H_F e^{-i K}`` with
    ``K = -(T/4) ((2 T_x - 2 T_y)/4 + V/2)`` before fitting.
    """
    if spec.size < 8:
        warnings.warn(f"lattice side {spec.size} < 8 leaves few low-momentum states for the fit",
                      stacklevel=2)
    ops = ops or LatticeOperators(spec.size, spec.mass)
    steps = step_hamiltonians(ops, spec.kappa)
    dense_steps = [h.toarray() for h in steps]
    bandwidth = max(float(np.ptp(np.linalg.eigvalsh(h))) for h in dense_steps)
    omega = spec.omega if spec.omega is not None else spec.bandwidth_factor * bandwidth
    period = 2 * np.pi / omega
    tau = period / 4
    # Largest accumulated phase per cycle must stay inside the principal branch.
    if bandwidth * period >= 2 * np.pi:
        raise BranchAmbiguityError(
            f"omega = {omega:.4g} is below the bandwidth {bandwidth:.4g}; the effective Hamiltonian "
            "is ambiguous, increase omega")
    dim = dense_steps[0].shape[0]
    u = np.eye(dim, dtype=complex)
    for h in dense_steps:
        u = expm_hermitian(h, tau, angular=True) @ u
    phases, gen = unitary_log(u)
    h_floquet = gen / period
    v = ops.gradient(spec.kappa).toarray()
    kick = -tau * (0.5 * (ops.tx - ops.ty).toarray() + 0.5 * v)
    rot = expm_hermitian(kick, -1.0, angular=True)  # exp(+i K)
    h_eff = rot @ h_floquet @ rot.conj().T
    h0 = ops.kinetic.toarray()
    o_r = ops.rashba_operator().toarray()
    o_l = ops.lz_sz_operator().toarray()
    ident = np.eye(dim)
    coeff, resid = fit_operators(h_eff - h0, [o_r, o_l, ident])
    coeff_f, resid_f = fit_operators(h_floquet - h0, [o_r, o_l, ident])
    lam, omega_so = predicted_coefficients(spec.kappa, spec.mass, omega)
    target = h0 + lam * o_r + omega_so * o_l + coeff[2] * ident
    soc_norm = float(np.linalg.norm(lam * o_r + omega_so * o_l))
    deviation = float(np.linalg.norm(h_eff - target))
    fit = {
        "omega": float(omega),
        "bandwidth": bandwidth,
        "omega_over_bandwidth": float(omega / bandwidth),
        "predicted_rashba": float(lam),
        "predicted_spin_orbit": float(omega_so),
        "energy_offset": float(coeff[2]),
        "fit_residual": resid,
        "deviation_from_target": deviation,
        "relative_deviation": deviation / soc_norm if soc_norm > 0 else deviation,
        "stroboscopic_rashba": float(coeff_f[0]),
        "stroboscopic_spin_orbit": float(coeff_f[1]),
        "stroboscopic_fit_residual": resid_f,
        "lattice_size": spec.size,
        "kappa": spec.kappa,
        "mass": spec.mass,
        "n_cycles": spec.n_cycles,
    }
    floquet_op = np.linalg.matrix_power(u, spec.n_cycles) if spec.n_cycles > 1 else u
    return FloquetResult(
        floquet_operator=floquet_op,
        effective_hamiltonian=h_floquet,
        quasienergies=np.sort(phases / period),
        period=float(period),
        unitarity_error=unitarity_error(u),
        hermiticity_error=hermiticity_error(h_floquet),
        rashba_coefficient=float(coeff[0]),
        spin_orbit_coefficient=float(coeff[1]),
        fit=fit,
        kick_corrected_hamiltonian=h_eff,
    )
