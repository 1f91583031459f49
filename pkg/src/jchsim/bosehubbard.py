"""Spinful Bose-Hubbard models: hopping matrices, Zeeman terms and on-site interactions.

Spin components are ordered ``m = +s, +s-1, ..., -s``, so index 0 is spin up.
The Hamiltonian is

    H = -sum_bonds sum_ab (t_ab b^dag_{i a} b_{j b} + h.c.)
        + sum_i sum_ab Z^{(i)}_ab b^dag_{i a} b_{i b} + interaction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, HermiticityError
from .hilbert import Operator
from .lattice import LatticeSpec

INTERACTIONS = ("hard_core", "spin_independent", "tensor", "none")


def spin_matrices(spin_dim: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standard spin-s matrices (Sx, Sy, Sz) with ``2s + 1 = spin_dim``."""
    if spin_dim < 1:
        raise ConfigError("spin_dim must be >= 1")
    s = (spin_dim - 1) / 2
    m = s - np.arange(spin_dim)
    sz = np.diag(m).astype(complex)
    # <m+1| S+ |m> = sqrt(s(s+1) - m(m+1)); row index k-1 holds m+1
    sp_ = np.zeros((spin_dim, spin_dim), dtype=complex)
    for k in range(1, spin_dim):
        sp_[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sx = (sp_ + sp_.conj().T) / 2
    sy = (sp_ - sp_.conj().T) / 2j
    return sx, sy, sz


def build_zeeman(spin_dim: int, lande_g: float, b_vector: Sequence[float]) -> np.ndarray:
    """``-lande_g * (B . S)`` as a Hermitian matrix."""
    if spin_dim < 2:
        raise ConfigError("Zeeman terms need spin_dim >= 2")
    b = np.asarray(b_vector, dtype=float)
    if b.shape != (3,):
        raise ConfigError("B must be a 3-vector")
    sx, sy, sz = spin_matrices(spin_dim)
    return -lande_g * (b[0] * sx + b[1] * sy + b[2] * sz)


@dataclass
class EffectiveModel:
    """Spinful hopping model on a set of bonds.

    ``bonds[(i, j)]`` is the matrix ``t`` with ``-t_ab b^dag_{i a} b_{j b}``;
    the reversed bond carries ``t^dagger``. ``zeeman`` is a single matrix used
    on every site or a mapping from site to matrix.
    """

    spin_dim: int
    bonds: dict = field(default_factory=dict)
    zeeman: object = None
    interaction: str = "hard_core"
    interaction_strength: object = 0.0
    validity: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.interaction not in INTERACTIONS:
            raise ConfigError(f"interaction must be one of {INTERACTIONS}")
        d = self.spin_dim
        bonds = {}
        for (i, j), t in self.bonds.items():
            t = np.atleast_2d(np.asarray(t, dtype=complex))
            if t.shape != (d, d):
                raise ConfigError(f"bond ({i}, {j}) matrix has shape {t.shape}, expected {(d, d)}")
            if i == j:
                raise ConfigError(f"bond ({i}, {j}) is a self-loop")
            key, mat = ((i, j), t) if i < j else ((j, i), t.conj().T)
            if key in bonds and not np.allclose(bonds[key], mat, atol=1e-12):
                raise HermiticityError(f"bond {key} given in both orientations without t_ji = t_ij^dagger")
            bonds[key] = mat
        self.bonds = bonds
        zeeman = self.zeeman
        if zeeman is None:
            zeeman = np.zeros((d, d), dtype=complex)
        if isinstance(zeeman, Mapping):
            zeeman = {int(k): np.asarray(v, dtype=complex) for k, v in zeeman.items()}
            mats = list(zeeman.values())
        else:
            zeeman = np.asarray(zeeman, dtype=complex)
            mats = [zeeman]
        for z in mats:
            if z.shape != (d, d):
                raise ConfigError(f"Zeeman matrix shape {z.shape}, expected {(d, d)}")
            if np.max(np.abs(z - z.conj().T)) > 1e-12:
                raise HermiticityError("Zeeman matrix is not Hermitian")
        self.zeeman = zeeman

    def bond_matrix(self, i: int, j: int) -> np.ndarray:
        if (i, j) in self.bonds:
            return self.bonds[(i, j)]
        if (j, i) in self.bonds:
            return self.bonds[(j, i)].conj().T
        return np.zeros((self.spin_dim, self.spin_dim), dtype=complex)

    def onsite(self, site: int) -> np.ndarray:
        if isinstance(self.zeeman, dict):
            return self.zeeman.get(site, np.zeros((self.spin_dim, self.spin_dim), dtype=complex))
        return self.zeeman

    def loop_flux(self, i: int = 0, j: int = 1) -> float:
        """Phase accumulated on down_i -> up_j -> up_i -> down_j -> down_i (spin-1/2 only)."""
        if self.spin_dim != 2:
            raise ConfigError("loop flux is defined for spin-1/2 models")
        t = self.bond_matrix(i, j)
        up, down = 0, 1
        # <target|H|source> = -t or -conj(t) depending on direction
        amps = [-np.conj(t[down, up]), -t[up, up], -np.conj(t[up, down]), -t[down, down]]
        return float(np.angle(np.prod(amps)))

    def single_particle_matrix(self, num_sites: int) -> np.ndarray:
        """One-particle Hamiltonian in the (site, spin) basis, site-major."""
        d = self.spin_dim
        h = np.zeros((num_sites * d, num_sites * d), dtype=complex)
        for site in range(num_sites):
            h[site * d:(site + 1) * d, site * d:(site + 1) * d] += self.onsite(site)
        for (i, j), t in self.bonds.items():
            h[i * d:(i + 1) * d, j * d:(j + 1) * d] -= t
            h[j * d:(j + 1) * d, i * d:(i + 1) * d] -= t.conj().T
        return h

    @classmethod
    def uniform(cls, lattice: LatticeSpec, hopping: np.ndarray, zeeman=None, **kwargs) -> "EffectiveModel":
        hopping = np.atleast_2d(np.asarray(hopping, dtype=complex))
        bonds = {edge: hopping for edge in lattice.edges}
        return cls(spin_dim=hopping.shape[0], bonds=bonds, zeeman=zeeman, **kwargs)

    def to_dict(self) -> dict:
        def cplx(m):
            m = np.asarray(m)
            return {"re": m.real.tolist(), "im": m.imag.tolist()}

        zeeman = ({str(k): cplx(v) for k, v in sorted(self.zeeman.items())}
                  if isinstance(self.zeeman, dict) else cplx(self.zeeman))
        strength = self.interaction_strength
        if isinstance(strength, np.ndarray):
            strength = cplx(strength)
        return {
            "spin_dim": self.spin_dim,
            "spin_order": "m = +s ... -s",
            "bonds": [{"i": i, "j": j, "t": cplx(t)} for (i, j), t in sorted(self.bonds.items())],
            "zeeman": zeeman,
            "interaction": self.interaction,
            "interaction_strength": strength,
            "validity": self.validity,
        }


class BosonBasis:
    """Fock basis of spinful bosons with a per-site occupancy cap and optional fixed N."""

    def __init__(self, num_sites: int, spin_dim: int, max_per_site: int, n_particles: int | None = None):
        if max_per_site < 1:
            raise ConfigError("max_per_site must be >= 1")
        self.num_sites = num_sites
        self.spin_dim = spin_dim
        self.max_per_site = max_per_site
        self.n_particles = n_particles
        local = [c for c in itertools.product(range(max_per_site + 1), repeat=spin_dim)
                 if sum(c) <= max_per_site]
        configs: list[tuple[int, ...]] = []

        def extend(prefix: tuple[int, ...], site: int, used: int) -> None:
            if site == num_sites:
                if n_particles is None or used == n_particles:
                    configs.append(prefix)
                return
            for c in local:
                total = used + sum(c)
                if n_particles is not None and total > n_particles:
                    continue
                extend(prefix + c, site + 1, total)

        extend((), 0, 0)
        self.states = np.array(configs, dtype=np.int64).reshape(len(configs), num_sites * spin_dim)
        self.index = {c: k for k, c in enumerate(configs)}
        self.dimension = len(configs)

    def mode(self, site: int, spin: int) -> int:
        return site * self.spin_dim + spin

    def allowed(self, config: Sequence[int]) -> bool:
        c = np.asarray(config).reshape(self.num_sites, self.spin_dim)
        return bool(np.all(c.sum(axis=1) <= self.max_per_site))

    def hop(self, target: int, source: int) -> sp.csr_matrix:
        """Matrix of ``b^dag_target b_source`` restricted to the basis."""
        rows, cols, vals = [], [], []
        for k, cfg in enumerate(self.states):
            ns = cfg[source]
            if ns == 0:
                continue
            new = cfg.copy()
            amp = np.sqrt(ns)
            new[source] -= 1
            amp *= np.sqrt(new[target] + 1)
            new[target] += 1
            key = tuple(int(v) for v in new)
            if key in self.index:
                rows.append(self.index[key])
                cols.append(k)
                vals.append(amp)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.dimension, self.dimension), dtype=complex)

    def number(self, mode: int) -> sp.csr_matrix:
        return sp.diags(self.states[:, mode].astype(complex), format="csr")

    def site_occupation(self, site: int) -> np.ndarray:
        d = self.spin_dim
        return self.states[:, site * d:(site + 1) * d].sum(axis=1)

    def basis_vector(self, config: Sequence[int]) -> np.ndarray:
        key = tuple(int(v) for v in config)
        if key not in self.index:
            raise ConfigError(f"configuration {key} not in basis")
        vec = np.zeros(self.dimension, dtype=complex)
        vec[self.index[key]] = 1.0
        return vec


def build_effective_bh(model: EffectiveModel, lattice: LatticeSpec, max_per_site: int = 1,
                       n_particles: int | None = None) -> Operator:
    """Many-body operator of an EffectiveModel on the lattice."""
    if model.interaction == "hard_core" and max_per_site != 1:
        raise ConfigError("hard-core models require max_per_site = 1")
    for i, j in model.bonds:
        if max(i, j) >= lattice.num_sites:
            raise ConfigError(f"bond ({i}, {j}) outside the lattice")
    basis = BosonBasis(lattice.num_sites, model.spin_dim, max_per_site, n_particles)
    d = model.spin_dim
    dim = basis.dimension
    mat = sp.csr_matrix((dim, dim), dtype=complex)
    for (i, j), t in model.bonds.items():
        for a in range(d):
            for b in range(d):
                if t[a, b] != 0:
                    term = basis.hop(basis.mode(i, a), basis.mode(j, b))
                    mat = mat - t[a, b] * term - np.conj(t[a, b]) * term.conj().T
    for site in range(lattice.num_sites):
        z = model.onsite(site)
        for a in range(d):
            for b in range(d):
                if z[a, b] != 0:
                    mat = mat + z[a, b] * basis.hop(basis.mode(site, a), basis.mode(site, b))
    if model.interaction == "spin_independent":
        u = float(model.interaction_strength)
        n = np.stack([basis.site_occupation(s) for s in range(lattice.num_sites)], axis=1)
        mat = mat + sp.diags((u * (n * (n - 1)).sum(axis=1)).astype(complex), format="csr")
    elif model.interaction == "tensor":
        u = np.asarray(model.interaction_strength, dtype=complex)
        if u.shape != (d,) * 4:
            raise ConfigError(f"interaction tensor must have shape {(d,) * 4}")
        for site in range(lattice.num_sites):
            for a, b, c, e in itertools.product(range(d), repeat=4):
                if u[a, b, c, e] != 0:
                    m_a, m_b, m_c, m_e = (basis.mode(site, x) for x in (a, b, c, e))
                    term = _two_body(basis, m_a, m_b, m_c, m_e)
                    mat = mat + u[a, b, c, e] * term
    op = Operator(_BasisSpace(basis), mat.tocsr())
    if op.hermiticity_error() > 1e-12 * max(1.0, op.max_abs()):
        raise HermiticityError("assembled Bose-Hubbard operator is not Hermitian")
    return Operator(op.space, op.matrix, hermitian_hint=True)


def _two_body(basis: BosonBasis, a: int, b: int, c: int, e: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for k, cfg in enumerate(basis.states):
        new = cfg.copy()
        amp = 1.0
        for mode, sign in ((e, -1), (c, -1), (b, 1), (a, 1)):
            if sign < 0:
                if new[mode] == 0:
                    amp = 0.0
                    break
                amp *= np.sqrt(new[mode])
                new[mode] -= 1
            else:
                amp *= np.sqrt(new[mode] + 1)
                new[mode] += 1
        if amp == 0.0:
            continue
        key = tuple(int(v) for v in new)
        if key in basis.index:
            rows.append(basis.index[key])
            cols.append(k)
            vals.append(amp)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dimension, basis.dimension), dtype=complex)


class _BasisSpace:
    """Adapter giving a BosonBasis the ``dimension`` attribute operators expect."""

    def __init__(self, basis: BosonBasis):
        self.basis = basis
        self.dimension = basis.dimension

    def __repr__(self) -> str:
        b = self.basis
        return f"BosonSpace(sites={b.num_sites}, spin_dim={b.spin_dim}, dim={b.dimension})"
