"""Labeled tensor-product Hilbert spaces for qubits and truncated bosonic modes.

Basis ordering is little-endian over the mode list: the first mode's
occupation varies fastest, so the flat index of an occupation tuple
``(n_0, n_1, ...)`` is ``sum_k n_k * stride_k`` with ``stride_0 = 1``.

Qubit basis is ``(ground, excited)``; ``sigma_z = diag(-1, +1)`` so the
excited state carries ``+1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionError, HermiticityError

HERMITIAN_TOL = 1e-12

QUBIT = "qubit"
BOSON = "bosonic"


@dataclass(frozen=True)
class ModeSpec:
    kind: str
    label: str
    photon_cutoff: int = 1

    def __post_init__(self):
        if self.kind not in (QUBIT, BOSON):
            raise ConfigError(f"mode kind must be 'qubit' or 'bosonic', got {self.kind!r}")
        if not self.label:
            raise ConfigError("mode label must be nonempty")
        if self.kind == BOSON and int(self.photon_cutoff) < 1:
            raise ConfigError(f"photon_cutoff must be >= 1 for mode {self.label!r}")

    @property
    def dimension(self) -> int:
        return 2 if self.kind == QUBIT else int(self.photon_cutoff) + 1


def qubit(label: str) -> ModeSpec:
    return ModeSpec(QUBIT, label)


def boson(label: str, cutoff: int = 1) -> ModeSpec:
    return ModeSpec(BOSON, label, cutoff)


class HilbertSpace:
    """Ordered product of modes with a bijective occupation <-> index map."""

    def __init__(self, modes: Sequence[ModeSpec]):
        modes = tuple(modes)
        if not modes:
            raise ConfigError("a Hilbert space needs at least one mode")
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            raise ConfigError("mode labels must be unique")
        self.modes = modes
        self.labels = tuple(labels)
        self.dims = np.array([m.dimension for m in modes], dtype=np.int64)
        self.strides = np.concatenate(([1], np.cumprod(self.dims[:-1]))).astype(np.int64)
        self.dimension = int(np.prod(self.dims, dtype=object))
        self._position = {lab: k for k, lab in enumerate(labels)}
        self._occupations: np.ndarray | None = None

    def __repr__(self) -> str:
        parts = ", ".join(f"{m.label}:{m.dimension}" for m in self.modes)
        return f"HilbertSpace([{parts}], dimension={self.dimension})"

    def mode_position(self, label: str) -> int:
        try:
            return self._position[label]
        except KeyError:
            raise ConfigError(f"unknown mode label {label!r}") from None

    def mode(self, label: str) -> ModeSpec:
        return self.modes[self.mode_position(label)]

    def index(self, occupation: Sequence[int]) -> int:
        occ = np.asarray(occupation, dtype=np.int64)
        if occ.shape != self.dims.shape or np.any(occ < 0) or np.any(occ >= self.dims):
            raise ConfigError(f"occupation {tuple(occupation)} outside the space")
        return int(occ @ self.strides)

    def occupation(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dimension:
            raise ConfigError(f"index {index} outside [0, {self.dimension})")
        return tuple(int(v) for v in (index // self.strides) % self.dims)

    @property
    def occupations(self) -> np.ndarray:
        """All basis occupations, shape ``(dimension, n_modes)``."""
        if self._occupations is None:
            idx = np.arange(self.dimension, dtype=np.int64)
            occ = (idx[:, None] // self.strides[None, :]) % self.dims[None, :]
            occ.setflags(write=False)
            self._occupations = occ
        return self._occupations

    def excitations(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def basis_vector(self, occupation: Sequence[int] | dict) -> np.ndarray:
        if isinstance(occupation, dict):
            occ = [0] * len(self.modes)
            for lab, n in occupation.items():
                occ[self.mode_position(lab)] = n
            occupation = occ
        vec = np.zeros(self.dimension, dtype=complex)
        vec[self.index(occupation)] = 1.0
        return vec

    def qubit_labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes if m.kind == QUBIT)

    def boson_labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes if m.kind == BOSON)


def build_space(modes: Iterable[ModeSpec]) -> HilbertSpace:
    return HilbertSpace(list(modes))


@dataclass(frozen=True)
class LabeledBasis:
    """A small explicit basis, e.g. the single-excitation qubit sector."""

    labels: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown basis label {label!r}") from None


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse complex matrix attached to a space.

    Arithmetic between operators requires the same space object.
    """

    space: object
    matrix: sp.csr_matrix
    hermitian_hint: bool = False

    def __post_init__(self):
        mat = sp.csr_matrix(self.matrix, dtype=complex)
        dim = self.space.dimension
        if mat.shape != (dim, dim):
            raise DimensionError(f"matrix shape {mat.shape} does not match space dimension {dim}")
        mat.sum_duplicates()
        object.__setattr__(self, "matrix", mat)
        if self.hermitian_hint:
            err = hermiticity_error(mat)
            if err > HERMITIAN_TOL * max(1.0, abs(mat).max() if mat.nnz else 1.0):
                raise HermiticityError(f"operator flagged Hermitian deviates by {err:.3e}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def _check(self, other: "Operator") -> None:
        if other.space is not self.space:
            raise DimensionError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix,
                            self.hermitian_hint and other.hermitian_hint)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix,
                            self.hermitian_hint and other.hermitian_hint)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix, self.hermitian_hint)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            real = np.isreal(scalar)
            return Operator(self.space, self.matrix * scalar, self.hermitian_hint and bool(real))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ other

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T.tocsr(), self.hermitian_hint)

    def commutator(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def hermiticity_error(self) -> float:
        return hermiticity_error(self.matrix)

    def as_hermitian(self) -> "Operator":
        return Operator(self.space, self.matrix, hermitian_hint=True)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def expect(self, state: np.ndarray) -> complex:
        return complex(np.vdot(state, self.matrix @ state))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.toarray())

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0


def hermiticity_error(matrix) -> float:
    """Largest entry of ``|M - M^dagger|``."""
    if sp.issparse(matrix):
        diff = (matrix - matrix.conj().T).tocsr()
        return float(abs(diff).max()) if diff.nnz else 0.0
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def embed(space: HilbertSpace, label: str, local: np.ndarray | sp.spmatrix) -> sp.csr_matrix:
    """Embed a single-mode matrix into the full space by Kronecker products."""
    pos = space.mode_position(label)
    local = sp.csr_matrix(local, dtype=complex)
    if local.shape != (space.dims[pos],) * 2:
        raise DimensionError(f"local matrix shape {local.shape} does not fit mode {label!r}")
    left = int(np.prod(space.dims[pos + 1:], dtype=np.int64))
    right = int(space.strides[pos])
    out = sp.kron(sp.identity(left, dtype=complex, format="csr"), local, format="csr")
    return sp.kron(out, sp.identity(right, dtype=complex, format="csr"), format="csr")


def _local_lower(mode: ModeSpec) -> sp.csr_matrix:
    n = mode.dimension
    return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), offsets=1, shape=(n, n), format="csr")


def ladder_op(space: HilbertSpace, mode_label: str, kind: str = "lower") -> Operator:
    """Lowering or raising operator of one mode (qubit or truncated boson)."""
    if kind not in ("lower", "raise"):
        raise ConfigError(f"ladder kind must be 'lower' or 'raise', got {kind!r}")
    local = _local_lower(space.mode(mode_label))
    if kind == "raise":
        local = local.T.tocsr()
    return Operator(space, embed(space, mode_label, local))


def number_op(space: HilbertSpace, mode_label: str) -> Operator:
    n = space.mode(mode_label).dimension
    local = sp.diags(np.arange(n, dtype=float), format="csr")
    return Operator(space, embed(space, mode_label, local), hermitian_hint=True)


def total_number_op(space: HilbertSpace) -> Operator:
    return Operator(space, sp.diags(space.excitations().astype(complex), format="csr"),
                    hermitian_hint=True)


PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}
# Rows/columns are (ground, excited); sigma_y is fixed by [sx, sy] = 2i sz with sz = diag(-1, +1).


def pauli_op(space: HilbertSpace, qubit_label: str, axis: str) -> Operator:
    mode = space.mode(qubit_label)
    if mode.kind != QUBIT:
        raise ConfigError(f"mode {qubit_label!r} is bosonic; Pauli operators need a qubit")
    if axis not in PAULI:
        raise ConfigError(f"Pauli axis must be x, y or z, got {axis!r}")
    return Operator(space, embed(space, qubit_label, PAULI[axis]), hermitian_hint=True)


def identity(space) -> Operator:
    return Operator(space, sp.identity(space.dimension, dtype=complex, format="csr"),
                    hermitian_hint=True)


class SubspaceProjection:
    """Compact basis of all parent states with a fixed total excitation number."""

    def __init__(self, parent: HilbertSpace, n_excitations: int):
        if int(n_excitations) < 0:
            raise ConfigError("excitation number must be >= 0")
        self.parent = parent
        self.n_excitations = int(n_excitations)
        self.indices = np.flatnonzero(parent.excitations() == self.n_excitations)
        self.index_map = {int(p): k for k, p in enumerate(self.indices)}
        self.dimension = int(self.indices.size)
        self.modes = parent.modes
        self.labels = parent.labels
        self.is_empty = self.dimension == 0
        cols = np.arange(self.dimension)
        self._isometry = sp.csr_matrix(
            (np.ones(self.dimension), (self.indices, cols)), shape=(parent.dimension, self.dimension)
        )

    def __repr__(self) -> str:
        return f"SubspaceProjection(N={self.n_excitations}, dimension={self.dimension})"

    @property
    def occupations(self) -> np.ndarray:
        return self.parent.occupations[self.indices]

    def mode_position(self, label: str) -> int:
        return self.parent.mode_position(label)

    def mode(self, label: str) -> ModeSpec:
        return self.parent.mode(label)

    def qubit_labels(self) -> tuple[str, ...]:
        return self.parent.qubit_labels()

    def boson_labels(self) -> tuple[str, ...]:
        return self.parent.boson_labels()

    def index(self, occupation: Sequence[int]) -> int:
        p = self.parent.index(occupation)
        if p not in self.index_map:
            raise ConfigError(f"occupation {tuple(occupation)} not in the N={self.n_excitations} subspace")
        return self.index_map[p]

    def basis_vector(self, occupation) -> np.ndarray:
        full = self.parent.basis_vector(occupation)
        out = self.restrict_state(full)
        if not np.any(out):
            raise ConfigError(f"occupation {occupation} not in the N={self.n_excitations} subspace")
        return out

    def restrict(self, op: Operator | sp.spmatrix) -> Operator:
        mat = op.matrix if isinstance(op, Operator) else sp.csr_matrix(op)
        if isinstance(op, Operator) and op.space is not self.parent:
            raise DimensionError("operator does not live on the projection's parent space")
        sub = (self._isometry.T @ mat @ self._isometry).tocsr()
        hint = bool(op.hermitian_hint) if isinstance(op, Operator) else False
        return Operator(self, sub, hint)

    def restrict_state(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state)[self.indices]

    def lift_state(self, state: np.ndarray) -> np.ndarray:
        out = np.zeros(self.parent.dimension, dtype=complex)
        out[self.indices] = state
        return out


def project_excitation_number(space: HilbertSpace, n: int) -> SubspaceProjection:
    return SubspaceProjection(space, n)


def with_cutoff(space: HilbertSpace, cutoff: int) -> HilbertSpace:
    """Same modes with every bosonic cutoff replaced."""
    return HilbertSpace([ModeSpec(m.kind, m.label, cutoff if m.kind == BOSON else 1)
                         for m in space.modes])


@dataclass
class CutoffConvergence:
    cutoffs: list[int]
    values: list[np.ndarray]
    differences: list[float] = field(default_factory=list)
    converged: bool = False


def check_cutoff_convergence(
    quantity: Callable[[int], np.ndarray],
    start: int = 1,
    tol: float = 1e-6,
    max_doublings: int = 4,
) -> CutoffConvergence:
    """Double the photon cutoff until ``quantity(cutoff)`` stops changing.

    ``quantity`` returns an array of fixed length (for instance the lowest
    few eigenvalues) for a given cutoff.
    """
    cutoff = max(1, int(start))
    values = [np.asarray(quantity(cutoff), dtype=float)]
    result = CutoffConvergence([cutoff], values)
    for _ in range(max_doublings):
        cutoff *= 2
        val = np.asarray(quantity(cutoff), dtype=float)
        diff = float(np.max(np.abs(val - result.values[-1])))
        result.cutoffs.append(cutoff)
        result.values.append(val)
        result.differences.append(diff)
        if diff < tol:
            result.converged = True
            break
    return result
