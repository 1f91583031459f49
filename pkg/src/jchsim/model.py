"""Device Hamiltonians: Jaynes-Cummings-Hubbard lattices and driven two-site systems.

Frequencies are in MHz. Qubit energies use the number form ``w * c^dag c``,
which differs from the ``(w / 2) sigma_z`` form by a constant.
Mode labels are ``a{m}@{site}`` with ``m`` counted from 1; qubit labels are
``{spin}@{site}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionError
from .hilbert import (
    Operator,
    HilbertSpace,
    ModeSpec,
    QUBIT,
    BOSON,
    build_space,
    embed,
    hermiticity_error,
)
from .lattice import LatticeSpec, chain

MAX_DIMENSION = 2**26
COUPLING_MODELS = ("rwa", "full_rabi")
DEFAULT_SPIN_LABELS = {1: ("q",), 2: ("down", "up")}


def qubit_label(spin: str, site: int) -> str:
    return f"{spin}@{site}"


def mode_label(mode: int, site: int) -> str:
    return f"a{mode}@{site}"


@dataclass(frozen=True)
class SiteSpec:
    """Qubits and resonator modes of one lattice site.

    ``couplings[s][m]`` is the static coupling between qubit ``s`` and mode
    ``m`` (both zero-based positions).
    """

    qubit_freqs: tuple[float, ...]
    mode_freqs: tuple[float, ...]
    couplings: tuple[tuple[float, ...], ...] = ()
    coupling_model: str = "rwa"
    qubit_labels: tuple[str, ...] | None = None
    mode_numbers: tuple[int, ...] | None = None

    def __post_init__(self):
        qf = tuple(float(w) for w in self.qubit_freqs)
        mf = tuple(float(w) for w in self.mode_freqs)
        if not qf and not mf:
            raise ConfigError("a site needs at least one qubit or mode")
        if any(w <= 0 for w in qf + mf):
            raise ConfigError("all qubit and mode frequencies must be > 0")
        if self.coupling_model not in COUPLING_MODELS:
            raise ConfigError(f"coupling_model must be one of {COUPLING_MODELS}")
        g = np.zeros((len(qf), len(mf))) if not self.couplings else np.array(self.couplings, dtype=float)
        if g.shape != (len(qf), len(mf)):
            raise ConfigError(f"couplings must have shape ({len(qf)}, {len(mf)}), got {g.shape}")
        labels = self.qubit_labels
        if labels is None:
            labels = DEFAULT_SPIN_LABELS.get(len(qf), tuple(f"q{k}" for k in range(len(qf))))
        labels = tuple(labels)
        if len(labels) != len(qf) or len(set(labels)) != len(labels):
            raise ConfigError("qubit_labels must be unique and match qubit_freqs")
        numbers = tuple(range(1, len(mf) + 1)) if self.mode_numbers is None else tuple(
            int(n) for n in self.mode_numbers)
        if len(numbers) != len(mf) or any(n < 1 for n in numbers):
            raise ConfigError("mode_numbers must be positive and match mode_freqs")
        object.__setattr__(self, "qubit_freqs", qf)
        object.__setattr__(self, "mode_freqs", mf)
        object.__setattr__(self, "couplings", tuple(tuple(float(v) for v in row) for row in g))
        object.__setattr__(self, "qubit_labels", labels)
        object.__setattr__(self, "mode_numbers", numbers)

    @property
    def coupling_matrix(self) -> np.ndarray:
        return np.array(self.couplings, dtype=float).reshape(len(self.qubit_freqs), len(self.mode_freqs))

    def spin_position(self, spin: str) -> int:
        try:
            return self.qubit_labels.index(spin)
        except ValueError:
            raise ConfigError(f"site has no qubit labelled {spin!r}") from None

    def dispersive_ratios(self) -> np.ndarray:
        """``|g / (w_mode - w_qubit)|`` for every coupled pair (inf when resonant)."""
        g = self.coupling_matrix
        detuning = np.subtract.outer(np.array(self.qubit_freqs), np.array(self.mode_freqs))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(g != 0, np.abs(g) / np.abs(detuning), 0.0)
        return ratio


def jc_site(qubit_freq: float, mode_freq: float, g: float, coupling_model: str = "rwa") -> SiteSpec:
    return SiteSpec((qubit_freq,), (mode_freq,), ((g,),), coupling_model)


def two_spin_site(w_down: float, w_up: float, w_r1: float, w_r2: float,
                  g_down: float, g_up: float, coupling_model: str = "rwa") -> SiteSpec:
    """Two qubits (down, up) and two modes; down couples to mode 1, up to mode 2."""
    return SiteSpec((w_down, w_up), (w_r1, w_r2), ((g_down, 0.0), (0.0, g_up)), coupling_model)


@dataclass(frozen=True)
class InterSiteCoupling:
    """Per-mode photon hopping between neighbouring sites.

    With ``scale_by_mode_index`` the hopping of a mode with mode number ``n``
    is ``hoppings[0] * n``.
    """

    hoppings: tuple[float, ...]
    scale_by_mode_index: bool = False

    def __post_init__(self):
        hops = tuple(float(np.real(j)) for j in np.atleast_1d(self.hoppings))
        if not hops:
            raise ConfigError("at least one hopping value is required")
        object.__setattr__(self, "hoppings", hops)

    def for_modes(self, site: SiteSpec) -> np.ndarray:
        n_modes = len(site.mode_freqs)
        if self.scale_by_mode_index:
            return self.hoppings[0] * np.array(site.mode_numbers, dtype=float)
        if len(self.hoppings) == 1:
            return np.full(n_modes, self.hoppings[0])
        if len(self.hoppings) != n_modes:
            raise ConfigError(f"{len(self.hoppings)} hopping values for {n_modes} modes")
        return np.array(self.hoppings)


@dataclass(frozen=True)
class DriveSpec:
    """Cosine modulation ``amplitude * cos(2 pi frequency t + phase)`` of one qubit-mode coupling."""

    site: int
    spin: str
    mode: int
    amplitude: float
    frequency: float
    phase: float = 0.0
    waveform: str = "cosine"

    def __post_init__(self):
        if self.amplitude < 0:
            raise ConfigError("drive amplitude must be >= 0")
        if self.waveform != "cosine":
            raise ConfigError("only cosine drives are supported")


def _site_list(lattice: LatticeSpec, site: SiteSpec | Sequence[SiteSpec]) -> list[SiteSpec]:
    if isinstance(site, SiteSpec):
        return [site] * lattice.num_sites
    sites = list(site)
    if len(sites) != lattice.num_sites:
        raise ConfigError(f"{len(sites)} site specs for {lattice.num_sites} lattice sites")
    shape = {(len(s.qubit_freqs), len(s.mode_freqs), s.qubit_labels) for s in sites}
    if len(shape) != 1:
        raise ConfigError("all sites must share qubit labels and mode count")
    return sites


def device_space(lattice: LatticeSpec, site: SiteSpec | Sequence[SiteSpec],
                 photon_cutoff: int = 1) -> HilbertSpace:
    sites = _site_list(lattice, site)
    per_site = 2 ** len(sites[0].qubit_freqs) * (photon_cutoff + 1) ** len(sites[0].mode_freqs)
    if float(per_site) ** lattice.num_sites > MAX_DIMENSION:
        raise DimensionError(
            f"Hilbert space dimension {per_site}^{lattice.num_sites} exceeds the limit 2^26")
    modes = []
    for i, s in enumerate(sites):
        modes += [ModeSpec(QUBIT, qubit_label(q, i)) for q in s.qubit_labels]
        modes += [ModeSpec(BOSON, mode_label(m + 1, i), photon_cutoff) for m in range(len(s.mode_freqs))]
    return build_space(modes)


def _ladder(space: HilbertSpace, label: str) -> sp.csr_matrix:
    n = space.mode(label).dimension
    local = sp.diags(np.sqrt(np.arange(1, n, dtype=float)), offsets=1, shape=(n, n), format="csr")
    return embed(space, label, local)


def coupling_operator(space: HilbertSpace, qlabel: str, mlabel: str, model: str) -> sp.csr_matrix:
    """``c^dag a + c a^dag`` (rwa) or ``sigma_x (a + a^dag)`` (full_rabi)."""
    c = _ladder(space, qlabel)
    a = _ladder(space, mlabel)
    if model == "rwa":
        term = c.T @ a
        return (term + term.conj().T).tocsr()
    sx = c + c.T
    return (sx @ (a + a.T)).tocsr()


def build_jch(lattice: LatticeSpec, site: SiteSpec | Sequence[SiteSpec],
              coupling: InterSiteCoupling, photon_cutoff: int = 1,
              space: HilbertSpace | None = None) -> Operator:
    """Static JCH Hamiltonian of a lattice of multi-qubit multi-mode sites."""
    sites = _site_list(lattice, site)
    if space is None:
        space = device_space(lattice, sites, photon_cutoff)
    occ = space.occupations
    diag = np.zeros(space.dimension)
    for i, s in enumerate(sites):
        for q, w in zip(s.qubit_labels, s.qubit_freqs):
            diag += w * occ[:, space.mode_position(qubit_label(q, i))]
        for m, w in enumerate(s.mode_freqs):
            diag += w * occ[:, space.mode_position(mode_label(m + 1, i))]
    mat = sp.diags(diag.astype(complex), format="csr")
    for i, s in enumerate(sites):
        g = s.coupling_matrix
        for qi, q in enumerate(s.qubit_labels):
            for m in range(len(s.mode_freqs)):
                if g[qi, m] != 0:
                    mat = mat + g[qi, m] * coupling_operator(
                        space, qubit_label(q, i), mode_label(m + 1, i), s.coupling_model)
    hops = coupling.for_modes(sites[0])
    for i, j in lattice.edges:
        for m, jm in enumerate(hops):
            if jm != 0:
                ai = _ladder(space, mode_label(m + 1, i))
                aj = _ladder(space, mode_label(m + 1, j))
                term = ai.T @ aj
                mat = mat + jm * (term + term.conj().T)
    return Operator(space, mat.tocsr(), hermitian_hint=True)


@dataclass(frozen=True)
class DriveTerm:
    """``amplitude * cos(2 pi frequency t + phase) * operator``."""

    operator: sp.csr_matrix
    amplitude: float
    frequency: float
    phase: float
    label: str = ""

    def coefficient(self, t):
        return self.amplitude * np.cos(2 * np.pi * self.frequency * np.asarray(t) + self.phase)


class DrivenHamiltonian:
    """Static part plus cosine-modulated Hermitian terms. Evaluation is pure."""

    def __init__(self, static: Operator, terms: Sequence[DriveTerm] = ()):
        self.static = static
        self.terms = tuple(terms)
        self.space = static.space
        for term in self.terms:
            if term.operator.shape != static.shape:
                raise DimensionError("drive operator shape does not match the static part")

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def matrix(self, t: float) -> sp.csr_matrix:
        mat = self.static.matrix.copy()
        for term in self.terms:
            mat = mat + float(term.coefficient(t)) * term.operator
        return mat.tocsr()

    def __call__(self, t: float) -> Operator:
        return Operator(self.space, self.matrix(t))

    def coefficients(self, times: np.ndarray) -> np.ndarray:
        """Drive coefficients, shape ``(n_terms, len(times))``."""
        times = np.asarray(times, dtype=float)
        if not self.terms:
            return np.zeros((0, times.size))
        return np.array([term.coefficient(times) for term in self.terms])

    def frequencies(self) -> list[float]:
        return [t.frequency for t in self.terms if t.amplitude != 0 and t.frequency != 0]

    def period(self, max_denominator: int = 10**6) -> float | None:
        """Common period of all drive tones, or None when static."""
        freqs = self.frequencies()
        if not freqs:
            return None
        fracs = [Fraction(abs(f)).limit_denominator(max_denominator) for f in freqs]
        common = fracs[0]
        for fr in fracs[1:]:
            num = np.gcd(common.numerator * fr.denominator, fr.numerator * common.denominator)
            common = Fraction(int(num), common.denominator * fr.denominator)
        return float(1 / common)

    def shifted(self, t0: float) -> "DrivenHamiltonian":
        """Hamiltonian with its time origin moved: ``H_new(t) = H(t + t0)``."""
        terms = [DriveTerm(t.operator, t.amplitude, t.frequency,
                           t.phase + 2 * np.pi * t.frequency * t0, t.label) for t in self.terms]
        return DrivenHamiltonian(self.static, terms)

    def restrict(self, projection) -> "DrivenHamiltonian":
        static = projection.restrict(self.static)
        iso = projection._isometry
        terms = [DriveTerm((iso.T @ t.operator @ iso).tocsr(), t.amplitude, t.frequency, t.phase, t.label)
                 for t in self.terms]
        return DrivenHamiltonian(static, terms)

    def fourier(self) -> "FourierHamiltonian":
        comps: dict[float, sp.csr_matrix] = {0.0: self.static.matrix}
        for t in self.terms:
            for sign in (1.0, -1.0):
                nu = sign * t.frequency
                block = (0.5 * t.amplitude * np.exp(1j * sign * t.phase)) * t.operator
                comps[nu] = comps[nu] + block if nu in comps else block
        return FourierHamiltonian(self.space, comps)

    def hermiticity_error(self, t: float) -> float:
        return hermiticity_error(self.matrix(t))


@dataclass
class FourierHamiltonian:
    """``H(t) = sum_nu M_nu exp(2 pi i nu t)`` with ``M_{-nu} = M_nu^dagger``."""

    space: object
    components: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def matrix(self, t: float) -> sp.csr_matrix:
        mat = sp.csr_matrix((self.dimension, self.dimension), dtype=complex)
        for nu, m in self.components.items():
            mat = mat + np.exp(2j * np.pi * nu * t) * m
        return mat.tocsr()

    def __call__(self, t: float) -> Operator:
        return Operator(self.space, self.matrix(t))

    def frequencies(self) -> list[float]:
        return sorted(self.components)


def build_driven_two_site(sites: SiteSpec | Sequence[SiteSpec], drives: Sequence[DriveSpec],
                          coupling: InterSiteCoupling, photon_cutoff: int = 1) -> DrivenHamiltonian:
    """Two coupled sites whose qubit-mode couplings are cosine modulated."""
    lattice = chain(2)
    site_list = _site_list(lattice, sites)
    static = build_jch(lattice, site_list, coupling, photon_cutoff)
    space = static.space
    terms = []
    for d in drives:
        if d.site not in (0, 1):
            raise ConfigError(f"drive on site {d.site}: the driven system has sites 0 and 1")
        s = site_list[d.site]
        if d.spin not in s.qubit_labels:
            raise ConfigError(f"drive targets qubit {d.spin!r} absent from site {d.site}")
        if not 1 <= d.mode <= len(s.mode_freqs):
            raise ConfigError(f"drive targets mode {d.mode} absent from site {d.site}")
        op = coupling_operator(space, qubit_label(d.spin, d.site), mode_label(d.mode, d.site),
                               s.coupling_model)
        label = f"{d.spin}-a{d.mode}@{d.site}"
        terms.append(DriveTerm(op, float(d.amplitude), float(d.frequency), float(d.phase), label))
    return DrivenHamiltonian(static, terms)


# -- presets -----------------------------------------------------------------


class Preset(NamedTuple):
    site: SiteSpec
    coupling: InterSiteCoupling
    drives: list
    metadata: dict


def loop_drive_frequencies(site: SiteSpec, detuning: float) -> dict[str, float]:
    """Drive tones for the four-drive loop with both mode detunings equal to ``detuning``.

    Satisfies ``w1 + w2 = w4 - w3 = w_up - w_down``.
    """
    w_down, w_up = site.qubit_freqs[:2]
    w_r1, w_r2 = site.mode_freqs[:2]
    w1 = w_r1 - w_down - detuning
    w4 = w_r2 - w_down - detuning
    split = w_up - w_down
    return {"w1": w1, "w2": split - w1, "w3": w4 - split, "w4": w4}


def loop_drives(site: SiteSpec, amplitudes: Sequence[float], detuning: float,
                phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0)) -> list[DriveSpec]:
    """The four-drive spin-changing loop between sites 0 (i) and 1 (j)."""
    f = loop_drive_frequencies(site, detuning)
    a1, a2, a3, a4 = amplitudes
    p1, p2, p3, p4 = phases
    down, up = site.qubit_labels[:2]
    return [
        DriveSpec(0, down, 1, a1, f["w1"], p1),
        DriveSpec(1, up, 1, a2, f["w2"], p2),
        DriveSpec(0, up, 2, a3, f["w3"], p3),
        DriveSpec(1, down, 2, a4, f["w4"], p4),
    ]


LIFETIME_METADATA = {"excitation_lifetime_us": [10.0, 100.0]}


def preset(name: str) -> Preset:
    if name == "typical_device":
        site = two_spin_site(3000.0, 7000.0, 4000.0, 8000.0, 100.0, 100.0)
        coupling = InterSiteCoupling((30.0, 30.0))
        drive_detuning = 200.0
        drives = loop_drives(site, (100.0,) * 4, drive_detuning)
        meta = {"raman_detuning": 100.0, "drive_matrix_element": 50.0,
                "drive_detuning": drive_detuning, **LIFETIME_METADATA}
        return Preset(site, coupling, drives, meta)
    if name == "resonant_polariton":
        site = jc_site(4000.0, 4000.0, 100.0)
        return Preset(site, InterSiteCoupling((30.0,)), [], dict(LIFETIME_METADATA))
    if name == "dispersive_soc":
        site = two_spin_site(3000.0, 7000.0, 4000.0, 8000.0, 100.0, 100.0)
        coupling = InterSiteCoupling((40.0, 40.0))
        drives = loop_drives(site, (100.0,) * 4, 100.0)
        meta = {"drive_detuning": 100.0, **LIFETIME_METADATA}
        return Preset(site, coupling, drives, meta)
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("typical_device", "resonant_polariton", "dispersive_soc")
