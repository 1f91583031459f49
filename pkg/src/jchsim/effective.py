"""Effective spin models from qubit-resonator devices.

Pipeline: static elimination of the resonator modes, rotating frame, rotating-wave
approximation, driven elimination, and combination into a spinful hopping model.
Also polariton-branch analysis and the two-tone Raman effective field.

All eliminations act on the single-excitation sector and are second order in the
coupling-to-detuning ratio.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .bosehubbard import EffectiveModel
from .errors import ConfigError, ResonanceError, SingularEliminationError, ValidityError
from .hilbert import (
    BOSON,
    QUBIT,
    HilbertSpace,
    LabeledBasis,
    Operator,
    SubspaceProjection,
    ladder_op,
    project_excitation_number,
)
from .lattice import LatticeSpec, chain, edge_coloring
from .model import (
    DrivenHamiltonian,
    DriveSpec,
    FourierHamiltonian,
    InterSiteCoupling,
    SiteSpec,
    build_driven_two_site,
    build_jch,
    mode_label,
    qubit_label,
)

STATIC_WARN_RATIO = 0.15
MAX_RATIO = 0.3
INTERFERENCE_FRACTION = 0.1


def _split_label(label: str) -> tuple[str, int]:
    name, site = label.rsplit("@", 1)
    return name, int(site)


# -- elimination -------------------------------------------------------------


@dataclass
class EliminationResult:
    """Second-order effective Hamiltonian on the single-excitation qubit sector."""

    kind: str
    effective_hamiltonian: Operator
    bare_energies: dict
    renormalized_params: dict
    spin_conserving_hops: dict
    spin_changing_hops: dict
    detunings: dict
    bare_hoppings: dict
    max_ratio: float
    validity: dict = field(default_factory=dict)
    truncation_order: int = 2

    @property
    def labels(self) -> tuple[str, ...]:
        return self.effective_hamiltonian.space.labels

    def matrix(self) -> np.ndarray:
        return self.effective_hamiltonian.toarray()

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix())

    def to_dict(self) -> dict:
        def cplx(z):
            return {"re": float(np.real(z)), "im": float(np.imag(z))}

        def hops(d):
            return [{"from": k[0], "to": k[1], "value": cplx(v)} for k, v in sorted(d.items())]

        mat = self.matrix()
        return {
            "kind": self.kind,
            "truncation_order": self.truncation_order,
            "labels": list(self.labels),
            "effective_hamiltonian": {"re": mat.real.tolist(), "im": mat.imag.tolist()},
            "renormalized_params": dict(sorted(self.renormalized_params.items())),
            "spin_conserving_hops": hops(self.spin_conserving_hops),
            "spin_changing_hops": hops(self.spin_changing_hops),
            "detunings": dict(sorted(self.detunings.items())),
            "max_ratio": self.max_ratio,
            "validity": self.validity,
        }


def _single_excitation(op: Operator) -> Operator:
    space = op.space
    if isinstance(space, SubspaceProjection):
        if space.n_excitations != 1:
            raise ConfigError("elimination works on the single-excitation subspace")
        return op
    if isinstance(space, HilbertSpace):
        return project_excitation_number(space, 1).restrict(op)
    raise ConfigError("operator must live on a device space or its single-excitation subspace")


def _eliminate(op: Operator, kind: str, max_ratio: float, warn_ratio: float | None,
               strict: bool, singular_tol: float = 1e-9) -> EliminationResult:
    op = _single_excitation(op)
    space = op.space
    occ = space.occupations
    labels = [space.labels[int(np.argmax(row))] for row in occ]
    kinds = [space.mode(lab).kind for lab in labels]
    p_idx = [k for k, kd in enumerate(kinds) if kd == QUBIT]
    q_idx = [k for k, kd in enumerate(kinds) if kd == BOSON]
    h = op.toarray()
    energies = np.real(np.diag(h))
    hpp = h[np.ix_(p_idx, p_idx)]
    v = h[np.ix_(p_idx, q_idx)]
    jqq = h[np.ix_(q_idx, q_idx)] - np.diag(energies[q_idx])
    if np.any(np.abs(h[np.ix_(q_idx, p_idx)] - v.conj().T) > 1e-12 * max(1.0, np.abs(h).max())):
        raise ValidityError("operator is not Hermitian")

    ep = energies[p_idx]
    eq = energies[q_idx]
    denom = ep[:, None] - eq[None, :]
    coupled = np.abs(v) > 0
    scale = max(1.0, np.abs(energies).max())
    if np.any(coupled & (np.abs(denom) < singular_tol * scale)):
        p, q = np.argwhere(coupled & (np.abs(denom) < singular_tol * scale))[0]
        raise SingularEliminationError(
            f"elimination singular: {labels[p_idx[p]]} is resonant with {labels[q_idx[q]]}")
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(coupled, 1.0 / denom, 0.0)
    ratios = np.abs(v) * np.abs(inv)
    max_r = float(ratios.max()) if ratios.size else 0.0
    symbol = "g/Delta" if kind == "static" else "f/(2 delta)"
    validity = {"ratio": max_r, "ratio_limit": max_ratio, "ratio_ok": max_r <= max_ratio}
    if max_r > max_ratio:
        msg = f"{kind} elimination invalid: {symbol} = {max_r:.3g} exceeds {max_ratio}"
        if strict:
            raise ValidityError(msg)
        warnings.warn(msg, stacklevel=3)
        validity["message"] = msg
    elif warn_ratio is not None and max_r > warn_ratio:
        warnings.warn(f"{symbol} = {max_r:.3g} above {warn_ratio}; second-order accuracy degrades",
                      stacklevel=3)
        validity["warning"] = f"{symbol} above {warn_ratio}"

    a = v * inv  # V_pq / (E_p - E_q)
    second = 0.5 * (a @ v.conj().T + (a @ v.conj().T).conj().T)
    third = a @ jqq @ a.conj().T
    heff = hpp + second + third
    heff = 0.5 * (heff + heff.conj().T)
    p_labels = tuple(labels[k] for k in p_idx)
    q_labels = [labels[k] for k in q_idx]
    basis = LabeledBasis(p_labels)
    eff_op = Operator(basis, sp.csr_matrix(heff), hermitian_hint=True)

    weight = np.abs(a) ** 2  # |V_pq|^2 / D_pq^2
    renorm = {}
    for k, lab in enumerate(p_labels):
        renorm[f"omega[{lab}]"] = float(np.real(heff[k, k]))
    for k, lab in enumerate(q_labels):
        shift = float(np.sum(np.abs(v[:, k]) ** 2 * np.real(-inv[:, k])))
        renorm[f"omega[{lab}]"] = float(eq[k] + shift)
    bare_hops = {}
    for k1 in range(len(q_labels)):
        for k2 in range(k1 + 1, len(q_labels)):
            jv = jqq[k1, k2]
            if abs(jv) == 0:
                continue
            name1, s1 = _split_label(q_labels[k1])
            name2, s2 = _split_label(q_labels[k2])
            key = f"J[{q_labels[k1]},{q_labels[k2]}]"
            factor = 1.0 - 0.5 * (weight[:, k1].sum() + weight[:, k2].sum())
            renorm[key] = float(np.real(jv * factor))
            bare_hops[(q_labels[k1], q_labels[k2])] = complex(jv)

    conserving, changing = {}, {}
    for k1, l1 in enumerate(p_labels):
        spin1, site1 = _split_label(l1)
        for k2, l2 in enumerate(p_labels):
            spin2, site2 = _split_label(l2)
            if site1 >= site2:
                continue
            val = complex(heff[k1, k2])
            if spin1 == spin2:
                conserving[(l1, l2)] = val
            else:
                changing[(l1, l2)] = val
    # transpose pairs with site1 > site2 are the conjugates; keep i < j only
    detunings = {}
    prefix = "Delta" if kind == "static" else "delta"
    for kq, lq in enumerate(q_labels):
        for kp, lp in enumerate(p_labels):
            if coupled[kp, kq]:
                detunings[f"{lq}-{lp}"] = float(eq[kq] - ep[kp])
                mode_name, _ = _split_label(lq)
                detunings.setdefault(f"{prefix}{mode_name[1:]}", float(eq[kq] - ep[kp]))
    return EliminationResult(
        kind=kind,
        effective_hamiltonian=eff_op,
        bare_energies={lab: float(e) for lab, e in zip(p_labels, ep)},
        renormalized_params=renorm,
        spin_conserving_hops=conserving,
        spin_changing_hops=changing,
        detunings=detunings,
        bare_hoppings=bare_hops,
        max_ratio=max_r,
        validity=validity,
    )


def eliminate_static(hamiltonian: Operator, max_ratio: float = MAX_RATIO,
                     warn_ratio: float = STATIC_WARN_RATIO, strict: bool = True) -> EliminationResult:
    """Remove static qubit-mode couplings to second order in g/Delta.

    ``hamiltonian`` is a static device operator (full space or its
    single-excitation subspace). Qubit energies shift by ``-g^2/Delta``,
    photon hopping renormalizes to ``J[1 - (gi^2 + gj^2)/(2 Delta^2)]`` and
    qubits acquire hops ``J gi gj / Delta^2``.
    """
    return _eliminate(hamiltonian, "static", max_ratio, warn_ratio, strict)


def eliminate_driven(rwa_hamiltonian: Operator, max_ratio: float = MAX_RATIO,
                     strict: bool = True) -> EliminationResult:
    """Eliminate the modes of a static rotating-frame Hamiltonian.

    Drive terms of strength ``f/2`` with detuning ``delta`` give qubit shifts
    ``-f^2/(4 delta)``, mode shifts ``+f^2/(4 delta)``, photon-hop
    renormalization ``J[1 - (fi^2 + fj^2)/(8 delta^2)]`` and spin-changing
    hops ``J fi fj / (4 delta^2)`` carrying the drive phases.
    """
    return _eliminate(rwa_hamiltonian, "driven", max_ratio, None, strict)


# -- rotating frame and RWA ----------------------------------------------------


def rotating_frame(hamiltonian: DrivenHamiltonian | FourierHamiltonian,
                   frame_freqs: Mapping[str, float]) -> FourierHamiltonian:
    """Move to the frame rotating at ``K = sum_l frame_freqs[l] * n_l``.

    Returns ``H'(t) = e^{2 pi i K t} H(t) e^{-2 pi i K t} - K`` as Fourier
    components. The lab-frame propagator is ``e^{-2 pi i K t} U'(t)``.
    """
    fh = hamiltonian.fourier() if isinstance(hamiltonian, DrivenHamiltonian) else hamiltonian
    space = fh.space
    occ = space.occupations
    k = np.zeros(space.dimension)
    for label, freq in frame_freqs.items():
        k += float(freq) * occ[:, space.mode_position(label)]
    comps: dict[float, sp.csr_matrix] = {}
    for nu, mat in fh.components.items():
        coo = sp.coo_matrix(mat)
        if coo.nnz == 0:
            continue
        shifted = nu + k[coo.row] - k[coo.col]
        keys = np.round(shifted, 9)
        for key in np.unique(keys):
            sel = keys == key
            block = sp.csr_matrix((coo.data[sel], (coo.row[sel], coo.col[sel])), shape=mat.shape)
            fk = float(key) + 0.0
            comps[fk] = comps[fk] + block if fk in comps else block
    kmat = sp.diags(k.astype(complex), format="csr")
    comps[0.0] = comps[0.0] - kmat if 0.0 in comps else -kmat
    return FourierHamiltonian(space, comps)


def frame_propagator_factor(space, frame_freqs: Mapping[str, float], t: float) -> np.ndarray:
    """Diagonal of ``exp(-2 pi i K t)``."""
    occ = space.occupations
    k = np.zeros(space.dimension)
    for label, freq in frame_freqs.items():
        k += float(freq) * occ[:, space.mode_position(label)]
    return np.exp(-2j * np.pi * k * t)


def apply_rwa(frame_hamiltonian: FourierHamiltonian, cutoff: float | None = None,
              static_tol: float = 1e-6) -> Operator:
    """Keep the static part of a rotating-frame Hamiltonian.

    Components rotating faster than ``cutoff`` are dropped; a component
    with ``static_tol < |nu| < cutoff`` is near resonant and raises.
    The default cutoff is half the smallest mode detuning in the frame.
    """
    fh = frame_hamiltonian
    if cutoff is None:
        cutoff = 0.5 * _min_frame_detuning(fh)
    kept = sp.csr_matrix((fh.dimension, fh.dimension), dtype=complex)
    for nu, mat in sorted(fh.components.items()):
        if sp.csr_matrix(mat).count_nonzero() == 0:
            continue
        if abs(nu) <= static_tol:
            kept = kept + mat
        elif abs(nu) < cutoff:
            raise ResonanceError(
                f"term rotating at {nu:.6g} MHz is below the RWA cutoff {cutoff:.6g} MHz; "
                "check the frequency-matching conditions")
    return Operator(fh.space, kept.tocsr(), hermitian_hint=True)


def _min_frame_detuning(fh: FourierHamiltonian) -> float:
    space = fh.space
    static = fh.components.get(0.0)
    if static is None:
        return np.inf
    diag = np.real(static.diagonal())
    occ = space.occupations
    single = occ.sum(axis=1) == 1
    boson_cols = [k for k, m in enumerate(space.modes) if m.kind == BOSON]
    qubit_cols = [k for k, m in enumerate(space.modes) if m.kind == QUBIT]
    mode_states = single & (occ[:, boson_cols].sum(axis=1) == 1)
    qubit_states = single & (occ[:, qubit_cols].sum(axis=1) == 1)
    if not mode_states.any() or not qubit_states.any():
        return np.inf
    gaps = np.abs(diag[mode_states][:, None] - diag[qubit_states][None, :])
    gaps = gaps[gaps > 1e-9]
    return float(gaps.min()) if gaps.size else np.inf


def loop_drive_roles(drives: Sequence[DriveSpec], spins: Sequence[str] = ("down", "up")) -> dict[str, DriveSpec]:
    """Identify the four loop drives by target: w1 (down,1,i), w2 (up,1,j), w3 (up,2,i), w4 (down,2,j)."""
    down, up = spins
    pattern = {(0, down, 1): "w1", (1, up, 1): "w2", (0, up, 2): "w3", (1, down, 2): "w4"}
    roles = {}
    for d in drives:
        role = pattern.get((d.site, d.spin, d.mode))
        if role is not None:
            roles[role] = d
    return roles


def check_frequency_matching(site: SiteSpec, drives: Sequence[DriveSpec], tol: float = 1e-6) -> None:
    """Raise unless the loop tones satisfy w1 + w2 = w4 - w3 = w_up - w_down."""
    roles = loop_drive_roles(drives, site.qubit_labels[:2])
    split = site.qubit_freqs[1] - site.qubit_freqs[0]
    if "w1" in roles and "w2" in roles:
        total = roles["w1"].frequency + roles["w2"].frequency
        if abs(total - split) > tol:
            raise ResonanceError(
                f"frequency matching violated: ω1+ω2 ≠ ω↑−ω↓ ({total:.9g} vs {split:.9g} MHz)")
    if "w3" in roles and "w4" in roles:
        diff = roles["w4"].frequency - roles["w3"].frequency
        if abs(diff - split) > tol:
            raise ResonanceError(
                f"frequency matching violated: ω4−ω3 ≠ ω↑−ω↓ ({diff:.9g} vs {split:.9g} MHz)")


def loop_frame(site: SiteSpec, drives: Sequence[DriveSpec]) -> dict[str, float]:
    """Frame that makes the loop drives static: qubits at their own frequency,
    mode 1 at ``w_down + w1`` and mode 2 at ``w_down + w4``."""
    roles = loop_drive_roles(drives, site.qubit_labels[:2])
    w_down, w_up = site.qubit_freqs[:2]
    frame = {}
    for i in (0, 1):
        frame[qubit_label(site.qubit_labels[0], i)] = w_down
        frame[qubit_label(site.qubit_labels[1], i)] = w_up
        if "w1" in roles or "w2" in roles:
            w1 = roles["w1"].frequency if "w1" in roles else (w_up - w_down) - roles["w2"].frequency
            frame[mode_label(1, i)] = w_down + w1
        if "w4" in roles or "w3" in roles:
            w4 = roles["w4"].frequency if "w4" in roles else roles["w3"].frequency + (w_up - w_down)
            frame[mode_label(2, i)] = w_down + w4
    return frame


# -- combination -------------------------------------------------------------


def _spin_order(labels: Sequence[str]) -> list[str]:
    spins = []
    for lab in labels:
        s, _ = _split_label(lab)
        if s not in spins:
            spins.append(s)
    if set(spins) == {"down", "up"}:
        return ["up", "down"]
    return spins


def model_from_sector(matrix: np.ndarray, labels: Sequence[str], interaction: str = "hard_core",
                      validity: dict | None = None) -> EffectiveModel:
    """EffectiveModel from a single-excitation (site x spin) Hamiltonian."""
    spins = _spin_order(labels)
    sites = sorted({_split_label(lab)[1] for lab in labels})
    pos = {lab: k for k, lab in enumerate(labels)}
    d = len(spins)

    def block(i, j):
        out = np.zeros((d, d), dtype=complex)
        for a, sa in enumerate(spins):
            for b, sb in enumerate(spins):
                la, lb = f"{sa}@{i}", f"{sb}@{j}"
                if la in pos and lb in pos:
                    out[a, b] = matrix[pos[la], pos[lb]]
        return out

    bonds = {}
    for n, i in enumerate(sites):
        for j in sites[n + 1:]:
            t = -block(i, j)
            if np.any(np.abs(t) > 0):
                bonds[(i, j)] = t
    zeeman = {i: block(i, i) for i in sites}
    return EffectiveModel(spin_dim=d, bonds=bonds, zeeman=zeeman, interaction=interaction,
                          validity=dict(validity or {}))


def combine(static: EliminationResult, driven: EliminationResult,
            interference_fraction: float = INTERFERENCE_FRACTION) -> EffectiveModel:
    """Add static and driven second-order terms on the same site pair.

    The result lives in the driven frame: static qubit energies enter only
    through their shifts from the bare values.
    """
    if set(static.labels) != set(driven.labels):
        raise ConfigError(f"inconsistent site pairs: {static.labels} vs {driven.labels}")
    order = list(driven.labels)
    perm = [static.labels.index(lab) for lab in order]
    hs = static.matrix()[np.ix_(perm, perm)]
    bare = np.diag([static.bare_energies[lab] for lab in order])
    total = hs - bare + driven.matrix()
    validity = {"static": static.validity, "driven": driven.validity}
    detunings = [abs(x) for k, x in {**static.detunings, **driven.detunings}.items() if "-" in k]
    hops = [abs(x) for x in list(static.bare_hoppings.values()) + list(driven.bare_hoppings.values())]
    if detunings and hops:
        ratio = max(hops) / min(detunings)
        validity["hop_to_detuning"] = ratio
        validity["interference_ok"] = ratio <= interference_fraction
        if ratio > interference_fraction:
            warnings.warn(f"hopping/detuning = {ratio:.3g} exceeds {interference_fraction}; "
                          "static and driven terms may interfere", stacklevel=2)
    return model_from_sector(total, order, "hard_core", validity)


# -- full pipeline -------------------------------------------------------------


@dataclass
class Derivation:
    static: EliminationResult
    driven: EliminationResult
    model: EffectiveModel
    rwa_hamiltonian: Operator
    frame: dict

    def to_dict(self) -> dict:
        return {
            "static": self.static.to_dict(),
            "driven": self.driven.to_dict(),
            "model": self.model.to_dict(),
            "loop_flux": self.model.loop_flux() if self.model.spin_dim == 2 else None,
            "frame": dict(sorted(self.frame.items())),
        }


def derive_two_site(sites: SiteSpec | Sequence[SiteSpec], drives: Sequence[DriveSpec],
                    coupling: InterSiteCoupling, strict: bool = True,
                    rwa_cutoff: float | None = None, match_tol: float = 1e-6) -> Derivation:
    """Run the whole elimination pipeline on a two-site device."""
    site0 = sites if isinstance(sites, SiteSpec) else list(sites)[0]
    if len(site0.qubit_freqs) >= 2:
        check_frequency_matching(site0, drives, match_tol)
    static_h = build_jch(chain(2), sites, coupling)
    static = eliminate_static(static_h, strict=strict)
    driven_h = build_driven_two_site(sites, drives, coupling)
    proj = project_excitation_number(driven_h.space, 1)
    frame = loop_frame(site0, drives) if len(site0.qubit_freqs) >= 2 else {}
    h_frame = rotating_frame(driven_h.restrict(proj), frame)
    if rwa_cutoff is None:
        big = [abs(x) for k, x in static.detunings.items() if "-" in k]
        small = _min_frame_detuning(h_frame)
        rwa_cutoff = 0.5 * min(big + [small]) if big or np.isfinite(small) else np.inf
    rwa = apply_rwa(h_frame, rwa_cutoff)
    driven = eliminate_driven(rwa, strict=strict)
    model = combine(static, driven)
    return Derivation(static, driven, model, rwa, frame)


# -- counter-rotating sideband shifts ------------------------------------------


def sideband_shifts(frame_hamiltonian: FourierHamiltonian, static_tol: float = 1e-6) -> np.ndarray:
    """Second-order level shifts from the rotating components dropped by the RWA.

    A component ``M e^{2 pi i nu t}`` shifts level ``p`` by
    ``sum_q |M_qp|^2 / (E_p - E_q - nu)``, with ``E`` the static diagonal.
    """
    fh = frame_hamiltonian
    static = fh.components.get(0.0)
    energies = np.real(static.diagonal()) if static is not None else np.zeros(fh.dimension)
    shifts = np.zeros(fh.dimension)
    for nu, mat in fh.components.items():
        if abs(nu) <= static_tol:
            continue
        weight = np.abs(mat.toarray().T) ** 2  # weight[p, q] = |M_qp|^2
        gap = energies[:, None] - energies[None, :] - nu
        with np.errstate(divide="ignore", invalid="ignore"):
            shifts += np.where(weight > 0, weight / gap, 0.0).sum(axis=1)
    return shifts


def compensate_spin_flip_tone(sites: SiteSpec | Sequence[SiteSpec], drives: Sequence[DriveSpec],
                              coupling: InterSiteCoupling, iterations: int = 4) -> tuple[list[DriveSpec], float]:
    """Retune the w2 tone so the ``down@0 -> up@1`` transfer stays resonant once the
    counter-rotating sideband shifts are included.

    Returns the adjusted drive list and the applied frequency offset. Without this
    correction the shifts (of order ``f^2 / (2 w)``) can exceed the effective hop
    and suppress the transfer entirely.
    """
    site0 = sites if isinstance(sites, SiteSpec) else list(sites)[0]
    roles = loop_drive_roles(drives, site0.qubit_labels[:2])
    if "w1" not in roles or "w2" not in roles:
        raise ConfigError("sideband compensation needs the w1 and w2 tones")
    down, up = site0.qubit_labels[:2]
    nominal = roles["w2"].frequency
    target = roles["w2"]
    w2 = nominal
    for _ in range(iterations):
        adjusted = [replace(d, frequency=w2) if d is target else d for d in drives]
        h = build_driven_two_site(sites, adjusted, coupling)
        proj = project_excitation_number(h.space, 1)
        frame = loop_frame(site0, adjusted)
        frame[qubit_label(up, 0)] = frame[qubit_label(up, 1)] = site0.qubit_freqs[0] + roles["w1"].frequency + w2
        shifts = sideband_shifts(rotating_frame(h.restrict(proj), frame))
        k_up = int(np.argmax(proj.basis_vector({qubit_label(up, 1): 1})))
        k_down = int(np.argmax(proj.basis_vector({qubit_label(down, 0): 1})))
        w2 = nominal + shifts[k_up] - shifts[k_down]
    adjusted = [replace(d, frequency=w2) if d is target else d for d in drives]
    return adjusted, float(w2 - nominal)


# -- multi-bond frequency planning ---------------------------------------------


def assign_bond_detunings(lattice: LatticeSpec, base: float, spacing: float) -> dict[tuple[int, int], float]:
    """Distinct drive detunings for bonds that share a site (greedy colouring)."""
    colors = edge_coloring(lattice)
    return {edge: base + spacing * c for edge, c in colors.items()}


def validate_bond_frequencies(lattice: LatticeSpec, plans: Mapping[tuple[int, int], Sequence[float]],
                              tol: float = 1e-6) -> None:
    """Reject identical drive-frequency combinations on bonds sharing a site."""
    for (i, j), freqs in plans.items():
        for (k, l), other in plans.items():
            if (i, j) >= (k, l) or not ({i, j} & {k, l}):
                continue
            if len(freqs) == len(other) and np.allclose(sorted(freqs), sorted(other), atol=tol, rtol=0):
                raise ResonanceError(
                    f"adjacent bonds ({i}, {j}) and ({k}, {l}) use the same drive frequencies")


# -- polaritons ----------------------------------------------------------------


@dataclass
class PolaritonAnalysis:
    branch_energies: dict
    photon_weight: dict
    effective_hops: dict
    predicted_hops: dict
    anharmonicity: dict
    branch_separation: float
    ambiguous: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "branch_energies", "photon_weight", "effective_hops", "predicted_hops",
            "anharmonicity", "branch_separation", "ambiguous")}


def jc_spectrum(site: SiteSpec, photon_cutoff: int, n: int) -> tuple[np.ndarray, np.ndarray, SubspaceProjection]:
    """Eigenvalues and eigenvectors of one site in the n-excitation subspace."""
    h = build_jch(chain(1), site, InterSiteCoupling((0.0,)), photon_cutoff)
    proj = project_excitation_number(h.space, n)
    vals, vecs = np.linalg.eigh(proj.restrict(h).toarray())
    return vals, vecs, proj


def polariton_analysis(site: SiteSpec, hopping: float, photon_cutoff: int = 2,
                       ambiguity_ratio: float = 0.2) -> PolaritonAnalysis:
    """Lower/upper polariton energies, photon weights, branch hops and anharmonicity."""
    if len(site.qubit_freqs) != 1 or len(site.mode_freqs) != 1:
        raise ConfigError("polariton analysis needs one qubit and one mode per site")
    if site.coupling_model != "rwa":
        raise ConfigError("polariton analysis uses the RWA (excitation-conserving) coupling")
    cutoff = max(2, photon_cutoff)
    e1, v1, p1 = jc_spectrum(site, cutoff, 1)
    e2, _, _ = jc_spectrum(site, cutoff, 2)
    photon_col = p1.occupations[:, p1.mode_position(mode_label(1, 0))]
    weights = (np.abs(v1) ** 2 * photon_col[:, None]).sum(axis=0)

    pair = build_jch(chain(2), site, InterSiteCoupling((hopping,)), 1)
    pair_vals = np.linalg.eigvalsh(project_excitation_number(pair.space, 1).restrict(pair).toarray())
    j_lp = 0.5 * (pair_vals[1] - pair_vals[0])
    j_up = 0.5 * (pair_vals[3] - pair_vals[2])
    separation = float(e1[1] - e1[0])
    ambiguous = bool(abs(hopping) > ambiguity_ratio * separation or pair_vals[1] > pair_vals[2])
    if ambiguous:
        warnings.warn(f"hopping {hopping:g} is comparable to the branch separation {separation:g}; "
                      "polariton branches are not well defined", stacklevel=2)
    return PolaritonAnalysis(
        branch_energies={"LP": [float(e1[0]), float(e2[0])], "UP": [float(e1[1]), float(e2[1])]},
        photon_weight={"LP": float(weights[0]), "UP": float(weights[1])},
        effective_hops={"LP": float(j_lp), "UP": float(j_up)},
        predicted_hops={"LP": float(hopping * weights[0]), "UP": float(hopping * weights[1])},
        anharmonicity={"LP": float(e2[0] - 2 * e1[0]), "UP": float(e2[1] - 2 * e1[1])},
        branch_separation=separation,
        ambiguous=ambiguous,
    )


# -- Raman effective field -----------------------------------------------------


@dataclass(frozen=True)
class RamanDrive:
    """Tone ``amplitude * cos(2 pi frequency t + phase)`` on the cavity quadrature ``a + a^dag``
    (``target='cavity'``) or on the qubit ``sigma_x`` (``target='qubit'``)."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    target: str = "cavity"

    def __post_init__(self):
        if self.target not in ("cavity", "qubit"):
            raise ConfigError("Raman drive target must be 'cavity' or 'qubit'")


@dataclass
class RamanField:
    effective_rabi: float
    effective_detuning: float
    field_vector: np.ndarray
    intermediate_detuning: float
    two_photon_detuning: float
    stark_shift: float
    single_photon_rabi: tuple

    def to_dict(self) -> dict:
        return {
            "effective_rabi": self.effective_rabi,
            "effective_detuning": self.effective_detuning,
            "field_vector": [float(x) for x in self.field_vector],
            "intermediate_detuning": self.intermediate_detuning,
            "two_photon_detuning": self.two_photon_detuning,
            "stark_shift": self.stark_shift,
            "single_photon_rabi": list(self.single_photon_rabi),
        }


@dataclass
class JCSite:
    """Dense single-site JC model in the full truncated space with named eigenstates."""

    space: HilbertSpace
    hamiltonian: np.ndarray
    energies: np.ndarray
    states: np.ndarray
    vacuum: int
    lower: int
    upper: int

    def drive_operator(self, target: str) -> np.ndarray:
        if target == "cavity":
            a = ladder_op(self.space, mode_label(1, 0), "lower").toarray()
            return a + a.conj().T
        c = ladder_op(self.space, self.space.qubit_labels()[0], "lower").toarray()
        return c + c.conj().T


def jc_site_model(site: SiteSpec, photon_cutoff: int = 3) -> JCSite:
    if len(site.qubit_freqs) != 1 or len(site.mode_freqs) != 1:
        raise ConfigError("a single qubit and a single mode are required")
    op = build_jch(chain(1), site, InterSiteCoupling((0.0,)), photon_cutoff)
    h = op.toarray()
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(vals)
    if site.coupling_model == "rwa":
        n_exc = np.real(np.einsum("ik,i,ik->k", vecs.conj(), op.space.excitations(), vecs))
        zero = next(k for k in order if abs(n_exc[k]) < 1e-6)
        one = [k for k in order if abs(n_exc[k] - 1) < 1e-6]
    else:
        zero, one = order[0], order[1:3]
    return JCSite(op.space, h, vals, vecs, int(zero), int(one[0]), int(one[1]))


def _stark_shifts(jc: JCSite, drives: Sequence[RamanDrive]) -> np.ndarray:
    """Second-order AC-Stark shift of every eigenstate from off-resonant drive tones."""
    e = jc.energies
    shifts = np.zeros(e.size)
    for d in drives:
        x = jc.states.conj().T @ jc.drive_operator(d.target) @ jc.states
        c2 = np.abs(0.5 * d.amplitude * x) ** 2
        gap = e[None, :] - e[:, None]  # gap[r, s] = E_s - E_r
        with np.errstate(divide="ignore"):
            term = 1.0 / (gap + d.frequency) + 1.0 / (gap - d.frequency)
        term[~np.isfinite(term)] = 0.0
        shifts += (c2 * term).sum(axis=0)
    return shifts


def raman_effective_field(site: SiteSpec, drive1: RamanDrive, drive2: RamanDrive,
                          photon_cutoff: int = 3, max_ratio: float = MAX_RATIO) -> RamanField:
    """Two-photon LP <-> UP coupling through the vacuum, with both tones detuned by
    the intermediate detuning. Rates are population-oscillation frequencies."""
    jc = jc_site_model(site, photon_cutoff)
    e = jc.energies
    e_vac, e_lp, e_up = e[jc.vacuum], e[jc.lower], e[jc.upper]
    virt = e_lp - e_vac - drive1.frequency
    if abs(virt) < 1e-9:
        raise SingularEliminationError("intermediate level resonant: drive 1 hits the lower polariton")
    x1 = jc.states[:, jc.lower].conj() @ jc.drive_operator(drive1.target) @ jc.states[:, jc.vacuum]
    x2 = jc.states[:, jc.upper].conj() @ jc.drive_operator(drive2.target) @ jc.states[:, jc.vacuum]
    rabi1 = abs(drive1.amplitude * x1)
    rabi2 = abs(drive2.amplitude * x2)
    for r in (rabi1, rabi2):
        if r / abs(virt) > max_ratio:
            raise ValidityError(f"Raman drive too strong: Omega/Delta_virt = {r / abs(virt):.3g} > {max_ratio}")
    omega_eff = rabi1 * rabi2 / (2 * virt)
    two_photon = (drive2.frequency - drive1.frequency) - (e_up - e_lp)
    shifts = _stark_shifts(jc, [drive1, drive2])
    stark = float(shifts[jc.upper] - shifts[jc.lower])
    detuning = two_photon - stark
    theta = drive2.phase - drive1.phase + np.angle(x2 * np.conj(x1))
    vec = np.array([abs(omega_eff) * np.cos(theta), abs(omega_eff) * np.sin(theta), detuning])
    if omega_eff < 0:
        vec[:2] *= -1
    return RamanField(
        effective_rabi=float(abs(omega_eff)),
        effective_detuning=float(detuning),
        field_vector=vec,
        intermediate_detuning=float(virt),
        two_photon_detuning=float(two_photon),
        stark_shift=stark,
        single_photon_rabi=(float(rabi1), float(rabi2)),
    )


def raman_drives(site: SiteSpec, rabi: float, virtual_detuning: float, two_photon_detuning: float = 0.0,
                 phases: tuple[float, float] = (0.0, 0.0), compensate_stark: bool = True,
                 photon_cutoff: int = 3, iterations: int = 3) -> tuple[RamanDrive, RamanDrive]:
    """Tone pair giving single-photon Rabi frequency ``rabi`` on each leg.

    With ``compensate_stark`` the second tone is retuned so the effective
    detuning (including AC-Stark shifts) equals ``two_photon_detuning``.
    """
    if abs(virtual_detuning) < 1e-9:
        raise SingularEliminationError("intermediate level resonant: virtual detuning is zero")
    jc = jc_site_model(site, photon_cutoff)
    e = jc.energies
    x_op = jc.drive_operator("cavity")
    x1 = abs(jc.states[:, jc.lower].conj() @ x_op @ jc.states[:, jc.vacuum])
    x2 = abs(jc.states[:, jc.upper].conj() @ x_op @ jc.states[:, jc.vacuum])
    if x1 < 1e-12 or x2 < 1e-12:
        raise ValidityError("a polariton branch has no cavity matrix element to the vacuum")
    a1, a2 = rabi / x1, rabi / x2
    nu1 = e[jc.lower] - e[jc.vacuum] - virtual_detuning
    nu2 = e[jc.upper] - e[jc.vacuum] - virtual_detuning + two_photon_detuning
    d1 = RamanDrive(a1, nu1, phases[0])
    d2 = RamanDrive(a2, nu2, phases[1])
    if compensate_stark:
        for _ in range(iterations):
            shifts = _stark_shifts(jc, [d1, d2])
            nu2 = (e[jc.upper] - e[jc.vacuum] - virtual_detuning + two_photon_detuning
                   + shifts[jc.upper] - shifts[jc.lower])
            d2 = RamanDrive(a2, nu2, phases[1])
    return d1, d2
