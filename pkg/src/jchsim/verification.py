"""Acceptance suite: one named check per criterion, grouped for filtering.

Each check returns verdicts; tolerances come from the scenario defaults or
:data:`CHECK_TOLERANCES` and can be overridden per check id.
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .bosehubbard import EffectiveModel, build_effective_bh
from .dynamics import EvolutionSpec, evolve
from .effective import apply_rwa, loop_frame, rotating_frame
from .errors import ConfigError, JCHError
from .experiments import (
    DEFAULT_TOLERANCES,
    ExperimentResult,
    Verdict,
    run_driven_rabi,
    run_hardcore_obstruction,
    run_polariton_branches,
    run_raman_conversion,
    run_soc_interferometry,
    run_static_elimination,
    run_stroboscopic_soc,
)
from .hilbert import hermiticity_error, project_excitation_number, total_number_op
from .lattice import LatticeSpec, chain, square
from .model import build_driven_two_site, build_jch, preset

CHECK_TOLERANCES: dict[str, dict[str, float]] = {
    "invariants": {"hermiticity": 1e-12, "norm": 1e-8, "excitation": 1e-12, "reduction": 1e-10},
}


@dataclass
class Check:
    id: str
    criterion: int
    group: str
    description: str
    scenario: str | None
    run: Callable[[dict], list]


@dataclass
class CheckOutcome:
    id: str
    criterion: int
    group: str
    description: str
    verdicts: list = field(default_factory=list)
    error: str | None = None
    runtime_s: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "criterion": self.criterion,
            "group": self.group,
            "description": self.description,
            "passed": self.passed,
            "error": self.error,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


@dataclass
class VerificationReport:
    outcomes: list

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    def failures(self) -> list[CheckOutcome]:
        return [o for o in self.outcomes if not o.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_checks": len(self.outcomes),
            "n_failed": len(self.failures()),
            "checks": [o.to_dict() for o in self.outcomes],
        }

    def runtimes(self) -> dict:
        return {o.id: o.runtime_s for o in self.outcomes}


def _verdicts(results: Sequence[ExperimentResult]) -> list[Verdict]:
    return [v for r in results for v in r.verdicts]


# -- criteria ---------------------------------------------------------------------------


def _static(tol):
    return _verdicts([run_static_elimination(tolerances=tol)])


def _driven(tol):
    return _verdicts([run_driven_rabi(tolerances=tol)])


def _flux(tol):
    return _verdicts([run_soc_interferometry(tolerances=tol)])


def _polariton(tol):
    resonant = run_polariton_branches(4000.0, 4000.0, 100.0, 10.0, tolerances=tol)
    dispersive = run_polariton_branches(4000.0, 4500.0, 100.0, 5.0, tolerances=tol)
    return [_rename(v, "resonant") for v in resonant.verdicts] + [_rename(v, "dispersive") for v in dispersive.verdicts]


def _raman(tol):
    on = run_raman_conversion(tolerances=tol)
    detuned = run_raman_conversion(two_photon_detuning=0.5, tolerances=tol)
    off = run_raman_conversion(drives_on=False, tolerances=tol)
    return ([_rename(v, "resonant") for v in on.verdicts] + [_rename(v, "detuned") for v in detuned.verdicts]
            + [_rename(v, "off") for v in off.verdicts])


def _floquet(tol):
    return _verdicts([run_stroboscopic_soc(tolerances=tol)])


def _hardcore(tol):
    return _verdicts([run_hardcore_obstruction(tolerances=tol)])


def _rename(v: Verdict, tag: str) -> Verdict:
    return Verdict(f"{tag}:{v.name}", v.invariant, v.measured, v.expected, v.tolerance, v.kind)


def dense_bose_hubbard(lattice: LatticeSpec, hopping: float, interaction: float, max_per_site: int,
                       n_particles: int) -> np.ndarray:
    """Spinless Bose-Hubbard spectrum from Kronecker products, projected on fixed N."""
    d = max_per_site + 1
    b = np.diag(np.sqrt(np.arange(1, d)), 1)
    n_sites = lattice.num_sites

    def local(op, site):
        mats = [np.eye(d)] * n_sites
        mats[site] = op
        out = np.array([[1.0]])
        for m in mats:
            out = np.kron(out, m)
        return out

    lowers = [local(b, s) for s in range(n_sites)]
    numbers = [lw.T @ lw for lw in lowers]
    h = np.zeros((d**n_sites, d**n_sites))
    for i, j in lattice.edges:
        term = lowers[i].T @ lowers[j]
        h -= hopping * (term + term.T)
    for n in numbers:
        h += interaction * n @ (n - np.eye(len(n)))
    total = np.real(np.diag(sum(numbers)))
    keep = np.isclose(total, n_particles)
    return np.linalg.eigvalsh(h[np.ix_(keep, keep)])


def _invariants(tol):
    verdicts = []
    # hermiticity of static, driven and effective operators
    p = preset("typical_device")
    static = build_jch(chain(2), p.site, p.coupling, 2)
    driven = build_driven_two_site(p.site, p.drives, p.coupling)
    herm = max(static.hermiticity_error() / max(1.0, static.max_abs()),
               max(hermiticity_error(driven.matrix(t)) / max(1.0, abs(driven.matrix(t)).max())
                   for t in (0.0, 0.0123, 0.37)))
    bh = build_effective_bh(EffectiveModel.uniform(square(2, 2), np.eye(2) + 0.3j * np.array([[0, 1], [1, 0]])),
                            square(2, 2), 1, 2)
    herm = max(herm, bh.hermiticity_error())
    verdicts.append(Verdict("hermiticity", "assembled Hamiltonians are Hermitian", herm, None,
                            tol["hermiticity"], "max"))
    # norm conservation under driven evolution
    proj = project_excitation_number(driven.space, 1)
    psi0 = proj.basis_vector({"down@0": 1})
    evo = evolve(EvolutionSpec(driven.restrict(proj), 0.05, psi0, dt=1e-5, record_stride=50))
    verdicts.append(Verdict("norm", "driven evolution conserves the norm",
                            float(np.max(np.abs(evo.norms - 1.0))), None, tol["norm"], "max"))
    # excitation-number conservation in the RWA
    n_op = total_number_op(static.space)
    comm = static.commutator(n_op)
    exc = comm.max_abs() / max(1.0, static.max_abs())
    fh = rotating_frame(driven, loop_frame(p.site, p.drives))
    rwa = apply_rwa(fh)
    exc = max(exc, rwa.commutator(total_number_op(driven.space)).max_abs() / max(1.0, rwa.max_abs()))
    verdicts.append(Verdict("excitation_number", "RWA Hamiltonians commute with the excitation number",
                            exc, None, tol["excitation"], "max"))
    # reduction of the spinful model to the spinless Bose-Hubbard model
    worst = 0.0
    for lattice, n_max, n in ((chain(3), 2, 2), (chain(4), 3, 3), (square(2, 2), 2, 3)):
        model = EffectiveModel.uniform(lattice, [[1.0]], interaction="spin_independent",
                                       interaction_strength=2.5)
        ours = np.linalg.eigvalsh(build_effective_bh(model, lattice, n_max, n).toarray())
        ref = dense_bose_hubbard(lattice, 1.0, 2.5, n_max, n)
        worst = max(worst, float(np.max(np.abs(ours - ref))) if ours.size == ref.size else np.inf)
    lattice = square(2, 2)
    spinful = EffectiveModel.uniform(lattice, np.eye(2), interaction="hard_core")
    two = np.linalg.eigvalsh(build_effective_bh(spinful, lattice, 1, 1).toarray())
    one = dense_bose_hubbard(lattice, 1.0, 0.0, 1, 1)
    worst = max(worst, float(np.max(np.abs(two - np.sort(np.repeat(one, 2))))))
    verdicts.append(Verdict("reduction", "spin-diagonal model reduces to the spinless Bose-Hubbard model",
                            worst, None, tol["reduction"], "max"))
    verdicts.append(_cli_determinism())
    return verdicts


def _cli_determinism() -> Verdict:
    from .cli import main

    def payload(directory: Path) -> dict:
        return {f.name: f.read_bytes() for f in sorted(directory.iterdir()) if not f.name.endswith(".meta.json")}

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        runs = []
        for k, jobs in enumerate((1, 1, 2)):
            out = tmp / f"run{k}"
            main(["sweep", "--set", "scenario.name=static_elimination",
                  "--set", "sweep.parameters.g_over_delta=[0.05, 0.1, 0.15]",
                  "--jobs", str(jobs), "--out", str(out), "--quiet"])
            main(["run", "--set", "scenario.name=soc_interferometry", "--set", "scenario.parameters.n_random=2",
                  "--out", str(out), "--quiet"])
            runs.append(payload(out))
        differing = sum(1 for r in runs[1:] for name in set(r) | set(runs[0]) if r.get(name) != runs[0].get(name))
    return Verdict("cli_determinism", "identical configurations give byte-identical payloads",
                   float(differing), 0.0, 0.0, "exact")


CHECKS: list[Check] = [
    Check("static_elimination", 1, "elimination", "static elimination against exact diagonalization",
          "static_elimination", _static),
    Check("driven_elimination", 2, "driven", "driven spin-changing transfer rate from full evolution",
          "driven_rabi", _driven),
    Check("flux_gauge", 3, "flux", "loop-flux gauge invariance and ring spectra", "soc_interferometry", _flux),
    Check("polariton", 4, "polariton", "polariton branch hopping", "polariton_branches", _polariton),
    Check("raman", 5, "raman", "Raman conversion from full evolution", "raman_conversion", _raman),
    Check("floquet", 6, "floquet", "stroboscopic spin-orbit coupling", "stroboscopic_soc", _floquet),
    Check("hardcore", 7, "hardcore", "two-excitation state count", "hardcore_obstruction", _hardcore),
    Check("invariants", 8, "invariants", "hermiticity, norm, excitation number, reduction, determinism",
          None, _invariants),
]


def check_names() -> list[str]:
    return [c.id for c in CHECKS] + sorted({c.group for c in CHECKS} - {c.id for c in CHECKS})


def select_checks(filters: Sequence[str] | None) -> list[Check]:
    if not filters:
        return list(CHECKS)
    chosen = [c for c in CHECKS if c.id in filters or c.group in filters or str(c.criterion) in filters]
    unknown = [f for f in filters if not any(f in (c.id, c.group, str(c.criterion)) for c in CHECKS)]
    if unknown:
        raise ConfigError(f"unknown check filter(s) {unknown}; available: {check_names()}")
    return chosen


def _check_tolerances(check: Check, overrides: Mapping[str, float] | None) -> dict:
    base = dict(DEFAULT_TOLERANCES[check.scenario]) if check.scenario else dict(CHECK_TOLERANCES[check.id])
    for key, value in (overrides or {}).items():
        if key not in base:
            raise ConfigError(f"unknown tolerance {key!r} for check {check.id!r}; known: {sorted(base)}")
        base[key] = float(value)
    return base


def run_verification(filters: Sequence[str] | None = None,
                     tolerances: Mapping[str, Mapping[str, float]] | None = None,
                     progress: Callable[[CheckOutcome], None] | None = None) -> VerificationReport:
    checks = select_checks(filters)
    tolerances = dict(tolerances or {})
    unknown = set(tolerances) - {c.id for c in CHECKS}
    if unknown:
        raise ConfigError(f"tolerance overrides for unknown checks {sorted(unknown)}")
    resolved = {c.id: _check_tolerances(c, tolerances.get(c.id)) for c in checks}
    outcomes = []
    for check in checks:
        start = time.perf_counter()
        outcome = CheckOutcome(check.id, check.criterion, check.group, check.description)
        try:
            outcome.verdicts = check.run(resolved[check.id])
        except JCHError as exc:
            outcome.error = f"{type(exc).__name__}: {exc}"
        outcome.runtime_s = time.perf_counter() - start
        outcomes.append(outcome)
        if progress is not None:
            progress(outcome)
    return VerificationReport(outcomes)


__all__ = ["CHECKS", "CHECK_TOLERANCES", "Check", "CheckOutcome", "VerificationReport", "check_names",
           "dense_bose_hubbard", "run_verification", "select_checks"]
