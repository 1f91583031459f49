"""Command-line front end: build | derive | run | sweep | verify.

Exit codes: 0 success, 1 configuration error, 2 numerical or validity
failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import load_config, resolve_device
from .effective import derive_two_site, eliminate_static, model_from_sector
from .errors import ConfigError, JCHError
from .experiments import ExperimentResult, ScenarioSpec, run_scenario, scenario_parameters
from .hilbert import project_excitation_number
from .model import build_driven_two_site, build_jch
from .serialize import csv_text, series_rows, write_atomic, write_json, write_metadata
from .verification import run_verification

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("jchsim")


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _echo(doc: dict, command: str) -> dict:
    return {"command": command, "configuration": doc, "version": __version__}


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


# -- build ---------------------------------------------------------------------------------


def _parse_subspace(value: str | None) -> int | None:
    if value is None:
        return None
    text = value.split("=", 1)[1] if "=" in value else value
    try:
        n = int(text)
    except ValueError:
        raise ConfigError(f"--subspace expects an excitation number, got {value!r}") from None
    if n < 0:
        raise ConfigError("--subspace must be >= 0")
    return n


def cmd_build(args, doc: dict) -> int:
    device = resolve_device(doc.get("device"))
    subspace = _parse_subspace(args.subspace)
    h = build_jch(device.lattice, device.site, device.coupling, device.photon_cutoff)
    counts = np.bincount(h.space.excitations())
    summary = {
        "lattice": {"topology": device.lattice.topology, "num_sites": device.lattice.num_sites,
                    "boundary": device.lattice.boundary, "edges": [list(e) for e in device.lattice.edges]},
        "site": {"qubit_labels": list(device.site.qubit_labels), "qubit_freqs_MHz": list(device.site.qubit_freqs),
                 "mode_freqs_MHz": list(device.site.mode_freqs),
                 "couplings_g_MHz": [list(r) for r in device.site.couplings],
                 "coupling_model": device.site.coupling_model},
        "coupling": {"hoppings_J_MHz": list(device.coupling.for_modes(device.site)),
                     "scale_by_mode_index": device.coupling.scale_by_mode_index},
        "photon_cutoff": device.photon_cutoff,
        "dimension": h.space.dimension,
        "modes": list(h.space.labels),
        "hermiticity_error": h.hermiticity_error(),
        "hermitian": h.hermiticity_error() <= 1e-12 * max(1.0, h.max_abs()),
        "subspace_dimensions": {str(n): int(c) for n, c in enumerate(counts) if c},
        "metadata": device.metadata,
    }
    if subspace is not None:
        summary["subspace"] = {"excitations": subspace,
                               "dimension": project_excitation_number(h.space, subspace).dimension}
    if device.drives:
        summary["drives"] = [{"site": d.site, "spin": d.spin, "mode": d.mode, "amplitude_MHz": d.amplitude,
                              "frequency_MHz": d.frequency, "phase": d.phase} for d in device.drives]
        if device.lattice.num_sites == 2:
            driven = build_driven_two_site(device.site, device.drives, device.coupling, device.photon_cutoff)
            summary["driven_hermiticity_error"] = max(driven.hermiticity_error(t) for t in (0.0, 0.1, 0.2))
            summary["drive_period_us"] = driven.period()
    out = _out_dir(args.out)
    write_json(out / "build.json", {**summary, "provenance": _echo(doc, "build")})
    g = sorted({v for row in device.site.couplings for v in row if v})
    _say(args, f"dimension {summary['dimension']}; hermiticity error {summary['hermiticity_error']:.3g}; "
               f"g = {', '.join(f'{x:g}' for x in g) or '0'} MHz; "
               f"J = {', '.join(f'{x:g}' for x in summary['coupling']['hoppings_J_MHz'])} MHz")
    if subspace is not None:
        _say(args, f"N = {subspace} subspace dimension {summary['subspace']['dimension']}")
    return EXIT_OK


# -- derive --------------------------------------------------------------------------------


def cmd_derive(args, doc: dict) -> int:
    device = resolve_device(doc.get("device"))
    opts = doc.get("derive", {})
    strict = bool(opts.get("strict", False))
    if device.lattice.num_sites != 2:
        raise ConfigError("derive works on two-site devices")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if device.drives:
            cutoff = opts.get("rwa_cutoff")
            deriv = derive_two_site(device.site, device.drives, device.coupling, strict=strict,
                                    rwa_cutoff=None if cutoff is None else float(cutoff))
            payload = deriv.to_dict()
            changing = deriv.driven.spin_changing_hops
        else:
            h = build_jch(device.lattice, device.site, device.coupling)
            static = eliminate_static(h, strict=strict)
            model = model_from_sector(static.matrix(), static.labels, validity=static.validity)
            payload = {"static": static.to_dict(), "model": model.to_dict()}
            changing = {}
    payload["warnings"] = sorted({str(w.message) for w in caught})
    payload["provenance"] = _echo(doc, "derive")
    out = _out_dir(args.out)
    write_json(out / "effective_model.json", payload)
    for w in payload["warnings"]:
        log.warning(w)
    for (a, b), v in sorted(changing.items()):
        _say(args, f"spin-changing hop {a} -> {b}: {abs(v):.6g} MHz")
    _say(args, f"wrote {out / 'effective_model.json'}")
    return EXIT_OK


# -- run -----------------------------------------------------------------------------------


def _scenario_spec(doc: dict) -> ScenarioSpec:
    sc = doc.get("scenario")
    if not sc:
        raise ConfigError("configuration has no scenario section (set scenario.name)")
    return ScenarioSpec(sc["name"], dict(sc.get("parameters", {})), dict(sc.get("tolerances", {})))


def write_result(out: Path, stem: str, result: ExperimentResult, doc: dict, started: float) -> None:
    payload = result.to_dict()
    payload["provenance"] = {**payload["provenance"], **_echo(doc, "run")}
    payload["series_files"] = {name: f"{stem}.{name}.csv" for name in sorted(result.series)}
    for name, series in sorted(result.series.items()):
        cols, rows = series_rows(series)
        write_atomic(out / f"{stem}.{name}.csv", csv_text(cols, rows))
    write_json(out / f"{stem}.json", payload)
    write_metadata(out / f"{stem}.meta.json", started)


def cmd_run(args, doc: dict) -> int:
    spec = _scenario_spec(doc)
    out = _out_dir(args.out)
    started = time.time()
    result = run_scenario(spec)
    write_result(out, spec.name, result, doc, started)
    for v in result.verdicts:
        _say(args, f"{'PASS' if v.passed else 'FAIL'} {v.name}: measured {v.measured:.6g}"
                   f"{'' if v.expected is None else f', expected {v.expected:.6g}'} (tol {v.tolerance:g})")
    for w in result.warnings:
        log.warning(w)
    return EXIT_OK if result.passed else EXIT_VERIFY


# -- sweep ---------------------------------------------------------------------------------


def sweep_points(sweep: dict) -> tuple[list[str], list[tuple]]:
    names, axes = [], []
    for name, rng in sweep["parameters"].items():
        if isinstance(rng, dict):
            values = np.linspace(rng["start"], rng["stop"], int(rng["num"])).tolist()
        else:
            values = list(rng)
        if not values:
            raise ConfigError(f"sweep range for {name!r} is empty")
        names.append(name)
        axes.append(values)
    return names, list(itertools.product(*axes))


def _sweep_task(spec: ScenarioSpec) -> tuple[dict, str | None]:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run_scenario(spec)
    except JCHError as exc:
        return {}, f"{type(exc).__name__}: {exc}"
    scalars = {k: v["value"] for k, v in result.scalars.items()
               if isinstance(v["value"], (int, float, bool)) and not isinstance(v["value"], list)}
    scalars["passed"] = result.passed
    return scalars, None


def cmd_sweep(args, doc: dict) -> int:
    base = _scenario_spec(doc)
    sweep = doc.get("sweep")
    if not sweep:
        raise ConfigError("configuration has no sweep section")
    names, points = sweep_points(sweep)
    allowed = scenario_parameters(base.name)
    for n in names:
        if n not in allowed:
            raise ConfigError(f"sweep parameter {n!r} is not a parameter of scenario {base.name!r}")
    # validate every point before computing anything
    specs = [ScenarioSpec(base.name, {**base.parameters, **dict(zip(names, pt))}, base.tolerances) for pt in points]
    out = _out_dir(args.out)
    started = time.time()
    jobs = max(1, int(args.jobs))
    if jobs == 1:
        outputs = [_sweep_task(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_sweep_task, specs))
    columns = list(sweep.get("columns", []))
    if not columns:
        for scalars, _ in outputs:
            columns += [k for k in scalars if k not in columns]
    rows = []
    for pt, (scalars, err) in zip(points, outputs):
        rows.append([*pt, *[scalars.get(c) for c in columns], err or ""])
    header = [*names, *columns, "error"]
    write_atomic(out / "sweep.csv", csv_text(header, rows))
    write_json(out / "sweep.json", {"columns": header, "n_points": len(points), "provenance": _echo(doc, "sweep")})
    write_metadata(out / "sweep.meta.json", started, {"jobs": jobs})
    errors = [e for _, e in outputs if e]
    _say(args, f"{len(points)} points written to {out / 'sweep.csv'}" + (f"; {len(errors)} failed" if errors else ""))
    return EXIT_NUMERICAL if errors else EXIT_OK


# -- verify --------------------------------------------------------------------------------


def cmd_verify(args, doc: dict) -> int:
    opts = doc.get("verify", {})
    filters = list(args.filter or []) or list(opts.get("filter", []))
    started = time.time()

    def progress(o):
        status = "PASS" if o.passed else "FAIL"
        _say(args, f"{status} criterion {o.criterion} [{o.id}] ({o.runtime_s:.1f} s)")
        for v in o.verdicts:
            if not v.passed or args.verbose:
                _say(args, f"    {'ok  ' if v.passed else 'FAIL'} {v.name}: measured {v.measured:.6g}"
                           f"{'' if v.expected is None else f', expected {v.expected:.6g}'} "
                           f"(tol {v.tolerance:g}, {v.kind})")
        if o.error:
            _say(args, f"    error: {o.error}")

    report = run_verification(filters, opts.get("tolerances"), progress)
    out = _out_dir(args.out)
    write_json(out / "verification.json", {**report.to_dict(), "provenance": _echo(doc, "verify")})
    write_metadata(out / "verification.meta.json", started, {"runtimes_s": report.runtimes()})
    _say(args, f"{len(report.outcomes) - len(report.failures())}/{len(report.outcomes)} checks passed")
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {"build": cmd_build, "derive": cmd_derive, "run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML configuration document")
    common.add_argument("--out", default="jchsim_out", help="output directory (default: jchsim_out)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration field (repeatable)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--filter", action="append", metavar="NAME", help="verification check or group")
    common.add_argument("--subspace", metavar="N", help="report the N-excitation subspace (build)")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("--quiet", action="store_true")
    noise.add_argument("--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="jchsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jchsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"build": "build a device Hamiltonian and summarize it",
             "derive": "derive the effective spin model of a two-site device",
             "run": "run a packaged scenario",
             "sweep": "Cartesian parameter sweep of a scenario",
             "verify": "run the acceptance suite"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    log.setLevel(level)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        doc = load_config(args.config, args.overrides)
        return COMMANDS[args.command](args, doc)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except JCHError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
