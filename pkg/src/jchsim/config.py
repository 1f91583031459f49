"""Configuration documents: loading, schema validation, overrides, device resolution.

One document format covers devices, scenarios, sweeps and the verification
suite. Frequencies may be numbers (MHz) or strings with units (``"4 GHz"``).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import yaml

from .errors import ConfigError
from .lattice import TOPOLOGIES, LatticeSpec, chain, make_lattice
from .model import COUPLING_MODELS, PRESETS, DriveSpec, InterSiteCoupling, SiteSpec, preset
from .units import parse_frequency

SCHEMA_VERSION = 1

_FREQ = {"type": ["number", "string"]}
_FREQ_LIST = {"type": "array", "items": _FREQ}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "device": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": list(PRESETS)},
                "lattice": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["topology", "size"],
                    "properties": {
                        "topology": {"enum": list(TOPOLOGIES)},
                        "size": {"oneOf": [{"type": "integer", "minimum": 1},
                                           {"type": "array", "minItems": 1,
                                            "items": {"type": "integer", "minimum": 1}}]},
                        "boundary": {"enum": ["open", "periodic"]},
                        "edges": {"type": "array", "items": {
                            "type": "array", "minItems": 2, "maxItems": 2,
                            "items": {"type": "integer", "minimum": 0}}},
                    },
                },
                "site": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["qubit_freqs", "mode_freqs"],
                    "properties": {
                        "qubit_freqs": _FREQ_LIST,
                        "mode_freqs": _FREQ_LIST,
                        "couplings": {"type": "array", "items": _FREQ_LIST},
                        "coupling_model": {"enum": list(COUPLING_MODELS)},
                        "qubit_labels": {"type": "array", "items": {"type": "string"}},
                        "mode_numbers": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    },
                },
                "coupling": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["hoppings"],
                    "properties": {
                        "hoppings": {"oneOf": [_FREQ, {"type": "array", "minItems": 1, "items": _FREQ}]},
                        "scale_by_mode_index": {"type": "boolean"},
                    },
                },
                "drives": {"type": "array", "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["site", "spin", "mode", "amplitude", "frequency"],
                    "properties": {
                        "site": {"type": "integer", "minimum": 0},
                        "spin": {"type": "string"},
                        "mode": {"type": "integer", "minimum": 1},
                        "amplitude": _FREQ,
                        "frequency": _FREQ,
                        "phase": {"type": "number"},
                    },
                }},
                "photon_cutoff": {"type": "integer", "minimum": 1},
            },
        },
        "derive": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "strict": {"type": "boolean"},
                "rwa_cutoff": _FREQ,
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "parameters": {"type": "object"},
                "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameters"],
            "properties": {
                "parameters": {
                    "type": "object",
                    "minProperties": 1,
                    "additionalProperties": {"oneOf": [
                        {"type": "array", "minItems": 1},
                        {"type": "object", "additionalProperties": False,
                         "required": ["start", "stop", "num"],
                         "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                                        "num": {"type": "integer", "minimum": 1}}},
                    ]},
                },
                "columns": {"type": "array", "items": {"type": "string"}},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "filter": {"type": "array", "items": {"type": "string"}},
                "tolerances": {"type": "object", "additionalProperties": {
                    "type": "object", "additionalProperties": {"type": "number"}}},
            },
        },
    },
}


# -- loading -----------------------------------------------------------------------


def _yaml_lines(text: str):
    try:
        return yaml.compose(text)
    except yaml.YAMLError:
        return None


def _node_line(root, path: Sequence) -> int | None:
    node = root
    line = None
    for key in path:
        if node is None:
            break
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt, line = v, k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def load_document(path: str | Path | None) -> tuple[dict, Any]:
    """Parse a JSON or YAML file. Returns the document and a node tree for line lookups."""
    if path is None:
        return {}, None
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {p}: {exc}") from None
    try:
        doc = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{p}: parse error: {exc}") from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return doc, _yaml_lines(text)


def _schema_at(path: Sequence[str]) -> dict | None:
    """Sub-schema for a dotted path, or None if the path leaves the schema."""
    node = SCHEMA
    for key in path:
        if node.get("type") == "array" or "items" in node:
            if not key.isdigit():
                return None
            node = node.get("items", {})
            continue
        props = node.get("properties")
        if props is None:
            extra = node.get("additionalProperties", True)
            if extra is False:
                return None
            node = extra if isinstance(extra, dict) else {}
            continue
        if key not in props:
            return None
        node = props[key]
    return node


def apply_overrides(doc: dict, overrides: Iterable[str]) -> dict:
    """Apply ``key.path=value`` overrides; values are parsed as YAML scalars or lists."""
    out = copy.deepcopy(doc)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        path = [k for k in key.strip().split(".") if k]
        if not path or _schema_at(path) is None:
            raise ConfigError(f"override key {key!r} is not a configuration field")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None
        node = out
        for depth, k in enumerate(path[:-1]):
            if isinstance(node, list):
                if int(k) >= len(node):
                    raise ConfigError(f"override index in {key!r} out of range "
                                      "(lists from presets must be given in full)")
                node = node[int(k)]
                continue
            if k not in node or node[k] is None:
                node[k] = [] if path[depth + 1].isdigit() else {}
            node = node[k]
        last = path[-1]
        if isinstance(node, list):
            idx = int(last)
            if idx >= len(node):
                raise ConfigError(f"override index {key!r} out of range")
            node[idx] = value
        else:
            node[last] = value
    return out


def validate(doc: dict, lines=None) -> dict:
    """Validate against the schema; report every violation with its field and line."""
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        msgs = []
        for err in errors:
            field_name = ".".join(str(p) for p in err.absolute_path) or "<document>"
            line = _node_line(lines, list(err.absolute_path)) if lines is not None else None
            where = f" (line {line})" if line else ""
            msgs.append(f"{field_name}{where}: {err.message}")
        raise ConfigError("configuration invalid:\n  " + "\n  ".join(msgs))
    return doc


def load_config(path: str | Path | None, overrides: Iterable[str] = ()) -> dict:
    doc, lines = load_document(path)
    doc = apply_overrides(doc, overrides)
    return validate(doc, lines)


# -- device resolution -------------------------------------------------------------


@dataclass
class Device:
    lattice: LatticeSpec
    site: SiteSpec
    coupling: InterSiteCoupling
    drives: list = field(default_factory=list)
    photon_cutoff: int = 1
    metadata: dict = field(default_factory=dict)


def _freqs(values) -> tuple[float, ...]:
    return tuple(parse_frequency(v) for v in values)


def resolve_device(section: dict | None) -> Device:
    """Build device objects from the ``device`` section (preset fields can be overridden)."""
    if not section:
        raise ConfigError("configuration has no device section")
    site = coupling = None
    drives: list = []
    meta: dict = {}
    if "preset" in section:
        p = preset(section["preset"])
        site, coupling, drives, meta = p.site, p.coupling, list(p.drives), dict(p.metadata)
        meta["preset"] = section["preset"]
    if "site" in section:
        s = section["site"]
        site = SiteSpec(
            _freqs(s["qubit_freqs"]),
            _freqs(s["mode_freqs"]),
            tuple(_freqs(row) for row in s.get("couplings", ())),
            s.get("coupling_model", "rwa"),
            tuple(s["qubit_labels"]) if "qubit_labels" in s else None,
            tuple(s["mode_numbers"]) if "mode_numbers" in s else None,
        )
    if "coupling" in section:
        c = section["coupling"]
        hops = c["hoppings"] if isinstance(c["hoppings"], list) else [c["hoppings"]]
        coupling = InterSiteCoupling(_freqs(hops), bool(c.get("scale_by_mode_index", False)))
    if "drives" in section:
        drives = [DriveSpec(d["site"], d["spin"], d["mode"], parse_frequency(d["amplitude"]),
                            parse_frequency(d["frequency"]), float(d.get("phase", 0.0)))
                  for d in section["drives"]]
    if site is None:
        raise ConfigError("device.site is required when no preset is given")
    if coupling is None:
        raise ConfigError("device.coupling is required when no preset is given")
    if "lattice" in section:
        lat = section["lattice"]
        lattice = make_lattice(lat["topology"], lat["size"], lat.get("boundary", "open"), lat.get("edges"))
    else:
        lattice = chain(2)
    for d in drives:
        if d.site >= lattice.num_sites:
            raise ConfigError(f"drive on site {d.site} outside a lattice of {lattice.num_sites} sites")
        site.spin_position(d.spin)
        if d.mode > len(site.mode_freqs):
            raise ConfigError(f"drive on mode {d.mode} but the site has {len(site.mode_freqs)} modes")
    return Device(lattice, site, coupling, drives, int(section.get("photon_cutoff", 1)), meta)
