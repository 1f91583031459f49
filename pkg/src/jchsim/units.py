"""Frequency units.

Hamiltonians are expressed as cyclic frequencies in MHz and times in
microseconds, so a propagator reads ``exp(-2j*pi*H*t)``.
"""

from __future__ import annotations

import re

from .errors import ConfigError

TWO_PI = 2.0 * 3.141592653589793

_SCALE = {"hz": 1e-6, "khz": 1e-3, "mhz": 1.0, "ghz": 1e3}
_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z]*)\s*$")


def parse_frequency(value) -> float:
    """Convert a number (MHz) or a string such as ``"4 GHz"`` to MHz."""
    if isinstance(value, bool):
        raise ConfigError(f"not a frequency: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"not a frequency: {value!r}")
    match = _PATTERN.match(value)
    if match is None:
        raise ConfigError(f"cannot parse frequency {value!r}")
    number, unit = match.groups()
    unit = unit.lower() or "mhz"
    if unit not in _SCALE:
        raise ConfigError(f"unknown frequency unit {unit!r} in {value!r}")
    return float(number) * _SCALE[unit]
