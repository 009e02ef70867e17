"""Boundary unit handling.

Internally everything is SI (m, rad, N, N*m, rad/(N*m)). Config and report
files may carry values in the declared boundary units; conversion happens
exactly once at parse/emit time.
"""

import math

from .errors import ConfigError

_TO_SI = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "rad": 1.0,
    "deg": math.pi / 180.0,
    "urad/Nm": 1e-6,
    "rad/Nm": 1.0,
    "N": 1.0,
    "kN": 1e3,
    "Nm": 1.0,
    "N/m": 1.0,
    "N/mm": 1e3,
    "Nm/rad": 1.0,
    "m2": 1.0,
    "mm2": 1e-6,
}


def known_units():
    return sorted(_TO_SI)


def to_si(value, unit):
    try:
        factor = _TO_SI[unit]
    except KeyError:
        raise ConfigError(f"unknown unit {unit!r}; expected one of {known_units()}")
    return value * factor


def from_si(value, unit):
    try:
        factor = _TO_SI[unit]
    except KeyError:
        raise ConfigError(f"unknown unit {unit!r}; expected one of {known_units()}")
    return value / factor


def quantity(tokens, default_unit):
    """Parse a scalar-or-vector value with an optional trailing unit.

    Accepts the parsed form of values like '184.72 mm', '0.623 urad/Nm',
    '-10 -40 -70 deg' or a bare number (default_unit applies). Returns a
    float or a list of floats in SI.
    """
    if isinstance(tokens, (int, float)):
        return to_si(float(tokens), default_unit)
    if isinstance(tokens, str):
        raise ConfigError(f"expected a number, got {tokens!r}")
    toks = list(tokens)
    unit = default_unit
    if toks and isinstance(toks[-1], str):
        unit = toks.pop()
    if not toks or any(isinstance(t, str) for t in toks):
        raise ConfigError(f"malformed quantity {tokens!r}")
    vals = [to_si(float(t), unit) for t in toks]
    return vals[0] if len(vals) == 1 else vals


def quantity_groups(tokens):
    """Parse a value mixing units, like '350 mm -90 deg 675 mm 0 deg'.

    Each unit token converts the run of numbers before it. Returns the SI
    floats in order. Every number must be covered by a unit.
    """
    if isinstance(tokens, (int, float, str)):
        tokens = [tokens]
    out = []
    pending = []
    for tok in tokens:
        if isinstance(tok, str):
            if not pending:
                raise ConfigError(f"unit {tok!r} with no preceding numbers")
            out.extend(to_si(float(v), tok) for v in pending)
            pending = []
        else:
            pending.append(tok)
    if pending:
        raise ConfigError(f"trailing numbers without a unit in {tokens!r}")
    return out
