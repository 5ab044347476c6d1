"""TOML parameter files.

A file declares its unit once at the top level and lists the parameters in a
``[params]`` table::

    angular-frequency-units = "dimensionless-gamma"   # or "2pi-MHz"

    [params]
    gamma_ext = 1.0
    kappa_c = 0.6
    g_a = 2.5                   # real number
    g_b = "2.5+0j"              # complex literal
    h = { abs = 10, arg = 0 }   # or { re = ..., im = ... }

Other tables (``[grid]``, ``[sweep]``, ``[matrix]``, ``[pulse]``, ``[fit]``)
are passed through untouched for the command-line front end.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .params import COMPLEX_FIELDS, REAL_FIELDS, SystemParams, ValidatedParams, validate

UNIT_KEY = "angular-frequency-units"
UNITS = ("2pi-MHz", "dimensionless-gamma")
PARAM_FIELDS = REAL_FIELDS + COMPLEX_FIELDS


@dataclass
class ParamsFile:
    params: ValidatedParams
    unit: str
    sections: Dict[str, Any] = field(default_factory=dict)

    def section(self, name: str) -> Dict[str, Any]:
        return dict(self.sections.get(name, {}))


def parse_number(value: Any, name: str = "value") -> complex:
    """Accept a TOML number, a complex literal string, or an ``{re, im}`` / ``{abs, arg}`` table."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: booleans are not numbers")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {value!r} as a complex number") from None
    if isinstance(value, dict):
        keys = set(value)
        if keys <= {"re", "im"} and keys:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        if keys == {"abs", "arg"} or keys == {"abs"}:
            return complex(float(value["abs"]) * math.cos(float(value.get("arg", 0.0))),
                           float(value["abs"]) * math.sin(float(value.get("arg", 0.0))))
        raise ConfigError(f"{name}: complex table needs keys re/im or abs/arg, got {sorted(keys)}")
    raise ConfigError(f"{name}: unsupported value {value!r}")


def params_from_mapping(table: Dict[str, Any], unit: str) -> ValidatedParams:
    unknown = set(table) - set(PARAM_FIELDS)
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)}; expected {list(PARAM_FIELDS)}")
    values = {}
    for name, raw in table.items():
        z = parse_number(raw, name)
        if name in REAL_FIELDS:
            if z.imag != 0.0:
                raise ConfigError(f"{name} must be real, got {raw!r}")
            values[name] = z.real
        else:
            values[name] = z
    p = validate(SystemParams(**values))
    if unit == "dimensionless-gamma" and p.gamma_ext != 1.0:
        raise ConfigError(f"dimensionless-gamma units require gamma_ext = 1, got {p.gamma_ext!r}")
    return p


def loads(text: str) -> ParamsFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    unit = doc.pop(UNIT_KEY, None)
    if unit is None:
        raise ConfigError(f"missing top-level key {UNIT_KEY!r} (one of {UNITS})")
    if unit not in UNITS:
        raise ConfigError(f"{UNIT_KEY} must be one of {UNITS}, got {unit!r}")
    table = doc.pop("params", None)
    if not isinstance(table, dict):
        raise ConfigError("missing [params] table")
    return ParamsFile(params_from_mapping(table, unit), unit, doc)


def load(path) -> ParamsFile:
    try:
        with open(os.fspath(path), encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read params file {path}: {exc.strerror}") from None
    return loads(text)


def dumps(params: SystemParams, unit: str = "dimensionless-gamma") -> str:
    """Write ``params`` back in the same format (complex values as re/im tables)."""
    lines = [f'{UNIT_KEY} = "{unit}"', "", "[params]"]
    for name in REAL_FIELDS:
        lines.append(f"{name} = {float(getattr(params, name))!r}")
    for name in COMPLEX_FIELDS:
        z = complex(getattr(params, name))
        lines.append(f"{name} = {{ re = {z.real!r}, im = {z.imag!r} }}")
    return "\n".join(lines) + "\n"
