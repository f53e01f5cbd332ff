"""Run configuration: TOML with flat ``key = value`` sections.

::

    [noise]
    sigma_f_mhz = 61.0
    p_spam = 0.016

    [run]
    shots = 0
    seed = 0

Key names are unique across sections, so a bare top-level ``p_spam = 0.02``
is accepted as shorthand for ``noise.p_spam``. Absent keys take their
defaults; unknown keys and out-of-range values raise :class:`ConfigError`
naming the key path and, when known, the line.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np
import tomli
import tomli_w

from .experiments import DEFAULT_DELAYS, DEFAULT_DETUNINGS, DEFAULT_LENGTHS, DEFAULT_RESAMPLES, RateParams
from .nv import DELTA_PERP_DEFAULT, LAMBDA_SO_DEFAULT, StrainParams
from .protocol import (
    HERALD_SCALE_DEFAULT,
    P_SPAM_DEFAULT,
    PREP_FIDELITY_DEFAULT,
    SIGMA_F_DEFAULT,
    SIGMA_T_DEFAULT,
    NoiseParams,
)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


def _prob(v):
    return 0.0 <= v <= 1.0, "must be in [0, 1]"


def _positive(v):
    return v > 0, "must be > 0"


def _nonneg(v):
    return v >= 0, "must be >= 0"


def _zpl(v):
    return 0.0 < v <= 1.0, "must be in (0, 1]"


def _any(v):
    return True, ""


@dataclass(frozen=True)
class _Key:
    kind: str  # float | int | str | grid
    default: Any
    check: Callable = _any


SCHEMA: dict[str, dict[str, _Key]] = {
    "noise": {
        "sigma_f_mhz": _Key("float", SIGMA_F_DEFAULT, _positive),
        "sigma_t_us": _Key("float", SIGMA_T_DEFAULT, _positive),
        # Optional separate width for the transfer-vs-delay sweep; unset means sigma_t_us.
        "sigma_t_transfer_us": _Key("float", None, _positive),
        "p_spam": _Key("float", P_SPAM_DEFAULT, _prob),
        "prep_fidelity": _Key("float", PREP_FIDELITY_DEFAULT, _prob),
        "herald_scale": _Key("float", HERALD_SCALE_DEFAULT, _prob),
        "delta_perp_ghz": _Key("float", DELTA_PERP_DEFAULT, _nonneg),
        "lambda_so_ghz": _Key("float", LAMBDA_SO_DEFAULT, _positive),
    },
    "rates": {
        "p_zpl": _Key("float", 0.03, _zpl),
        "attenuation_db_per_km": _Key("float", 0.2, _nonneg),
        "repetition_rate_hz": _Key("float", 1e6, _positive),
    },
    "grids": {
        "detunings_mhz": _Key("grid", DEFAULT_DETUNINGS),
        "delays_us": _Key("grid", DEFAULT_DELAYS, _nonneg),
        "lengths_km": _Key("grid", DEFAULT_LENGTHS, _nonneg),
    },
    "run": {
        "shots": _Key("int", 0, _nonneg),
        "seed": _Key("int", 0, _nonneg),
        "resamples": _Key("int", DEFAULT_RESAMPLES, lambda v: (v >= 100, "must be >= 100")),
        "out": _Key("str", "."),
    },
}

_SECTION_OF = {key: section for section, keys in SCHEMA.items() for key in keys}


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Effective settings after defaults, file values and overrides."""

    values: dict = field(repr=False)

    def __getitem__(self, path: str):
        section, key = path.split(".")
        return self.values[section][key]

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return _plain(self.values) == _plain(other.values)

    @property
    def noise(self) -> NoiseParams:
        n = self.values["noise"]
        return NoiseParams(
            sigma_f=n["sigma_f_mhz"],
            sigma_t=n["sigma_t_us"],
            p_spam=n["p_spam"],
            prep_fidelity=n["prep_fidelity"],
            herald_scale=n["herald_scale"],
            strain=StrainParams(n["delta_perp_ghz"], n["lambda_so_ghz"]),
        )

    @property
    def transfer_noise(self) -> NoiseParams:
        """Noise for the transfer-vs-delay sweep, honoring ``sigma_t_transfer_us``."""
        override = self.values["noise"]["sigma_t_transfer_us"]
        base = self.noise
        if override is None:
            return base
        return dataclasses.replace(base, sigma_t=override)

    @property
    def rates(self) -> RateParams:
        r = self.values["rates"]
        return RateParams(
            p_zpl=r["p_zpl"], attenuation_db_per_km=r["attenuation_db_per_km"], repetition_rate=r["repetition_rate_hz"]
        )

    @property
    def shots(self) -> int:
        return self.values["run"]["shots"]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def resamples(self) -> int:
        return self.values["run"]["resamples"]

    @property
    def out(self) -> str:
        return self.values["run"]["out"]

    def grid(self, name: str) -> np.ndarray:
        return np.asarray(self.values["grids"][name], dtype=float)

    def snapshot(self) -> dict:
        """JSON/TOML-ready copy of every effective value (unset optionals omitted)."""
        return _plain(self.values)


def _plain(values: dict) -> dict:
    out = {}
    for section, keys in values.items():
        out[section] = {}
        for k, v in keys.items():
            if v is None:
                continue
            out[section][k] = [float(x) for x in v] if isinstance(v, (list, tuple, np.ndarray)) else v
    return out


def _line_of(text: str, section: str | None, key: str) -> int | None:
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]", stripped)
        if header:
            current = header.group(1)
            continue
        if re.match(rf"^{re.escape(key)}\s*=", stripped) and current == section:
            return n
    return None


def _coerce(path: str, spec: _Key, value, line):
    def fail(msg):
        raise ConfigError(msg, key=path, line=line)

    if spec.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail(f"expected a number, got {value!r}")
        value = float(value)
        if not np.isfinite(value):
            fail("must be finite")
    elif spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"expected an integer, got {value!r}")
    elif spec.kind == "str":
        if not isinstance(value, str):
            fail(f"expected a string, got {value!r}")
    elif spec.kind == "grid":
        if not isinstance(value, list) or not value:
            fail("expected a nonempty list of numbers")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            fail("grid entries must be numbers")
        for v in value:
            ok, msg = spec.check(v)
            if not ok:
                fail(f"entry {v!r} {msg}")
        return [float(v) for v in value]
    ok, msg = spec.check(value)
    if not ok:
        fail(f"value {value!r} {msg}")
    return value


def _resolve(path: str, line=None) -> tuple[str, str]:
    parts = path.split(".")
    if len(parts) == 1 and parts[0] in _SECTION_OF:
        return _SECTION_OF[parts[0]], parts[0]
    if len(parts) == 2 and parts[0] in SCHEMA and parts[1] in SCHEMA[parts[0]]:
        return parts[0], parts[1]
    raise ConfigError("unknown key", key=path, line=line)


def _defaults() -> dict:
    return {
        section: {k: (list(map(float, spec.default)) if spec.kind == "grid" else spec.default) for k, spec in keys.items()}
        for section, keys in SCHEMA.items()
    }


def parse_config(text: str = "", overrides: Iterable[str] = ()) -> RunConfig:
    """Parse a TOML document and ``section.key=value`` overrides into a :class:`RunConfig`."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None

    values = _defaults()
    seen = set()

    def assign(section, key, raw, line, label):
        path = f"{section}.{key}"
        if path in seen:
            raise ConfigError("given twice (section and top level)", key=path, line=line)
        seen.add(path)
        values[section][key] = _coerce(label, SCHEMA[section][key], raw, line)

    for name, raw in doc.items():
        if isinstance(raw, dict):
            if name not in SCHEMA:
                raise ConfigError("unknown section", key=name, line=_header_line(text, name))
            for key, v in raw.items():
                line = _line_of(text, name, key)
                if key not in SCHEMA[name]:
                    raise ConfigError("unknown key", key=f"{name}.{key}", line=line)
                assign(name, key, v, line, f"{name}.{key}")
        else:
            line = _line_of(text, None, name)
            section, key = _resolve(name, line)
            assign(section, key, raw, line, name)

    for item in overrides:
        path, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        section, key = _resolve(path.strip())
        values[section][key] = _coerce(f"{section}.{key}", SCHEMA[section][key], _parse_value(raw.strip()), None)

    cfg = RunConfig(values)
    try:
        cfg.noise, cfg.rates
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _header_line(text: str, section: str) -> int | None:
    for n, line in enumerate(text.splitlines(), start=1):
        if re.match(rf"^\[\s*{re.escape(section)}\s*\]", line.strip()):
            return n
    return None


def _parse_value(raw: str):
    try:
        return tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        return raw


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.snapshot())
