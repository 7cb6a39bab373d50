"""Parameter resolution: documented defaults, then a JSON file, then command-line flags."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import ConfigError
from .grid import DEFAULT_L, DEFAULT_N

THREADS_ENV = "RESTCONV_THREADS"

# key -> (type, default); ``None`` defaults are resolved from other keys
SCHEMA = {
    "n": (int, 2),
    "N": (int, None),
    "L": (float, DEFAULT_L),
    "H": (str, "coord:1"),
    "convention": (str, "surface"),
    "seed": (int, 0),
    "seeds": (int, 10),
    "triples": (int, 5),
    "r": (str, "2"),
    "p": (str, "inf"),
    "s": (float, 1.0),
    "t": (float, 1.0),
    "d": (int, 1),
    "phase": (str, "dot"),
    "lambdas": (str, "4,16,64"),
    "refinements": (int, 2),
    "refine_steps": (int, 20),
    "stable_tol": (float, 0.02),
    "per_octave": (int, 8),
    "kernel": (str, "heat:1"),
    "j_range": (str, "2..6"),
    "s_list": (str, "0.25,0.75"),
}


def _coerce(key: str, value):
    typ, _ = SCHEMA[key]
    if value is None:
        return None
    if typ is str:
        if isinstance(value, (str, int, float)) and not isinstance(value, bool):
            return str(value)
    elif typ is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif typ is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    raise ConfigError(f"config key {key!r}: expected {typ.__name__}, got {type(value).__name__} ({value!r})")


def defaults() -> dict:
    return {k: d for k, (_, d) in SCHEMA.items()}


def load_config(path=None, flags: dict | None = None) -> dict:
    """Resolve the full parameter set.

    Parameters
    ----------
    path : str or Path, optional
        JSON object with a subset of the schema keys.
    flags : dict, optional
        Explicitly given command-line values; ``None`` entries are ignored.

    Returns
    -------
    dict
        Every schema key plus ``conflicts`` (flag-over-file overrides) and
        ``threads`` (from the environment, recorded only).
    """
    cfg = defaults()
    from_file = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path}: top level must be an object")
        for k, v in raw.items():
            if k not in SCHEMA:
                raise ConfigError(f"config key {k!r}: unknown key; allowed keys are {sorted(SCHEMA)}")
            from_file[k] = _coerce(k, v)
        cfg.update(from_file)
    conflicts = []
    for k, v in (flags or {}).items():
        if v is None:
            continue
        if k not in SCHEMA:
            raise ConfigError(f"flag {k!r} is not a configuration key")
        v = _coerce(k, v)
        if k in from_file and from_file[k] != v:
            conflicts.append({"key": k, "file": from_file[k], "flag": v, "used": "flag"})
        cfg[k] = v
    if cfg["n"] not in DEFAULT_N:
        raise ConfigError(f"config key 'n': ambient dimension must be 1..6, got {cfg['n']}")
    if cfg["N"] is None:
        cfg["N"] = DEFAULT_N[cfg["n"]]
    if cfg["convention"] not in ("surface", "rho"):
        raise ConfigError(f"config key 'convention': expected 'surface' or 'rho', got {cfg['convention']!r}")
    cfg["conflicts"] = conflicts
    cfg["threads"] = os.environ.get(THREADS_ENV)
    return cfg


def parse_list(text: str, kind=float) -> list:
    """``"a,b,c"`` or a doubling range ``"16..1024"`` (powers of two between the ends)."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = (kind(x) for x in text.split(".."))
        if lo <= 0 or hi < lo:
            raise ConfigError(f"bad range {text!r}: need 0 < start <= stop")
        out = [lo]
        while out[-1] * 2 <= hi:
            out.append(kind(out[-1] * 2))
        return out
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from exc


def parse_int_range(text: str) -> list:
    """``"2..6"`` as the inclusive integer range, or a comma list."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x.strip()]
