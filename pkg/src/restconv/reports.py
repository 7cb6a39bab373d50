"""Verification records and their JSON-lines / CSV serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ["inequality_id", "params", "lhs", "rhs", "ratio", "pass", "tol"]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class VerificationReport:
    """One inequality instance: ``lhs <= rhs`` up to ``tol``.

    For exact inequalities ``passed`` is ``ratio <= 1 + tol``.  Checks whose
    meaning is refinement stability set ``criterion="stability"`` and fill
    ``passed`` from the stability test.
    """

    inequality_id: str
    lhs: float
    rhs: float
    params: dict = field(default_factory=dict)
    tol: float = 1e-9
    criterion: str = "bound"
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        if self.passed is None:
            self.passed = bool(self.ratio <= 1 + self.tol)

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        d["pass"] = d.pop("passed")
        d["version"] = __version__
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def write_jsonl(records, fh) -> None:
    for r in records:
        fh.write((r.to_json() if hasattr(r, "to_json") else json.dumps(_jsonable(r), sort_keys=True)) + "\n")


def write_csv(reports, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["#schema", CSV_SCHEMA_VERSION])
    w.writerow(CSV_COLUMNS)
    for r in reports:
        d = r.to_dict()
        w.writerow([d["inequality_id"], json.dumps(d["params"], sort_keys=True), d["lhs"], d["rhs"], d["ratio"], d["pass"], d["tol"]])


def to_csv_string(reports) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()


def stability_verdict(values, stable_tol: float = 0.02) -> dict:
    """Relative drift between consecutive refinements and whether all stay below ``stable_tol``."""
    v = np.asarray(values, dtype=float)
    drift = np.abs(np.diff(v)) / np.maximum(np.abs(v[:-1]), 1e-300)
    return {"values": v.tolist(), "drift": drift.tolist(), "stable": bool(np.all(np.isfinite(v)) and np.all(drift < stable_tol))}
