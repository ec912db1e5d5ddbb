"""Verification reports: per-check records, JSON round trip and regression diffs.

Report schema (``schema_version`` 1)::

    {
      "schema_version": 1,
      "artifact_version": "0.1.0",
      "suite": "ccr",
      "seed": 0,
      "config": {...},                      # echo of the run configuration
      "checks": [                           # ordered by check_id
        {"check_id": "ccr.grid_states",
         "anchor": "canonical commutator [x_j, p_k] = i theta delta_jk",
         "measured": 1.2e-15,
         "tolerance": 1e-07,
         "sense": "upper",                  # pass iff measured <= tolerance
         "passed": true,
         "runtime_s": 0.03,                 # excluded from determinism
         "detail": {...}},
        ...
      ],
      "summary": {"total": 3, "passed": 3, "failed": 0}
    }

``sense`` is ``"upper"`` for residuals and ``"lower"`` for quantities that
must stay above a floor (for example a signal-to-floor ratio).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import IoFailure, SchemaMismatch

SCHEMA_VERSION = 1
#: residuals below this fraction of their tolerance are treated as noise by diffs
NOISE_FRACTION = 1e-3


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


@dataclass
class CheckRecord:
    check_id: str
    anchor: str
    measured: float
    tolerance: float
    sense: str = "upper"
    passed: bool = False
    runtime_s: float = 0.0
    detail: dict = field(default_factory=dict)

    @staticmethod
    def evaluate(measured: float, tolerance: float, sense: str) -> bool:
        if not math.isfinite(measured):
            return False
        return measured <= tolerance if sense == "upper" else measured >= tolerance

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


@dataclass
class VerificationReport:
    suite: str
    seed: int
    config: dict
    checks: list[CheckRecord] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    artifact_version: str = __version__

    @property
    def summary(self) -> dict:
        n_pass = sum(c.passed for c in self.checks)
        return {"total": len(self.checks), "passed": n_pass, "failed": len(self.checks) - n_pass}

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        checks = sorted(self.checks, key=lambda c: c.check_id)
        return {"schema_version": self.schema_version, "artifact_version": self.artifact_version,
                "suite": self.suite, "seed": self.seed, "config": _jsonable(self.config),
                "checks": [c.to_dict() for c in checks], "summary": self.summary}

    def write(self, path) -> Path:
        path = Path(path)
        try:
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write report {path}: {exc}") from exc
        return path

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise SchemaMismatch(f"report schema {d.get('schema_version')} != {SCHEMA_VERSION}")
        checks = [CheckRecord(**{k: c[k] for k in ("check_id", "anchor", "measured", "tolerance",
                                                   "sense", "passed", "runtime_s", "detail")})
                  for c in d["checks"]]
        return cls(d["suite"], d["seed"], d["config"], checks, d["schema_version"],
                   d["artifact_version"])


def load_report(path) -> VerificationReport:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path} is not a JSON report") from exc
    if not isinstance(d, dict) or "schema_version" not in d:
        raise SchemaMismatch(f"{path} has no schema_version")
    return VerificationReport.from_dict(d)


def numeric_fields(report: VerificationReport) -> dict:
    """Flattened ``path -> number`` map of everything that must be bit-identical
    between two runs of the same config and seed.

    Checks are keyed by ``check_id``.  Wall-clock runtime is excluded, as are
    strings (the output directory, for one, legitimately differs).
    """
    d = report.to_dict()
    d["checks"] = {c["check_id"]: {k: v for k, v in c.items() if k != "runtime_s"}
                   for c in d["checks"]}
    out = {}

    def walk(obj, path):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(v, f"{path}.{k}" if path else str(k))
        elif isinstance(obj, list):
            for i, v in enumerate(obj):
                walk(v, f"{path}[{i}]")
        elif isinstance(obj, (bool, int, float)):
            out[path] = obj
        elif obj in ("nan", "inf", "-inf"):
            out[path] = obj

    walk(d, "")
    return out


def _badness(c: CheckRecord) -> float:
    """A number that grows as the check gets worse, floored at the noise level."""
    floor = NOISE_FRACTION * abs(c.tolerance)
    m = c.measured if isinstance(c.measured, (int, float)) else float("nan")
    if c.sense == "upper":
        return max(m, floor)
    # lower-bounded quantities get worse as they shrink
    return 1.0 / max(m, 1e-300)


def diff_reports(a: VerificationReport, b: VerificationReport, factor: float = 2.0) -> dict:
    """Per-check ratio ``badness(b) / badness(a)``; ratios above ``factor`` are regressions.

    Residuals below ``NOISE_FRACTION`` of their tolerance are clamped to that
    floor so that round-off jitter between seeds is not reported.
    """
    if a.schema_version != b.schema_version:
        raise SchemaMismatch(f"schema {a.schema_version} vs {b.schema_version}")
    ca = {c.check_id: c for c in a.checks}
    cb = {c.check_id: c for c in b.checks}
    ratios, regressions = {}, []
    for cid in sorted(set(ca) & set(cb)):
        ra, rb = _badness(ca[cid]), _badness(cb[cid])
        ratio = rb / ra if ra > 0 else (1.0 if rb == ra else float("inf"))
        if not math.isfinite(ratio) and math.isnan(ratio):
            ratio = float("inf")
        ratios[cid] = ratio
        if ratio > factor or (ca[cid].passed and not cb[cid].passed):
            regressions.append(cid)
    return {"ratios": ratios, "regressions": regressions,
            "only_in_a": sorted(set(ca) - set(cb)), "only_in_b": sorted(set(cb) - set(ca))}
