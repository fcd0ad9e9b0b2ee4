"""Experiment reports and run manifests.

Reports hold only deterministic content (no clocks, no paths that depend on
when the run happened), so the same parameters and seed give the same bytes.
Manifests carry the timestamp and everything needed to replay a run.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PreconditionError


def plain(obj):
    """Recursively convert numpy scalars/arrays, tuples and sets to JSON types.

    Non-finite floats become strings so the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(plain(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if hasattr(obj, "to_json") and not isinstance(obj, type):
        out = obj.to_json()
        return plain(json.loads(out) if isinstance(out, str) else out)
    return obj


def dumps(obj):
    return json.dumps(plain(obj), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    measured: object
    threshold: object
    relation: str                   # how measured is compared with threshold, e.g. "<="

    def to_json(self):
        return {"name": self.name, "pass": bool(self.passed), "measured": self.measured,
                "threshold": self.threshold, "relation": self.relation}


def check(name, measured, relation, threshold, tol=0.0):
    """A verdict comparing a measured value with a threshold."""
    ops = {"<=": lambda a, b: a <= b + tol, ">=": lambda a, b: a >= b - tol,
           "==": lambda a, b: a == b if tol == 0 else abs(a - b) <= tol}
    if relation not in ops:
        raise PreconditionError(f"unknown relation {relation!r}")
    return Verdict(name, bool(ops[relation](measured, threshold)), measured, threshold, relation)


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    params: dict
    measurements: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    def verdict(self, name):
        return next(v for v in self.verdicts if v.name == name)

    def to_json(self):
        return {"experiment": self.experiment, "seed": self.seed, "params": self.params,
                "measurements": self.measurements, "verdicts": [v.to_json() for v in self.verdicts],
                "pass": self.passed}


def reports_json(reports):
    return dumps({"reports": [r.to_json() for r in reports]})


def summary_csv(reports):
    """Flat name,value rows for stdout: scalar measurements and verdicts."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "kind", "name", "value", "threshold", "pass"])
    for r in reports:
        for k, v in sorted(plain(r.measurements).items()):
            if isinstance(v, (int, float, str, bool)) or v is None:
                w.writerow([r.experiment, "measurement", k, v, "", ""])
        for v in r.verdicts:
            m = plain(v.measured)
            w.writerow([r.experiment, "verdict", v.name, m, f"{v.relation} {plain(v.threshold)}",
                        "pass" if v.passed else "FAIL"])
    return buf.getvalue()


@dataclass
class RunManifest:
    argv: list
    subcommand: str
    config: dict
    seed: int
    params: dict
    timestamp: str = ""
    version: str = __version__
    outputs: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)          # path -> sha256
    report_sha256: str = ""

    def to_json(self):
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, obj):
        known = set(cls.__dataclass_fields__)
        missing = {"argv", "subcommand", "seed", "params"} - set(obj)
        if missing:
            raise PreconditionError(f"manifest lacks {sorted(missing)}")
        return cls(**{k: v for k, v in obj.items() if k in known})

    @classmethod
    def read(cls, path):
        try:
            with open(path) as fh:
                return cls.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot read manifest {path}: {exc}") from exc

    def run_hash(self):
        key = dumps({"subcommand": self.subcommand, "params": self.params, "seed": self.seed})
        return hashlib.sha256(key.encode()).hexdigest()[:10]


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_run(root, manifest: RunManifest, report_text, extra=None):
    """Create runs/<UTC timestamp>-<hash>/ with report.json, extra files and
    manifest.json; returns the directory."""
    now = datetime.now(timezone.utc)
    manifest.timestamp = now.isoformat(timespec="seconds")
    stem = f"{now.strftime('%Y%m%dT%H%M%SZ')}-{manifest.run_hash()}"
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    run_dir = root / stem
    n = 1
    while run_dir.exists():
        run_dir = root / f"{stem}-{n}"
        n += 1
    run_dir.mkdir()
    files = {"report.json": report_text, **(extra or {})}
    for name, text in files.items():
        with open(run_dir / name, "w", newline="") as fh:
            fh.write(text)
    manifest.outputs = sorted(files)
    manifest.report_sha256 = hashlib.sha256(report_text.encode()).hexdigest()
    with open(run_dir / "manifest.json", "w") as fh:
        fh.write(dumps(manifest.to_json()))
    return run_dir

