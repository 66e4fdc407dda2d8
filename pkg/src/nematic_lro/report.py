"""Report assembly and atomic JSON/CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

DEFAULT_TOLERANCES = {
    "identity": 1e-10,
    "lemma": 1e-8,
    "margin": 1e-9,
    "z": 3.0,
    "stderr": 0.005,
}


def _plain(x):
    """Convert numpy scalars and arrays to JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class Report:
    config: dict
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name: str, ref: str, value, tolerance, passed: bool, **extra) -> bool:
        entry = {"name": name, "paper_ref": ref, "value": value, "tolerance": tolerance, "pass": bool(passed)}
        entry.update(extra)
        self.checks.append(entry)
        return bool(passed)

    def below(self, name: str, ref: str, value: float, tol: float) -> bool:
        return self.add(name, ref, value, tol, value < tol)

    def at_least(self, name: str, ref: str, value: float, tol: float) -> bool:
        """Margin check: ``value >= -tol``."""
        return self.add(name, ref, value, tol, value >= -tol)

    @property
    def failed(self) -> list[str]:
        return [c["name"] for c in self.checks if not c["pass"]]

    def payload(self) -> dict:
        """Everything except the timestamp header; identical runs give identical payloads."""
        return _plain(
            {
                "config": self.config,
                "version": f"nematic-lro {__version__}",
                "checks": self.checks,
                "data": self.data,
                "summary": {
                    "n_checks": len(self.checks),
                    "n_failed": len(self.failed),
                    "failed": self.failed,
                    "pass": not self.failed,
                },
            }
        )

    def to_json(self, timestamp: str | None = None) -> str:
        doc = self.payload()
        doc["header"] = {"timestamp": timestamp or datetime.now(timezone.utc).isoformat()}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def payload_bytes(text: str) -> bytes:
    """Canonical bytes of a JSON report with the header removed."""
    doc = json.loads(text)
    doc.pop("header", None)
    return json.dumps(doc, sort_keys=True).encode()


def rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if not rows:
        return ""
    columns = columns or list(rows[0])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _plain(r.get(k)) for k in columns})
    return buf.getvalue()


def write_atomic(path: str | Path, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
