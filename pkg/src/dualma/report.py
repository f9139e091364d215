"""Schema-versioned JSON run reports.

Floats are written with 17 significant digits and keys are sorted so that
identical runs give byte-identical files. Wall-clock timings are kept out of
the report and written to ``timings.json`` instead.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "dualma.report/1"
_VOLATILE = {"wall_time"}


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def _encode(obj, volatile, timings, path=""):
    if isinstance(obj, dict):
        parts = []
        for k in sorted(obj, key=str):
            if k in volatile:
                timings[f"{path}{k}"] = obj[k]
                continue
            parts.append(f"{json.dumps(str(k))}: {_encode(obj[k], volatile, timings, f'{path}{k}.')}")
        return "{" + ", ".join(parts) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v, volatile, timings, path) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), volatile, timings, path)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def dumps(doc: dict, volatile=_VOLATILE):
    """Deterministic JSON text of ``doc`` and the dict of stripped volatile entries."""
    timings = {}
    return _encode(doc, set(volatile), timings), timings


@dataclass
class Report:
    subcommand: str
    config: dict
    results: dict = field(default_factory=dict)
    properties: dict = field(default_factory=dict)
    status: int = 0
    message: str = ""

    def check(self, name: str, passed: bool, **detail) -> bool:
        self.properties[name] = {"passed": bool(passed), **detail}
        return bool(passed)

    @property
    def all_passed(self) -> bool:
        return all(v["passed"] for v in self.properties.values())

    def failed(self) -> list:
        return [k for k, v in self.properties.items() if not v["passed"]]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "config": self.config,
            "results": self.results,
            "properties": self.properties,
            "status": self.status,
            "message": self.message,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        text, timings = dumps(self.to_dict())
        path = out / "report.json"
        path.write_text(text + "\n")
        (out / "timings.json").write_text(json.dumps(timings, sort_keys=True, indent=1) + "\n")
        return path
