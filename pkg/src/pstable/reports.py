"""Structured results of inequality and estimate checks, with a JSON schema."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

REPORT_SCHEMA: Dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pstable report",
    "type": "object",
    "required": ["name", "lhs", "rhs", "constant", "margin", "resolution", "pass"],
    "properties": {
        "name": {"type": "string"},
        "lhs": {"type": ["number", "null"]},
        "rhs": {"type": ["number", "null"]},
        "constant": {"type": ["number", "null"]},
        "margin": {"type": ["number", "null"]},
        "resolution": {"type": ["string", "number", "null"]},
        "pass": {"type": "boolean"},
        "tol": {"type": ["number", "null"]},
        "details": {"type": "object"},
        "s": {"type": ["number", "null"]},
        "constant_measured": {"type": ["number", "null"]},
    },
}


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        try:
            return _clean(x.item())
        except (TypeError, ValueError):
            pass
    return x


def relative_margin(lhs: float, rhs: float) -> float:
    """(rhs - lhs) / |rhs|; 0 when both sides vanish."""
    if rhs == 0.0:
        return 0.0 if lhs <= 0.0 else -math.inf
    return (rhs - lhs) / abs(rhs)


@dataclass
class Report:
    name: str
    lhs: float
    rhs: float
    constant: Optional[float]
    margin: float
    resolution: Any
    passed: bool
    tol: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def compare(cls, name, lhs, rhs, constant=None, tol=0.0, resolution=None, **details):
        """Build a report for the claim ``lhs <= rhs * (1 + tol)``."""
        lhs = float(lhs)
        rhs = float(rhs)
        ok = bool(lhs <= rhs * (1.0 + tol) or (lhs <= 0.0 and rhs >= 0.0))
        return cls(name, lhs, rhs, constant, relative_margin(lhs, rhs), resolution, ok, tol,
                   dict(details))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return _clean(d)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class EstimateReport(Report):
    s: Optional[float] = None
    constant_measured: Optional[float] = None
