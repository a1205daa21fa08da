"""Report objects shared by every check, plus JSON/CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

SCHEMA = "wmod.report/1"


def jsonable(obj):
    """Convert scalars, tuples and nested containers to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return str(obj)
        return obj
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return str(obj)


def worse(current: float, value: float) -> float:
    """max() that lets a nan defect through as inf instead of dropping it."""
    return math.inf if math.isnan(value) else max(current, value)


@dataclass
class Report:
    check: str
    params: dict
    status: str
    max_defect: float | None = None
    evidence: list = field(default_factory=list)
    anchor: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "Unitary", "FiniteType")

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA,
            "check": self.check,
            "params": self.params,
            "status": self.status,
            "max_defect": self.max_defect,
            "evidence": self.evidence,
            "anchor": self.anchor,
        }
        if self.details:
            out["details"] = self.details
        return jsonable(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def dump_json(payload) -> str:
    """Deterministic JSON text (sorted keys, fixed float repr)."""
    return json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n"


def rows_to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
