"""Structured outcome of an oracle comparison."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

LOWER_BOUND_SUFFIXES = ("p_value", "ratio")


def is_lower_bound(metric: str) -> bool:
    """Metrics named *p_value or *ratio must reach their tolerance; all others must stay below it."""
    return metric.endswith(LOWER_BOUND_SUFFIXES)


def metric_within(metric: str, value: float, tolerance: float) -> bool:
    if math.isnan(value):
        return False
    return value >= tolerance if is_lower_bound(metric) else value <= tolerance


@dataclass
class ValidationReport:
    """Metrics compared against the tolerance of the same name.

    A report passes iff it carries no error and every metric that has a
    tolerance is within it.
    """

    name: str
    metrics: Dict[str, float] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        return all(metric_within(k, v, self.tolerances[k]) for k, v in self.metrics.items() if k in self.tolerances)

    def failing_metrics(self) -> List[str]:
        return [k for k, v in self.metrics.items() if k in self.tolerances and not metric_within(k, v, self.tolerances[k])]

    @classmethod
    def failed(cls, name: str, error: str, params: Optional[Dict[str, Any]] = None) -> "ValidationReport":
        return cls(name=name, params=params or {}, error=error)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "name": self.name,
            "metrics": {k: _json_number(v) for k, v in self.metrics.items()},
            "tolerances": dict(self.tolerances),
            "pass": self.passed,
            "params": self.params,
            "config": self.config,
        }
        if self.error is not None:
            data["error"] = self.error
        return data


def _json_number(value: float) -> Optional[float]:
    # JSON has no NaN/Infinity
    return float(value) if math.isfinite(value) else None
