"""Quadrature tolerances shared by every numerical integral."""

from dataclasses import dataclass
from typing import Any, Dict

from config.constants import (
    DEFAULT_ABSOLUTE_TOLERANCE,
    DEFAULT_MAX_SUBDIVISIONS,
    DEFAULT_RELATIVE_TOLERANCE,
)

from .errors import ParameterError

MIN_SUBDIVISIONS = 10


@dataclass(frozen=True)
class QuadratureConfig:
    relative_tolerance: float = DEFAULT_RELATIVE_TOLERANCE
    absolute_tolerance: float = DEFAULT_ABSOLUTE_TOLERANCE
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS

    def __post_init__(self) -> None:
        errors = []
        if not self.relative_tolerance > 0:
            errors.append(f"relative_tolerance must be > 0, got {self.relative_tolerance}")
        if not self.absolute_tolerance > 0:
            errors.append(f"absolute_tolerance must be > 0, got {self.absolute_tolerance}")
        if self.max_subdivisions < MIN_SUBDIVISIONS:
            errors.append(f"max_subdivisions must be >= {MIN_SUBDIVISIONS}, got {self.max_subdivisions}")
        if errors:
            raise ParameterError("Invalid quadrature configuration:\n" + "\n".join(f"  - {e}" for e in errors))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "relative_tolerance": self.relative_tolerance,
            "absolute_tolerance": self.absolute_tolerance,
            "max_subdivisions": self.max_subdivisions,
        }
