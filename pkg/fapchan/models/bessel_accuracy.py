"""Accuracy contract for the modified Bessel functions."""

from dataclasses import dataclass

from config.constants import (
    BESSEL_ORACLE_MAX_SUBDIVISIONS,
    BESSEL_TARGET_RELATIVE_ERROR,
)

from .errors import ParameterError

MAX_TARGET_RELATIVE_ERROR = 1e-6


@dataclass(frozen=True)
class BesselAccuracy:
    """Target accuracy of the series/fraction evaluations and the oracle budget."""

    target_relative_error: float = BESSEL_TARGET_RELATIVE_ERROR
    max_oracle_subdivisions: int = BESSEL_ORACLE_MAX_SUBDIVISIONS

    def __post_init__(self) -> None:
        if not 0 < self.target_relative_error <= MAX_TARGET_RELATIVE_ERROR:
            raise ParameterError(
                f"target_relative_error must lie in (0, {MAX_TARGET_RELATIVE_ERROR}], got {self.target_relative_error}"
            )
        if self.max_oracle_subdivisions < 1:
            raise ParameterError(f"max_oracle_subdivisions must be >= 1, got {self.max_oracle_subdivisions}")
