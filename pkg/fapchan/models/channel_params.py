"""Channel parameterization and coordinate conventions.

Coordinates follow one frozen layout: the receiver is the plane
``x_n = 0`` and the transmitter sits at ``(0, ..., 0, distance)``. Public
operations take tangential offsets only; normal coordinates are implied.

Drift sign: a positive normal component points away from the receiver,
into the domain ``x_n > 0``.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

from .errors import ParameterError

SUPPORTED_DIMENSIONS = (2, 3)


def _finite_tuple(values: Sequence[float]) -> Tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ChannelParams:
    """Physical parameters of a drift-diffusion channel.

    Attributes:
        dimension: 2 or 3
        drift: drift velocity, one component per axis, last axis normal
        sigma2: sigma^2, with diffusion coefficient D = sigma^2 / 2
        distance: transmitter height above the receiver plane
    """

    dimension: int
    drift: Tuple[float, ...]
    sigma2: float
    distance: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift", _finite_tuple(self.drift))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "distance", float(self.distance))

        errors: List[str] = []
        if self.dimension not in SUPPORTED_DIMENSIONS:
            errors.append(f"dimension must be 2 or 3, got {self.dimension}")
        if len(self.drift) != self.dimension:
            errors.append(f"drift needs {self.dimension} components, got {len(self.drift)}")
        if not all(math.isfinite(v) for v in self.drift):
            errors.append(f"drift components must be finite, got {self.drift}")
        if not math.isfinite(self.sigma2) or self.sigma2 <= 0:
            errors.append(f"nonpositive diffusion: sigma2 must be > 0, got {self.sigma2}")
        if not math.isfinite(self.distance) or self.distance <= 0:
            errors.append(f"distance must be > 0, got {self.distance}")

        if errors:
            raise ParameterError("Invalid channel parameters:\n" + "\n".join(f"  - {e}" for e in errors))

    def diffusion_d(self) -> float:
        """Diffusion coefficient D = sigma^2 / 2."""
        return self.sigma2 / 2.0

    def drift_split(self) -> Tuple[Tuple[float, ...], float]:
        """Split the drift into (tangential components, normal component)."""
        return self.drift[:-1], self.drift[-1]

    def tangential_drift(self) -> Tuple[float, ...]:
        return self.drift[:-1]

    def normal_drift(self) -> float:
        return self.drift[-1]

    def speed(self) -> float:
        """Drift magnitude |v|."""
        return math.sqrt(sum(v * v for v in self.drift))

    def with_distance(self, distance: float) -> "ChannelParams":
        return ChannelParams(self.dimension, self.drift, self.sigma2, distance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "drift": list(self.drift),
            "sigma2": self.sigma2,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChannelParams":
        missing = [key for key in ("dimension", "drift", "sigma2", "distance") if key not in data]
        if missing:
            raise ParameterError(f"Channel parameters missing keys: {', '.join(missing)}")
        if not isinstance(data["drift"], (list, tuple)):
            raise ParameterError("Channel parameter 'drift' must be an array")
        try:
            dimension = int(data["dimension"])
        except (TypeError, ValueError):
            raise ParameterError(f"Channel parameter 'dimension' must be an integer, got {data['dimension']!r}")
        return params_new(dimension, data["drift"], data["sigma2"], data["distance"])


def params_new(dimension: int, drift: Sequence[float], sigma2: float, distance: float) -> ChannelParams:
    """Create validated channel parameters.

    Raises:
        ParameterError: dimension outside {2, 3}, sigma2 <= 0, distance <= 0,
            drift length mismatch or non-finite values
    """
    try:
        drift_values = tuple(float(v) for v in drift)
        sigma2_value = float(sigma2)
        distance_value = float(distance)
    except (TypeError, ValueError) as e:
        raise ParameterError(f"Channel parameters must be numeric: {str(e)}")
    return ChannelParams(dimension, drift_values, sigma2_value, distance_value)


def drift_split(params: ChannelParams) -> Tuple[Tuple[float, ...], float]:
    """Return (tangential drift, normal drift); recombining gives the drift."""
    return params.drift_split()


@dataclass(frozen=True)
class SourceOffset:
    """Tangential coordinates of the transmitter; its height is ``distance``."""

    tangential: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        values = _finite_tuple(self.tangential)
        if not all(math.isfinite(v) for v in values):
            raise ParameterError(f"Source offset must be finite, got {values}")
        object.__setattr__(self, "tangential", values)

    @classmethod
    def origin(cls, dimension: int) -> "SourceOffset":
        return cls(tuple(0.0 for _ in range(dimension - 1)))


@dataclass(frozen=True)
class BoundaryOffset:
    """Tangential coordinates of an arrival point on the receiver plane."""

    tangential: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        values = _finite_tuple(self.tangential)
        if not all(math.isfinite(v) for v in values):
            raise ParameterError(f"Boundary offset must be finite, got {values}")
        object.__setattr__(self, "tangential", values)

    @classmethod
    def origin(cls, dimension: int) -> "BoundaryOffset":
        return cls(tuple(0.0 for _ in range(dimension - 1)))


def check_offsets(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> None:
    """Raise ParameterError unless both offsets have dimension - 1 components."""
    expected = params.dimension - 1
    if len(source.tangential) != expected or len(arrival.tangential) != expected:
        raise ParameterError(
            f"Offsets need {expected} tangential components in {params.dimension}D, "
            f"got source {len(source.tangential)} and arrival {len(arrival.tangential)}"
        )
