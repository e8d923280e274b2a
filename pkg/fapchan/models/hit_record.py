"""Monte Carlo configuration and first-arrival outcomes."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from config.constants import (
    DEFAULT_DT,
    DEFAULT_PARTICLE_COUNT,
    DEFAULT_SEED,
    DEFAULT_STREAMS,
    DEFAULT_T_MAX_FACTOR,
    FAPCHAN_WORKERS,
)
from numpy.typing import NDArray

from .channel_params import ChannelParams
from .errors import ParameterError


class HitStatus(str, Enum):
    ABSORBED = "absorbed"
    CENSORED = "censored"


@dataclass(frozen=True)
class SimConfig:
    """Simulation knobs.

    ``t_max=None`` means the default horizon of 200 d^2 / sigma^2. ``workers``
    only sets how many threads run the streams; results never depend on it.
    """

    particle_count: int = DEFAULT_PARTICLE_COUNT
    dt: float = DEFAULT_DT
    t_max: Optional[float] = None
    seed: int = DEFAULT_SEED
    streams: int = DEFAULT_STREAMS
    bridge_correction: bool = True
    workers: int = FAPCHAN_WORKERS

    def __post_init__(self) -> None:
        errors: List[str] = []
        if self.particle_count < 1:
            errors.append(f"particle_count must be >= 1, got {self.particle_count}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            errors.append(f"dt must be > 0, got {self.dt}")
        if self.t_max is not None:
            if not np.isfinite(self.t_max) or self.t_max <= 0:
                errors.append(f"t_max must be > 0, got {self.t_max}")
            elif self.dt >= self.t_max:
                errors.append(f"dt must be < t_max, got dt={self.dt} t_max={self.t_max}")
        if self.streams < 1:
            errors.append(f"streams must be >= 1, got {self.streams}")
        if self.workers < 1:
            errors.append(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            errors.append(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if errors:
            raise ParameterError("Invalid simulation configuration:\n" + "\n".join(f"  - {e}" for e in errors))

    def resolve_t_max(self, params: ChannelParams) -> float:
        """Horizon for this channel, validated against dt."""
        t_max = self.t_max if self.t_max is not None else DEFAULT_T_MAX_FACTOR * params.distance**2 / params.sigma2
        if self.dt >= t_max:
            raise ParameterError(f"dt must be < t_max, got dt={self.dt} t_max={t_max}")
        return t_max

    def to_dict(self) -> Dict[str, Any]:
        return {
            "particle_count": self.particle_count,
            "dt": self.dt,
            "t_max": self.t_max,
            "seed": self.seed,
            "streams": self.streams,
            "bridge_correction": self.bridge_correction,
        }


@dataclass(frozen=True)
class HitRecord:
    """One particle's outcome.

    Censored records carry the tangential position at t_max and hit_time = t_max.
    """

    tangential_position: Tuple[float, ...]
    hit_time: float
    status: HitStatus

    @property
    def absorbed(self) -> bool:
        return self.status is HitStatus.ABSORBED


@dataclass(frozen=True)
class HitBatch:
    """Column view of a whole run, in particle order."""

    positions: NDArray[np.float64]
    times: NDArray[np.float64]
    absorbed: NDArray[np.bool_]
    t_max: float

    def __post_init__(self) -> None:
        n = self.times.shape[0]
        if self.positions.ndim != 2 or self.positions.shape[0] != n or self.absorbed.shape != (n,):
            raise ParameterError(
                f"HitBatch columns disagree: positions {self.positions.shape}, "
                f"times {self.times.shape}, absorbed {self.absorbed.shape}"
            )

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def tangential_dimension(self) -> int:
        return int(self.positions.shape[1])

    @property
    def absorbed_count(self) -> int:
        return int(np.count_nonzero(self.absorbed))

    @property
    def absorbed_fraction(self) -> float:
        return self.absorbed_count / len(self) if len(self) else 0.0

    @property
    def mean_absorbed_time(self) -> float:
        if self.absorbed_count == 0:
            return float("nan")
        return float(np.mean(self.times[self.absorbed]))

    def absorbed_positions(self, axis: int = 0) -> NDArray[np.float64]:
        return self.positions[self.absorbed, axis]

    def records(self) -> List[HitRecord]:
        return [
            HitRecord(
                tuple(float(v) for v in self.positions[i]),
                float(self.times[i]),
                HitStatus.ABSORBED if self.absorbed[i] else HitStatus.CENSORED,
            )
            for i in range(len(self))
        ]

    @classmethod
    def from_records(cls, records: List[HitRecord], t_max: float = float("inf")) -> "HitBatch":
        if not records:
            raise ParameterError("Cannot build a HitBatch from an empty record set")
        width = len(records[0].tangential_position)
        positions = np.array([r.tangential_position for r in records], dtype=np.float64).reshape(len(records), width)
        times = np.array([r.hit_time for r in records], dtype=np.float64)
        absorbed = np.array([r.absorbed for r in records], dtype=np.bool_)
        return cls(positions, times, absorbed, t_max)
