"""Truncated half-plane grids and the fields solved on them."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np
from config.constants import (
    DEFAULT_GRID_HALF_WIDTH,
    DEFAULT_GRID_HEIGHT,
    DEFAULT_GRID_SPACING,
    DEFAULT_SOLVER_MAX_ITERATIONS,
    DEFAULT_SOLVER_TOLERANCE,
)
from numpy.typing import NDArray
from scipy.interpolate import RegularGridInterpolator

from .boundary_data import BoundaryData
from .channel_params import ChannelParams
from .errors import GridError

# Relative slack allowed when checking that h divides 2L and H
DIVISIBILITY_SLACK = 1e-6


class FarField(str, Enum):
    """Data imposed on the artificial edges x1 = -L, x1 = L and x2 = H."""

    ZERO = "zero"
    REPRESENTATION = "representation"


@dataclass(frozen=True)
class GridConfig:
    half_width: float = DEFAULT_GRID_HALF_WIDTH
    height: float = DEFAULT_GRID_HEIGHT
    spacing: float = DEFAULT_GRID_SPACING
    solver_tolerance: float = DEFAULT_SOLVER_TOLERANCE
    max_iterations: int = DEFAULT_SOLVER_MAX_ITERATIONS
    far_field: FarField = FarField.ZERO

    def __post_init__(self) -> None:
        errors: List[str] = []
        for name in ("half_width", "height", "spacing", "solver_tolerance"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                errors.append(f"{name} must be > 0, got {value}")
        if self.max_iterations < 1:
            errors.append(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not errors:
            for name, length in (("2L", 2 * self.half_width), ("H", self.height)):
                cells = length / self.spacing
                if abs(cells - round(cells)) > DIVISIBILITY_SLACK * max(1.0, cells):
                    errors.append(f"spacing {self.spacing} does not divide {name} = {length}")
                elif round(cells) < 2:
                    errors.append(f"{name} = {length} holds fewer than 2 cells of size {self.spacing}")
        if errors:
            raise GridError("Invalid grid configuration:\n" + "\n".join(f"  - {e}" for e in errors))

    @property
    def columns(self) -> int:
        """Node count along x1, edges included."""
        return int(round(2 * self.half_width / self.spacing)) + 1

    @property
    def rows(self) -> int:
        """Node count along x2, edges included."""
        return int(round(self.height / self.spacing)) + 1

    def x1_nodes(self) -> NDArray[np.float64]:
        return np.linspace(-self.half_width, self.half_width, self.columns)

    def x2_nodes(self) -> NDArray[np.float64]:
        return np.linspace(0.0, self.height, self.rows)

    def check_against(self, params: ChannelParams, g: BoundaryData) -> None:
        """Raise GridError if the domain is too small for this channel and data."""
        errors: List[str] = []
        radius = g.support_radius()
        lo, hi = g.support()
        if self.half_width < 10 * max(params.distance, radius):
            errors.append(f"half_width {self.half_width} must be >= 10 * max(distance, support radius {radius:g})")
        if self.height < 5 * params.distance:
            errors.append(f"height {self.height} must be >= 5 * distance {params.distance}")
        if lo < -self.half_width / 2 or hi > self.half_width / 2:
            errors.append(f"boundary data support [{lo:g}, {hi:g}] must lie inside [-L/2, L/2]")
        if errors:
            raise GridError("Grid does not fit the problem:\n" + "\n".join(f"  - {e}" for e in errors))

    def refined(self) -> "GridConfig":
        """Same domain with half the spacing."""
        return replace(self, spacing=self.spacing / 2)

    def enlarged(self, factor: float = 2.0) -> "GridConfig":
        return replace(self, half_width=self.half_width * factor, height=self.height * factor)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "half_width": self.half_width,
            "height": self.height,
            "spacing": self.spacing,
            "solver_tolerance": self.solver_tolerance,
            "max_iterations": self.max_iterations,
            "far_field": self.far_field.value,
        }


@dataclass(frozen=True)
class ScalarField2D:
    """Grid values ``values[j, i] = u(x1[i], x2[j])`` on [-L, L] x [0, H]."""

    x1: NDArray[np.float64]
    x2: NDArray[np.float64]
    values: NDArray[np.float64]
    grid: GridConfig
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (self.x2.size, self.x1.size):
            raise GridError(f"field shape {self.values.shape} does not match grid {(self.x2.size, self.x1.size)}")

    @property
    def spacing(self) -> float:
        return self.grid.spacing

    def value_at(self, x1: float, x2: float) -> float:
        """Bilinear interpolation inside the grid."""
        interpolator = RegularGridInterpolator((self.x2, self.x1), self.values, method="linear", bounds_error=True)
        return float(interpolator([[x2, x1]])[0])

    def interior(self) -> NDArray[np.float64]:
        return self.values[1:-1, 1:-1]

    def rows_iter(self) -> Iterator[Tuple[float, float, float]]:
        """(x1, x2, u) triples, x1 fastest."""
        for j, y in enumerate(self.x2):
            for i, x in enumerate(self.x1):
                yield float(x), float(y), float(self.values[j, i])
