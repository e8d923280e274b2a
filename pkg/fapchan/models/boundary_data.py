"""Boundary functions g on the receiver plane.

Line data (2D channels) has a one-component center; planar data (3D
channels) has a two-component center, and indicators become disks and bumps
become radial Gaussians. Tabulated data is line data only.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from config.constants import BOUNDARY_DECAY_LEVEL
from numpy.typing import ArrayLike, NDArray

from .errors import ParameterError

Center = Union[float, Sequence[float]]


class BoundaryKind(str, Enum):
    INDICATOR = "indicator"
    GAUSSIAN_BUMP = "gaussian_bump"
    TABULATED = "tabulated"
    CONSTANT = "constant"


def _as_center(center: Center) -> Tuple[float, ...]:
    if isinstance(center, (int, float)):
        return (float(center),)
    return tuple(float(c) for c in center)


@dataclass(frozen=True)
class BoundaryData:
    kind: BoundaryKind
    center: Tuple[float, ...] = (0.0,)
    halfwidth: float = 0.0
    width: float = 0.0
    value: float = 1.0
    abscissae: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        errors: List[str] = []
        if len(self.center) not in (1, 2) or not all(math.isfinite(c) for c in self.center):
            errors.append(f"center must have 1 or 2 finite components, got {self.center}")
        if not math.isfinite(self.value):
            errors.append(f"value must be finite, got {self.value}")
        if self.kind is BoundaryKind.INDICATOR and not self.halfwidth > 0:
            errors.append(f"indicator halfwidth must be > 0, got {self.halfwidth}")
        if self.kind is BoundaryKind.GAUSSIAN_BUMP and not self.width > 0:
            errors.append(f"gaussian bump width must be > 0, got {self.width}")
        if self.kind is BoundaryKind.TABULATED:
            xs = np.asarray(self.abscissae, dtype=float)
            ys = np.asarray(self.values, dtype=float)
            if xs.size < 2 or xs.shape != ys.shape:
                errors.append(f"tabulated data needs >= 2 matching points, got {xs.size} abscissae and {ys.size} values")
            elif not np.all(np.diff(xs) > 0):
                errors.append("tabulated abscissae must be strictly increasing")
            if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
                errors.append("tabulated abscissae and values must be finite")
            if len(self.center) != 1:
                errors.append("tabulated data is only defined on a line")
        if errors:
            raise ParameterError("Invalid boundary data:\n" + "\n".join(f"  - {e}" for e in errors))

    # -- constructors -------------------------------------------------------

    @classmethod
    def indicator(cls, center: Center, halfwidth: float, value: float = 1.0) -> "BoundaryData":
        """``value`` on |y - center| <= halfwidth (interval or disk), 0 elsewhere."""
        return cls(BoundaryKind.INDICATOR, _as_center(center), halfwidth=float(halfwidth), value=float(value))

    @classmethod
    def gaussian_bump(cls, center: Center, width: float, amplitude: float = 1.0) -> "BoundaryData":
        return cls(BoundaryKind.GAUSSIAN_BUMP, _as_center(center), width=float(width), value=float(amplitude))

    @classmethod
    def tabulated(cls, abscissae: Sequence[float], values: Sequence[float]) -> "BoundaryData":
        """Piecewise-linear data, zero outside the table."""
        return cls(
            BoundaryKind.TABULATED,
            abscissae=tuple(float(x) for x in abscissae),
            values=tuple(float(v) for v in values),
        )

    @classmethod
    def constant(cls, value: float = 1.0, planar: bool = False) -> "BoundaryData":
        return cls(BoundaryKind.CONSTANT, (0.0, 0.0) if planar else (0.0,), value=float(value))

    # -- geometry -----------------------------------------------------------

    @property
    def planar(self) -> bool:
        return len(self.center) == 2

    def support_radius(self) -> float:
        """Distance from the center beyond which |g| < BOUNDARY_DECAY_LEVEL."""
        if self.kind is BoundaryKind.INDICATOR:
            return self.halfwidth
        if self.kind is BoundaryKind.GAUSSIAN_BUMP:
            ratio = abs(self.value) / BOUNDARY_DECAY_LEVEL
            return self.width * math.sqrt(2.0 * math.log(ratio)) if ratio > 1 else 0.0
        if self.kind is BoundaryKind.TABULATED:
            return max(abs(self.abscissae[0]), abs(self.abscissae[-1]))
        return math.inf

    def support(self) -> Tuple[float, float]:
        """Interval outside which line data is negligible."""
        if self.kind is BoundaryKind.TABULATED:
            return self.abscissae[0], self.abscissae[-1]
        radius = self.support_radius()
        return self.center[0] - radius, self.center[0] + radius

    def breaks(self) -> List[float]:
        """Jumps and kinks of line data, for quadrature hints."""
        if self.kind is BoundaryKind.INDICATOR:
            return [self.center[0] - self.halfwidth, self.center[0] + self.halfwidth]
        if self.kind is BoundaryKind.TABULATED:
            return list(self.abscissae)
        if self.kind is BoundaryKind.GAUSSIAN_BUMP:
            return [self.center[0]]
        return []

    def ray_breaks(self, origin: Sequence[float], direction: Sequence[float]) -> List[float]:
        """Positive distances s where origin + s * direction crosses a jump of planar data."""
        if self.kind is not BoundaryKind.INDICATOR:
            return []
        ox, oy = origin[0] - self.center[0], origin[1] - self.center[1]
        dx, dy = direction
        b = ox * dx + oy * dy
        c = ox * ox + oy * oy - self.halfwidth**2
        disc = b * b - c
        if disc <= 0:
            return []
        root = math.sqrt(disc)
        return sorted(s for s in (-b - root, -b + root) if s > 0)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, points: ArrayLike) -> NDArray[np.float64]:
        """g at points; line data takes (...,) arrays, planar data (..., 2)."""
        pts = np.asarray(points, dtype=float)
        if self.kind is BoundaryKind.TABULATED:
            return np.interp(pts, self.abscissae, self.values, left=0.0, right=0.0)
        if self.kind is BoundaryKind.CONSTANT:
            return np.full(pts.shape[:-1] if self.planar else pts.shape, self.value)

        if self.planar:
            dist2 = (pts[..., 0] - self.center[0]) ** 2 + (pts[..., 1] - self.center[1]) ** 2
        else:
            dist2 = (pts - self.center[0]) ** 2

        if self.kind is BoundaryKind.INDICATOR:
            return np.where(dist2 <= self.halfwidth**2, self.value, 0.0)
        return self.value * np.exp(-dist2 / (2.0 * self.width**2))

    def __call__(self, *coords: float) -> float:
        point = coords if self.planar else coords[0]
        return float(self.evaluate(point))

    def sample_on_grid(self, nodes: ArrayLike, spacing: float) -> NDArray[np.float64]:
        """Line data at grid nodes; indicators use cell averages so a node on a jump gets half."""
        x = np.asarray(nodes, dtype=float)
        if self.kind is not BoundaryKind.INDICATOR:
            return self.evaluate(x)
        lo, hi = self.center[0] - self.halfwidth, self.center[0] + self.halfwidth
        overlap = np.clip(np.minimum(x + spacing / 2, hi) - np.maximum(x - spacing / 2, lo), 0.0, None)
        return self.value * overlap / spacing

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value, "center": list(self.center), "value": self.value}
        if self.kind is BoundaryKind.INDICATOR:
            data["halfwidth"] = self.halfwidth
        elif self.kind is BoundaryKind.GAUSSIAN_BUMP:
            data["width"] = self.width
        elif self.kind is BoundaryKind.TABULATED:
            data = {"kind": self.kind.value, "abscissae": list(self.abscissae), "values": list(self.values)}
        return data
