"""Binned arrival densities."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class Histogram:
    """Per-unit-length densities normalized over the whole run.

    ``densities * diff(edges)`` sums to the absorbed fraction that landed
    inside the edges; censored particles are excluded from ``counts``.
    """

    edges: NDArray[np.float64]
    counts: NDArray[np.int64]
    densities: NDArray[np.float64]
    total: int
