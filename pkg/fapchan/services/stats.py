"""Quadrature and goodness-of-fit machinery.

Infinite domains are mapped onto finite charts before handing them to
QUADPACK: the full line through x = center + scale * tan(theta), the half
line through t = lower + scale * e^u. Both charts are split into panels so
peaked or heavy-tailed integrands are resolved everywhere.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Sequence, Tuple

import numpy as np
from config.constants import (
    FULL_LINE_PANELS,
    HALF_LINE_PANEL_WIDTH,
    HALF_LINE_U_MAX,
    HALF_LINE_U_MIN,
)
from models.errors import DomainError, QuadratureError
from models.histogram import Histogram
from models.quadrature_config import QuadratureConfig
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, stats

logger = logging.getLogger(__name__)

MIN_EXPECTED_PER_BIN = 5.0

Integrand = Callable[[float], float]


class DomainKind(str, Enum):
    FINITE = "finite"
    HALF_LINE = "half_line"
    FULL_LINE = "full_line"


@dataclass(frozen=True)
class IntegrationDomain:
    """Where to integrate and the natural length scale of the integrand there.

    ``hints`` are points in the original variable where the integrand peaks,
    jumps or kinks; they become panel boundaries.
    """

    kind: DomainKind
    lower: float = 0.0
    upper: float = math.inf
    scale: float = 1.0
    center: float = 0.0
    hints: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise DomainError(f"Integration scale must be > 0, got {self.scale}")
        if self.kind is DomainKind.FINITE and not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError(f"Finite domain needs finite bounds, got [{self.lower}, {self.upper}]")
        if self.kind is DomainKind.FINITE and not self.lower < self.upper:
            raise DomainError(f"Finite domain needs lower < upper, got [{self.lower}, {self.upper}]")

    @classmethod
    def finite(cls, lower: float, upper: float, hints: Sequence[float] = ()) -> "IntegrationDomain":
        return cls(DomainKind.FINITE, lower=lower, upper=upper, hints=tuple(hints))

    @classmethod
    def half_line(cls, lower: float = 0.0, scale: float = 1.0, hints: Sequence[float] = ()) -> "IntegrationDomain":
        return cls(DomainKind.HALF_LINE, lower=lower, scale=scale, hints=tuple(hints))

    @classmethod
    def full_line(cls, center: float = 0.0, scale: float = 1.0, hints: Sequence[float] = ()) -> "IntegrationDomain":
        return cls(DomainKind.FULL_LINE, lower=-math.inf, center=center, scale=scale, hints=tuple(hints))


def _panel_edges(lower: float, upper: float, regular: Sequence[float], hints: Sequence[float]) -> List[float]:
    inner = {p for p in list(regular) + list(hints) if lower < p < upper and math.isfinite(p)}
    return [lower] + sorted(inner) + [upper]


def _quad_panels(func: Integrand, edges: Sequence[float], quad: QuadratureConfig) -> Tuple[float, float]:
    total = 0.0
    error = 0.0
    with warnings.catch_warnings():
        # Convergence is judged on the aggregated estimate below
        warnings.simplefilter("ignore")
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            value, err = integrate.quad(
                func,
                a,
                b,
                epsabs=quad.absolute_tolerance,
                epsrel=quad.relative_tolerance,
                limit=quad.max_subdivisions,
            )
            total += value
            error += abs(err)
    return total, error


def adaptive_integrate(f: Integrand, domain: IntegrationDomain, quad: QuadratureConfig) -> Tuple[float, float]:
    """Integrate f over the domain and return (value, error_estimate).

    Raises:
        QuadratureError: error estimate above max(absolute, relative * |value|)
    """
    if domain.kind is DomainKind.FINITE:
        value, error = _quad_panels(f, _panel_edges(domain.lower, domain.upper, [], domain.hints), quad)

    elif domain.kind is DomainKind.HALF_LINE:
        lower, scale = domain.lower, domain.scale

        def mapped_half(u: float) -> float:
            t = lower + scale * math.exp(u)
            return f(t) * scale * math.exp(u) if t > lower else 0.0

        panels = np.arange(HALF_LINE_U_MIN, HALF_LINE_U_MAX + 0.5 * HALF_LINE_PANEL_WIDTH, HALF_LINE_PANEL_WIDTH)
        hints = [math.log((h - lower) / scale) for h in domain.hints if h > lower]
        value, error = _quad_panels(mapped_half, _panel_edges(HALF_LINE_U_MIN, HALF_LINE_U_MAX, panels, hints), quad)

    else:
        center, scale = domain.center, domain.scale

        def mapped_full(theta: float) -> float:
            cos = math.cos(theta)
            if cos == 0.0:
                return 0.0
            x = center + scale * math.tan(theta)
            fx = f(x)
            return fx * scale / (cos * cos) if fx != 0.0 else 0.0

        half_pi = 0.5 * math.pi
        panels = np.linspace(-half_pi, half_pi, FULL_LINE_PANELS + 1)[1:-1]
        hints = [math.atan((h - center) / scale) for h in domain.hints]
        value, error = _quad_panels(mapped_full, _panel_edges(-half_pi, half_pi, panels, hints), quad)

    allowed = max(quad.absolute_tolerance, quad.relative_tolerance * abs(value))
    if not math.isfinite(value) or error > allowed:
        raise QuadratureError(
            f"Adaptive quadrature over {domain.kind.value} domain did not converge: "
            f"value {value:.6e}, error estimate {error:.3e} > allowed {allowed:.3e}"
        )
    return value, error


# =============================================================================
# GOODNESS OF FIT
# =============================================================================


def ks_distance(samples: ArrayLike, cdf: Callable[[NDArray[np.float64]], ArrayLike]) -> float:
    """Sup-norm distance between the empirical CDF of samples and cdf.

    ``cdf`` is called once on the sorted sample array.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("ks_distance needs at least one sample")
    model = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - model
    lower = model - np.arange(0, n) / n
    return float(max(upper.max(), lower.max(), 0.0))


def bin_counts(values: ArrayLike, edges: ArrayLike) -> NDArray[np.int64]:
    """Counts per half-open bin [e_i, e_{i+1}); edges may be infinite."""
    v = np.asarray(values, dtype=float)
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2 or not np.all(np.diff(e) > 0):
        raise DomainError("Bin edges must be a strictly increasing array of at least two values")
    index = np.searchsorted(e, v, side="right") - 1
    inside = (index >= 0) & (index < e.size - 1)
    return np.bincount(index[inside], minlength=e.size - 1).astype(np.int64)


def _merge_small_bins(observed: NDArray[np.float64], expected: NDArray[np.float64]) -> Tuple[List[float], List[float]]:
    merged_obs: List[float] = []
    merged_exp: List[float] = []
    acc_obs = acc_exp = 0.0
    for o, e in zip(observed, expected):
        acc_obs += o
        acc_exp += e
        if acc_exp >= MIN_EXPECTED_PER_BIN:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp > 0 or acc_obs > 0:
        if merged_exp:
            merged_obs[-1] += acc_obs
            merged_exp[-1] += acc_exp
        else:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
    return merged_obs, merged_exp


def chi_square_gof(histogram: Histogram | ArrayLike, model_bin_masses: ArrayLike) -> Tuple[float, float]:
    """Pearson statistic and p-value with (bins - 1) degrees of freedom.

    Model masses are rescaled to the observed total; adjacent bins are merged
    until each expects at least 5 counts.

    Raises:
        DomainError: fewer than two bins survive merging or shapes disagree
    """
    counts = histogram.counts if isinstance(histogram, Histogram) else histogram
    observed = np.asarray(counts, dtype=float)
    masses = np.asarray(model_bin_masses, dtype=float)
    if observed.shape != masses.shape or observed.ndim != 1:
        raise DomainError(f"Histogram has {observed.shape} bins but model has {masses.shape}")
    if np.any(masses < 0) or masses.sum() <= 0:
        raise DomainError("Model bin masses must be nonnegative with a positive total")

    expected = observed.sum() * masses / masses.sum()
    merged_obs, merged_exp = _merge_small_bins(observed, expected)
    if len(merged_exp) < 2:
        raise DomainError(f"Degenerate binning: {len(merged_exp)} bin(s) left after merging")

    obs = np.array(merged_obs)
    exp = np.array(merged_exp)
    statistic = float(np.sum((obs - exp) ** 2 / exp))
    p_value = float(stats.chi2.sf(statistic, len(exp) - 1))
    if len(exp) < len(observed):
        logger.debug(f"Chi-square merged {len(observed)} bins into {len(exp)}")
    return statistic, p_value


def bin_edges_from_quantiles(quantile: Callable[[float], float], bins: int) -> NDArray[np.float64]:
    """Equiprobable edges from a quantile function, open at both ends."""
    if bins < 2:
        raise DomainError(f"Need at least 2 bins, got {bins}")
    inner = [quantile(i / bins) for i in range(1, bins)]
    return np.array([-math.inf] + inner + [math.inf])


def relative_error(actual: float, expected: float, floor: float = 0.0) -> float:
    """|actual - expected| / max(|expected|, floor)."""
    denominator = max(abs(expected), floor)
    if denominator == 0.0:
        return 0.0 if actual == expected else math.inf
    return abs(actual - expected) / denominator
