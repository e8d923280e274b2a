"""Closed-form first-arrival-position densities and their formula-level oracles.

Layout: the receiver is ``x_n = 0``, the transmitter sits at height
``params.distance`` above the tangential source offset, and a positive
normal drift points away from the receiver. All densities are evaluated
in log space and exponentiated once.

The image-method helpers (``absorbing_green_2d``, ``flux_2d``,
``fap_via_time_integration``) use the transmission axis as their *first*
coordinate and only support drift along it.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from config.constants import (
    CDF_TABLE_POINTS,
    HALF_LINE_U_MAX,
    HALF_LINE_U_MIN,
    MAX_EXPONENT,
    ORACLE_ABSOLUTE_TOLERANCE,
    ORACLE_RELATIVE_TOLERANCE,
    ZERO_DRIFT_THRESHOLD,
)
from models.boundary_data import BoundaryData, BoundaryKind
from models.channel_params import (
    BoundaryOffset,
    ChannelParams,
    SourceOffset,
    check_offsets,
)
from models.errors import DomainError, ParameterError, QuadratureError
from models.quadrature_config import QuadratureConfig
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, special

from services.special_functions import bessel_k1_scaled
from services.stats import IntegrationDomain, adaptive_integrate

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE = QuadratureConfig()
ORACLE_QUADRATURE = QuadratureConfig(ORACLE_RELATIVE_TOLERANCE, ORACLE_ABSOLUTE_TOLERANCE)

SourceField = Callable[[Sequence[float]], float]


def _offset_delta(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> Tuple[float, ...]:
    check_offsets(params, source, arrival)
    return tuple(a - s for a, s in zip(arrival.tangential, source.tangential))


def _require_dimension(params: ChannelParams, dimension: int, operation: str) -> None:
    if params.dimension != dimension:
        raise ParameterError(f"{operation} needs a {dimension}D channel, got dimension {params.dimension}")


def _require_normal_drift_only(params: ChannelParams, operation: str) -> None:
    _require_dimension(params, 2, operation)
    if params.tangential_drift()[0] != 0.0:
        raise ParameterError(f"{operation} requires zero tangential drift, got v_1 = {params.tangential_drift()[0]}")


def peak_time(power: float, a: float, b: float) -> float:
    """Maximizer of t^{-power} exp(-a/t - b t) over t > 0."""
    if b <= 0.0:
        return a / power
    return (-power + math.sqrt(power * power + 4.0 * a * b)) / (2.0 * b)


# =============================================================================
# DRIFT FACTOR AND CLOSED FORMS
# =============================================================================


def drift_factor(params: ChannelParams, point: Sequence[float]) -> float:
    """exp(v . point / sigma^2).

    Raises:
        ParameterError: point has the wrong number of components
        DomainError: the exponent magnitude exceeds 700
    """
    if len(point) != params.dimension:
        raise ParameterError(f"drift_factor needs a {params.dimension}-component point, got {len(point)}")
    exponent = sum(v * p for v, p in zip(params.drift, point)) / params.sigma2
    if abs(exponent) > MAX_EXPONENT:
        raise DomainError(f"drift factor exponent {exponent:.3e} exceeds +/-{MAX_EXPONENT}")
    return math.exp(exponent)


def fap_density_2d(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> float:
    """Arrival density per unit length on the receiver line.

    f = |v| d / (sigma^2 pi) exp(-v_2 d / sigma^2) exp(v_1 (xi - x_1) / sigma^2) K_1(|v| r / sigma^2) / r
    """
    _require_dimension(params, 2, "fap_density_2d")
    (delta,) = _offset_delta(params, source, arrival)
    v1, v2 = params.drift
    s2, d = params.sigma2, params.distance
    r = math.hypot(delta, d)
    z = params.speed() * r / s2
    log_exp = (-v2 * d + v1 * delta) / s2
    if z < ZERO_DRIFT_THRESHOLD:
        # Cauchy limit; the exponential factor is exactly 1 at zero drift
        return d / (math.pi * r * r) * math.exp(log_exp)
    log_f = math.log(params.speed() * d / (s2 * math.pi)) + log_exp + math.log(bessel_k1_scaled(z)) - z
    return math.exp(log_f - math.log(r))


def fap_density_2d_longitudinal(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> float:
    """Normal-drift-only density written with D = sigma^2 / 2.

    f = |v| d / (2 D pi) exp(-v d / 2D) K_1(|v| r / 2D) / r, depending on xi - x_1 only.
    """
    _require_normal_drift_only(params, "fap_density_2d_longitudinal")
    (delta,) = _offset_delta(params, source, arrival)
    v = params.normal_drift()
    diff, d = params.diffusion_d(), params.distance
    r = math.hypot(delta, d)
    z = abs(v) * r / (2.0 * diff)
    if z < ZERO_DRIFT_THRESHOLD:
        return d / (math.pi * r * r) * math.exp(-v * d / (2.0 * diff))
    log_f = math.log(abs(v) * d / (2.0 * diff * math.pi)) - v * d / (2.0 * diff) + math.log(bessel_k1_scaled(z)) - z
    return math.exp(log_f - math.log(r))


def _log_density_3d(params: ChannelParams, d1: float, d2: float) -> float:
    v1, v2, v3 = params.drift
    s2, lam = params.sigma2, params.distance
    big_r = math.sqrt(d1 * d1 + d2 * d2 + lam * lam)
    z = params.speed() * big_r / s2
    log_exp = (-v3 * lam + v1 * d1 + v2 * d2) / s2
    log_f = math.log(lam / (2.0 * math.pi)) + log_exp - 3.0 * math.log(big_r)
    if z < ZERO_DRIFT_THRESHOLD:
        return log_f
    return log_f - z + math.log1p(z)


def fap_density_3d(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> float:
    """Arrival density per unit area on the receiver plane.

    f = (lambda / 2 pi) exp(-v_3 lambda / sigma^2) exp(v_tan . delta / sigma^2) e^{-z} (1 + z) / R^3, z = |v| R / sigma^2
    """
    _require_dimension(params, 3, "fap_density_3d")
    d1, d2 = _offset_delta(params, source, arrival)
    return math.exp(_log_density_3d(params, d1, d2))


def fap_density(params: ChannelParams, source: SourceOffset, arrival: BoundaryOffset) -> float:
    if params.dimension == 2:
        return fap_density_2d(params, source, arrival)
    return fap_density_3d(params, source, arrival)


def source_density_field(params: ChannelParams, arrival: BoundaryOffset) -> SourceField:
    """The density at a fixed arrival point as a function of the full source point (tangential..., height)."""

    def field(point: Sequence[float]) -> float:
        moved = params.with_distance(point[-1])
        return fap_density(moved, SourceOffset(tuple(point[:-1])), arrival)

    return field


# =============================================================================
# HALF-SPACE POISSON KERNEL
# =============================================================================


def poisson_kernel_halfspace_3d(height: float, tangential_offset: Sequence[float]) -> float:
    """z / (2 pi (rho^2 + z^2)^{3/2})."""
    if not height > 0:
        raise DomainError(f"Poisson kernel needs height > 0, got {height}")
    rho2 = tangential_offset[0] ** 2 + tangential_offset[1] ** 2
    return height / (2.0 * math.pi * (rho2 + height * height) ** 1.5)


def _tangent_angles(g: BoundaryData, x: float, y: float) -> Tuple[float, ...]:
    """Directions from (x, y) that graze the edge of a disk indicator."""
    if g.kind is not BoundaryKind.INDICATOR:
        return ()
    dx, dy = g.center[0] - x, g.center[1] - y
    dist = math.hypot(dx, dy)
    if dist <= g.halfwidth:
        return ()
    base = math.atan2(dy, dx)
    spread = math.asin(g.halfwidth / dist)
    return tuple(angle % (2.0 * math.pi) for angle in (base - spread, base, base + spread))


def harmonic_extension_3d(boundary_data: BoundaryData, point: Sequence[float], quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Bounded harmonic extension of planar boundary data into z > 0.

    In polar coordinates around the foot of the point with rho = z tan(theta)
    the Poisson kernel becomes sin(theta) / (2 pi):
    u = (1 / 2 pi) int_0^{2 pi} int_0^{pi/2} g(x + rho cos phi, y + rho sin phi) sin(theta) dtheta dphi.
    """
    if not boundary_data.planar:
        raise ParameterError("harmonic_extension_3d needs planar boundary data (two-component center)")
    x, y, z = point
    if not z > 0:
        raise DomainError(f"harmonic_extension_3d needs z > 0, got {z}")

    def radial(phi: float) -> float:
        cos, sin = math.cos(phi), math.sin(phi)
        breaks = [math.atan(s / z) for s in boundary_data.ray_breaks((x, y), (cos, sin))]

        def inner(theta: float) -> float:
            rho = z * math.tan(theta)
            return boundary_data(x + rho * cos, y + rho * sin) * math.sin(theta)

        value, _ = adaptive_integrate(inner, IntegrationDomain.finite(0.0, 0.5 * math.pi, breaks), quad)
        return value

    hints = _tangent_angles(boundary_data, x, y)
    total, _ = adaptive_integrate(radial, IntegrationDomain.finite(0.0, 2.0 * math.pi, hints), quad)
    return total / (2.0 * math.pi)


# =============================================================================
# IMAGE METHOD (normal drift only, transmission axis first)
# =============================================================================


def image_coefficient(params: ChannelParams, x0: float) -> float:
    """a(x0) = exp(-x0 v / D) weighting the mirrored source."""
    return math.exp(-x0 * params.normal_drift() / params.diffusion_d())


def absorbing_green_2d(params: ChannelParams, x: float, y: float, x0: float, y0: float, t: float) -> float:
    """Free-space Gaussian with mean (x0 + v t, y0) minus its weighted mirror image.

    Equivalent to G_free * (1 - exp(-x x0 / (D t))), so it vanishes on x = 0.
    """
    _require_normal_drift_only(params, "absorbing_green_2d")
    if not t > 0:
        raise DomainError(f"absorbing_green_2d needs t > 0, got {t}")
    if not x0 > 0:
        raise DomainError(f"absorbing_green_2d needs x0 > 0, got {x0}")
    if x < 0:
        raise DomainError(f"absorbing_green_2d is defined on x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    diff, v = params.diffusion_d(), params.normal_drift()
    log_free = -math.log(4.0 * math.pi * diff * t) - ((x - x0 - v * t) ** 2 + (y - y0) ** 2) / (4.0 * diff * t)
    return math.exp(log_free) * -math.expm1(-x * x0 / (diff * t))


def _log_flux_2d(params: ChannelParams, dy: float, x0: float, t: float) -> float:
    diff, v = params.diffusion_d(), params.normal_drift()
    return math.log(x0 / (4.0 * math.pi * diff)) - 2.0 * math.log(t) - ((x0 + v * t) ** 2 + dy * dy) / (4.0 * diff * t)


def flux_2d(params: ChannelParams, y: float, x0: float, y0: float, t: float) -> float:
    """Arrival rate density J(0, y, t) = x0 / (4 pi D t^2) exp(-((x0 + v t)^2 + (y - y0)^2) / (4 D t)).

    Taken positive: it is the inward normal derivative D dG/dx at x = 0.
    """
    _require_normal_drift_only(params, "flux_2d")
    if not t > 0:
        raise DomainError(f"flux_2d needs t > 0, got {t}")
    if not x0 > 0:
        raise DomainError(f"flux_2d needs x0 > 0, got {x0}")
    return math.exp(_log_flux_2d(params, y - y0, x0, t))


def fap_via_time_integration(
    params: ChannelParams,
    source: SourceOffset,
    arrival: BoundaryOffset,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Density as the time integral of the boundary flux, int_0^inf J(0, xi, t) dt."""
    _require_normal_drift_only(params, "fap_via_time_integration")
    (delta,) = _offset_delta(params, source, arrival)
    x0, diff, v = params.distance, params.diffusion_d(), params.normal_drift()

    def integrand(t: float) -> float:
        return math.exp(_log_flux_2d(params, delta, x0, t))

    a = (x0 * x0 + delta * delta) / (4.0 * diff)
    b = v * v / (4.0 * diff)
    peak = peak_time(2.0, a, b)
    value, _ = adaptive_integrate(integrand, IntegrationDomain.half_line(0.0, peak, (peak,)), quad)
    return value


# =============================================================================
# FIRST-PASSAGE TIME AND THE TIME-MARGINAL ORACLE
# =============================================================================


def first_passage_time_density(params: ChannelParams, t: float) -> float:
    """f_tau(t) = d / sqrt(4 pi D t^3) exp(-(d + v_n t)^2 / (4 D t))."""
    if not t > 0:
        raise DomainError(f"first_passage_time_density needs t > 0, got {t}")
    d, diff, v = params.distance, params.diffusion_d(), params.normal_drift()
    log_f = math.log(d) - 0.5 * math.log(4.0 * math.pi * diff * t**3) - (d + v * t) ** 2 / (4.0 * diff * t)
    return math.exp(log_f)


def first_passage_cdf(params: ChannelParams, t: float) -> float:
    """P(tau <= t) = Phi((-d - v t) / (sigma sqrt t)) + exp(-2 v d / sigma^2) Phi((-d + v t) / (sigma sqrt t))."""
    if t < 0:
        raise DomainError(f"first_passage_cdf needs t >= 0, got {t}")
    if t == 0.0:
        return 0.0
    if math.isinf(t):
        return hitting_probability(params)
    d, s2, v = params.distance, params.sigma2, params.normal_drift()
    scale = math.sqrt(s2 * t)
    first = special.log_ndtr((-d - v * t) / scale)
    second = -2.0 * v * d / s2 + special.log_ndtr((-d + v * t) / scale)
    return min(1.0, float(math.exp(np.logaddexp(first, second))))


def hitting_probability(params: ChannelParams) -> float:
    """Total arrival mass: 1 unless the normal drift points away, then exp(-2 v_n d / sigma^2)."""
    v = params.normal_drift()
    if v <= 0:
        return 1.0
    return math.exp(-2.0 * v * params.distance / params.sigma2)


def _marginal_peak(params: ChannelParams, delta: Sequence[float]) -> float:
    r2 = params.distance**2 + sum(c * c for c in delta)
    power = (params.dimension + 2) / 2.0
    return peak_time(power, r2 / (2.0 * params.sigma2), params.speed() ** 2 / (2.0 * params.sigma2))


def time_marginal_oracle(
    params: ChannelParams,
    source: SourceOffset,
    arrival: BoundaryOffset,
    quad: QuadratureConfig = ORACLE_QUADRATURE,
    horizon: Optional[float] = None,
) -> float:
    """Density as int f_tau(t) prod_i N(delta_i; v_i t, sigma^2 t) dt.

    Normal and tangential motion are independent, so the arrival density is
    the first-passage density mixed over tangential Gaussians. Valid for any
    drift direction. With a horizon T only t <= T contributes, giving the
    density of arriving at the point before T.
    """
    delta = _offset_delta(params, source, arrival)
    if horizon is not None and not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    d, s2, v_n = params.distance, params.sigma2, params.normal_drift()
    v_tan = params.tangential_drift()
    k = len(delta)
    log_norm = math.log(d) - 0.5 * math.log(2.0 * math.pi * s2) - 0.5 * k * math.log(2.0 * math.pi * s2)
    power = (params.dimension + 2) / 2.0
    limit = math.inf if horizon is None else horizon

    def integrand(t: float) -> float:
        if t > limit:
            return 0.0
        quad_form = (d + v_n * t) ** 2 + sum((dl - vl * t) ** 2 for dl, vl in zip(delta, v_tan))
        return math.exp(log_norm - power * math.log(t) - quad_form / (2.0 * s2 * t))

    peak = _marginal_peak(params, delta)
    hints = [peak * math.exp(s) for s in (-1.5, -0.5, 0.0, 0.5, 1.5)]
    if horizon is not None:
        hints.append(horizon)
    value, _ = adaptive_integrate(integrand, IntegrationDomain.half_line(0.0, peak, hints), quad)
    return value


# =============================================================================
# GENERATOR
# =============================================================================


def generator_apply(params: ChannelParams, field: SourceField, point: Sequence[float], step: float) -> float:
    """Central-difference A f = sum v_i df/dx_i + (sigma^2 / 2) sum d^2 f/dx_i^2 at an interior point.

    The last coordinate is the height above the receiver.
    """
    if not step > 0:
        raise DomainError(f"generator_apply needs step > 0, got {step}")
    if len(point) != params.dimension:
        raise ParameterError(f"generator_apply needs a {params.dimension}-component point, got {len(point)}")
    if not point[-1] > step:
        raise DomainError(f"point height {point[-1]} must exceed the step {step}")

    base = list(point)
    center = field(base)
    total = 0.0
    for axis, v in enumerate(params.drift):
        plus, minus = list(base), list(base)
        plus[axis] += step
        minus[axis] -= step
        f_plus, f_minus = field(plus), field(minus)
        total += v * (f_plus - f_minus) / (2.0 * step)
        total += 0.5 * params.sigma2 * (f_plus - 2.0 * center + f_minus) / (step * step)
    return total


# =============================================================================
# ARRIVAL CDF (2D)
# =============================================================================


@dataclass(frozen=True)
class ArrivalCdf:
    """Tabulated CDF of the arrival coordinate, conditioned on arrival.

    ``mass`` is the unconditioned arrival probability (before the horizon).
    """

    abscissae: NDArray[np.float64]
    values: NDArray[np.float64]
    mass: float

    def __call__(self, xi: ArrayLike) -> NDArray[np.float64]:
        return np.interp(np.asarray(xi, dtype=float), self.abscissae, self.values, left=0.0, right=1.0)

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p}")
        return float(np.interp(p, self.values, self.abscissae))

    def bin_masses(self, edges: ArrayLike) -> NDArray[np.float64]:
        return np.diff(self(np.asarray(edges, dtype=float)))


def fap_cdf_2d(
    params: ChannelParams,
    source: Optional[SourceOffset] = None,
    horizon: Optional[float] = None,
    points: int = CDF_TABLE_POINTS,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> ArrivalCdf:
    """CDF of the arrival coordinate xi given arrival (before ``horizon`` if set).

    P(xi <= s, tau <= T) = int_0^T f_tau(t) Phi((s - x_1 - v_1 t) / (sigma sqrt t)) dt, tabulated on a
    tan-spaced grid and divided by P(tau <= T).
    """
    _require_dimension(params, 2, "fap_cdf_2d")
    source = source or SourceOffset.origin(2)
    if horizon is not None and not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    x1 = source.tangential[0]
    d, s2, v1, v_n = params.distance, params.sigma2, params.drift[0], params.normal_drift()

    peak = peak_time(1.5, d * d / (2.0 * s2), v_n * v_n / (2.0 * s2))
    center = x1 + v1 * peak
    scale = max(d, abs(v1) * peak)
    theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, points + 2)[1:-1]
    grid = center + scale * np.tan(theta)
    sigma = math.sqrt(s2)

    u_max = HALF_LINE_U_MAX if horizon is None else math.log(horizon / peak)

    def integrand(u: float) -> NDArray[np.float64]:
        t = peak * math.exp(u)
        weight = first_passage_time_density(params, t) * t
        if weight == 0.0:
            return np.zeros_like(grid)
        return weight * special.ndtr((grid - x1 - v1 * t) / (sigma * math.sqrt(t)))

    breakpoints = [u for u in (-1.5, -0.5, 0.0, 0.5, 1.5) if HALF_LINE_U_MIN < u < u_max]
    edges = [HALF_LINE_U_MIN] + breakpoints + [u_max]
    joint = np.zeros_like(grid)
    for a, b in zip(edges[:-1], edges[1:]):
        part, err = integrate.quad_vec(integrand, a, b, epsabs=quad.absolute_tolerance, epsrel=quad.relative_tolerance)
        if not np.all(np.isfinite(part)):
            raise QuadratureError(f"Arrival CDF integral over u in [{a}, {b}] is not finite")
        joint += part

    mass = hitting_probability(params) if horizon is None else first_passage_cdf(params, horizon)
    if mass <= 0.0:
        raise DomainError("Arrival probability before the horizon is zero")
    values = np.maximum.accumulate(np.clip(joint / mass, 0.0, 1.0))
    logger.debug(f"Tabulated arrival CDF on {points} points, mass {mass:.6g}")
    return ArrivalCdf(grid, values, mass)


# =============================================================================
# NORMALIZATION
# =============================================================================


def _mean_tangential_shift(params: ChannelParams) -> Tuple[float, ...]:
    v_n = params.normal_drift()
    if v_n >= 0:
        return tuple(0.0 for _ in params.tangential_drift())
    mean_time = params.distance / -v_n
    return tuple(v * mean_time for v in params.tangential_drift())


def boundary_mass(
    params: ChannelParams,
    source: Optional[SourceOffset] = None,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Integral of the closed-form density over the whole receiver.

    2D: tan substitution around the source. 3D: polar coordinates around the
    source, the angle done in closed form and the radius mapped by
    rho = d tan^2(theta) so the rho^{-3/2} tail of transverse drift stays bounded.
    """
    source = source or SourceOffset.origin(params.dimension)
    check_offsets(params, source, BoundaryOffset(source.tangential))
    d = params.distance
    shift = _mean_tangential_shift(params)

    if params.dimension == 2:
        x1 = source.tangential[0]

        def line(xi: float) -> float:
            return fap_density_2d(params, source, BoundaryOffset((xi,)))

        hints = (x1 + shift[0],) if shift[0] != 0.0 else ()
        value, _ = adaptive_integrate(line, IntegrationDomain.full_line(x1, d, hints), quad)
        return value

    # The angle enters only through exp(|v_tan| rho cos(phi - phi_0) / sigma^2), so each
    # ring integrates to 2 pi I_0(|v_tan| rho / sigma^2) times the density at right angles to v_tan
    v_tan = params.tangential_drift()
    speed_tan = math.hypot(*v_tan)
    phi_0 = math.atan2(v_tan[1], v_tan[0])
    across = (-math.sin(phi_0), math.cos(phi_0))

    def ring(theta: float) -> float:
        tan = math.tan(theta)
        rho = d * tan * tan
        jac = 2.0 * d * tan / math.cos(theta) ** 2
        a = speed_tan * rho / params.sigma2
        log_ring = _log_density_3d(params, rho * across[0], rho * across[1]) + a + math.log(special.i0e(a))
        return 2.0 * math.pi * math.exp(log_ring) * rho * jac

    hints = [math.atan(math.sqrt(scale)) for scale in (1e-2, 1.0, 1e2, 1e4)]
    reach = math.hypot(*shift)
    if reach > 0.0:
        hints.append(math.atan(math.sqrt(reach / d)))
    total, _ = adaptive_integrate(ring, IntegrationDomain.finite(0.0, 0.5 * math.pi, hints), quad)
    return total
