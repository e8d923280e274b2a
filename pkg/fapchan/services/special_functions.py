"""Modified Bessel functions of the second kind, orders 0 and 1.

The exponentially scaled functions ``e^x K_nu(x)`` are the canonical
evaluation path; the unscaled functions wrap them. Three regimes:

  * x < 2: ascending series with the logarithmic term
  * 2 <= x < 30: Steed's continued fraction for the ratio K_1/K_0
  * x >= 30: asymptotic expansion of e^x K_nu(x)

``bessel_k_oracle`` evaluates the integral representation by adaptive
quadrature and is independent of all three branches.
"""

import logging
import math
import warnings
from typing import Tuple

from config.constants import (
    BESSEL_ASYMPTOTIC_SWITCH,
    BESSEL_MAX_TERMS,
    BESSEL_ORACLE_RELATIVE_TOLERANCE,
    BESSEL_ORACLE_TAIL_EXPONENT,
    BESSEL_SERIES_SWITCH,
    EULER_GAMMA,
)
from models.bessel_accuracy import BesselAccuracy
from models.errors import DomainError, QuadratureError
from scipy import integrate

logger = logging.getLogger(__name__)

DEFAULT_ACCURACY = BesselAccuracy()


def _check_argument(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"Bessel K requires a finite positive argument, got {x}")
    return x


def _stop_level(accuracy: BesselAccuracy) -> float:
    return max(accuracy.target_relative_error * 1e-6, 1e-17)


def _series_pair(x: float, eps: float) -> Tuple[float, float]:
    """Unscaled (K_0, K_1) from the ascending series."""
    q = 0.25 * x * x
    log_half = math.log(0.5 * x)

    # K_0 = -(ln(x/2) + gamma) I_0 + sum_k H_k q^k / (k!)^2
    term = 1.0
    harmonic = 0.0
    i0 = 1.0
    k0_tail = 0.0
    # K_1 = 1/x + ln(x/2) I_1 - (x/4) sum_k (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
    term1 = 1.0
    i1_sum = 1.0
    psi_sum = 2.0 * (-EULER_GAMMA) + 1.0
    k1_tail = psi_sum
    for k in range(1, BESSEL_MAX_TERMS):
        term *= q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        k0_tail += harmonic * term

        term1 *= q / (k * (k + 1))
        # psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
        psi_sum = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (k + 1)
        i1_sum += term1
        k1_tail += psi_sum * term1

        if term < eps * i0 and term1 < eps * i1_sum:
            break

    k0 = -(log_half + EULER_GAMMA) * i0 + k0_tail
    i1 = 0.5 * x * i1_sum
    k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_tail
    return k0, k1


def _continued_fraction_pair(x: float, eps: float) -> Tuple[float, float]:
    """Scaled (e^x K_0, e^x K_1) by Steed's method with Temme's normalization."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, BESSEL_MAX_TERMS):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < eps:
            break
    else:
        logger.warning(f"Continued fraction for K at x={x} hit {BESSEL_MAX_TERMS} terms")
    h = a1 * h
    k0e = math.sqrt(math.pi / (2.0 * x)) / s
    k1e = k0e * (x + 0.5 - h) / x
    return k0e, k1e


def _asymptotic_scaled(order: int, x: float, eps: float) -> float:
    """e^x K_nu(x) ~ sqrt(pi / 2x) * sum_k prod_j (4 nu^2 - (2j-1)^2) / (k! (8x)^k)."""
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    for k in range(1, BESSEL_MAX_TERMS):
        nxt = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) < eps * abs(total):
            break
    return math.sqrt(math.pi / (2.0 * x)) * total


def _scaled_pair(x: float, accuracy: BesselAccuracy) -> Tuple[float, float]:
    eps = _stop_level(accuracy)
    if x < BESSEL_SERIES_SWITCH:
        k0, k1 = _series_pair(x, eps)
        scale = math.exp(x)
        return k0 * scale, k1 * scale
    if x < BESSEL_ASYMPTOTIC_SWITCH:
        return _continued_fraction_pair(x, eps)
    return _asymptotic_scaled(0, x, eps), _asymptotic_scaled(1, x, eps)


def bessel_k0_scaled(x: float, accuracy: BesselAccuracy = DEFAULT_ACCURACY) -> float:
    """e^x K_0(x)."""
    return _scaled_pair(_check_argument(x), accuracy)[0]


def bessel_k1_scaled(x: float, accuracy: BesselAccuracy = DEFAULT_ACCURACY) -> float:
    """e^x K_1(x); finite for arguments far beyond where K_1 itself underflows."""
    return _scaled_pair(_check_argument(x), accuracy)[1]


def bessel_k0(x: float, accuracy: BesselAccuracy = DEFAULT_ACCURACY) -> float:
    x = _check_argument(x)
    if x < BESSEL_SERIES_SWITCH:
        return _series_pair(x, _stop_level(accuracy))[0]
    return _scaled_pair(x, accuracy)[0] * math.exp(-x)


def bessel_k1(x: float, accuracy: BesselAccuracy = DEFAULT_ACCURACY) -> float:
    x = _check_argument(x)
    if x < BESSEL_SERIES_SWITCH:
        return _series_pair(x, _stop_level(accuracy))[1]
    return _scaled_pair(x, accuracy)[1] * math.exp(-x)


def oracle_upper_limit(x: float) -> float:
    """Truncation point where e^{-x (cosh t - 1)} drops below e^{-45}."""
    return math.acosh(1.0 + BESSEL_ORACLE_TAIL_EXPONENT / x)


def bessel_k_oracle(order: int, x: float, accuracy: BesselAccuracy = DEFAULT_ACCURACY) -> float:
    """K_nu(x) = int_0^inf e^{-x cosh t} cosh(nu t) dt by adaptive quadrature.

    Raises:
        DomainError: order not in {0, 1} or x not a finite positive number
        QuadratureError: the subdivision limit was reached
    """
    if order not in (0, 1):
        raise DomainError(f"Bessel oracle supports orders 0 and 1, got {order}")
    x = _check_argument(x)

    def integrand(t: float) -> float:
        # cosh t - 1 = 2 sinh^2(t/2) avoids cancellation near t = 0
        return math.exp(-2.0 * x * math.sinh(0.5 * t) ** 2) * math.cosh(order * t)

    upper = oracle_upper_limit(x)
    points = [math.acosh(1.0 / x)] if x < 1.0 else None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = integrate.quad(
            integrand,
            0.0,
            upper,
            points=points,
            epsabs=0.0,
            epsrel=BESSEL_ORACLE_RELATIVE_TOLERANCE,
            limit=accuracy.max_oracle_subdivisions,
            full_output=1,
        )
    value, error = result[0], result[1]
    if len(result) > 3:
        raise QuadratureError(f"Bessel oracle K_{order}({x}) did not converge: {result[3]} (error estimate {error:.3e})")
    return float(value * math.exp(-x))

