#!/usr/bin/env python3
"""Tests for the modified Bessel functions and their quadrature oracle."""

import math
import sys
import unittest
from pathlib import Path

from scipy import special

# Add the fapchan directory to the Python path
sys.path.insert(
    0,
    str(Path(__file__).parent.parent.parent),
)

from config.constants import EULER_GAMMA
from models.bessel_accuracy import BesselAccuracy
from models.errors import DomainError, ParameterError

from services.special_functions import (
    bessel_k0,
    bessel_k0_scaled,
    bessel_k1,
    bessel_k1_scaled,
    bessel_k_oracle,
    oracle_upper_limit,
)

# Arguments on both sides of each evaluation switch
SWITCH_POINTS = [1e-6, 0.01, 0.5, 1.0, 1.999, 2.0, 2.001, 5.0, 12.5, 29.999, 30.0, 30.001, 50.0, 300.0]


class TestBesselValues(unittest.TestCase):
    """Reference values and limits."""

    def assertRelative(self, actual: float, expected: float, tolerance: float) -> None:
        self.assertLessEqual(abs(actual - expected), tolerance * abs(expected), f"{actual} vs {expected}")

    def test_values_at_one(self) -> None:
        self.assertRelative(bessel_k0(1.0), 0.4210244382, 1e-9)
        self.assertRelative(bessel_k1(1.0), 0.6019072302, 1e-9)

    def test_small_argument_limits(self) -> None:
        x = 1e-8
        self.assertLess(abs(bessel_k0(x) + math.log(x / 2) + EULER_GAMMA), 1e-6)
        self.assertAlmostEqual(x * bessel_k1(x), 1.0, places=10)

    def test_asymptotic_regime_at_twenty(self) -> None:
        x = 20.0
        terms = 1 - 1 / (8 * x) + 9 / (2 * (8 * x) ** 2) - 225 / (6 * (8 * x) ** 3)
        series = math.exp(-x) * math.sqrt(math.pi / (2 * x)) * terms
        self.assertRelative(bessel_k0(x), series, 1e-6)

    def test_matches_scipy_across_switch_points(self) -> None:
        for x in SWITCH_POINTS:
            with self.subTest(x=x):
                self.assertRelative(bessel_k0_scaled(x), float(special.k0e(x)), 1e-10)
                self.assertRelative(bessel_k1_scaled(x), float(special.k1e(x)), 1e-10)
                if x <= 50.0:
                    self.assertRelative(bessel_k0(x), float(special.k0(x)), 1e-10)
                    self.assertRelative(bessel_k1(x), float(special.k1(x)), 1e-10)

    def test_scaled_k1_values(self) -> None:
        self.assertRelative(bessel_k1_scaled(1.0), math.e * 0.6019072302, 1e-9)
        self.assertRelative(bessel_k1_scaled(1e-3), float(special.k1e(1e-3)), 1e-10)
        self.assertGreater(bessel_k1_scaled(1e-3), 1000.0)

    def test_scaled_k1_far_beyond_underflow(self) -> None:
        x = 700.0
        expected = math.sqrt(math.pi / (2 * x)) * (1 + 3 / (8 * x))
        self.assertRelative(bessel_k1_scaled(x), expected, 1e-6)
        self.assertTrue(math.isfinite(bessel_k1_scaled(1e4)))
        self.assertGreater(bessel_k1_scaled(1e4), 0.0)

    def test_scaling_identity(self) -> None:
        for x in [0.1, 1.0, 3.0, 10.0, 29.0]:
            with self.subTest(x=x):
                self.assertRelative(bessel_k1_scaled(x) * math.exp(-x), bessel_k1(x), 1e-14)


class TestBesselProperties(unittest.TestCase):
    """Structural properties of K_0 and K_1."""

    def test_derivative_identity(self) -> None:
        h = 1e-5
        for x in [0.1, 0.5, 2.0, 5.0, 10.0]:
            with self.subTest(x=x):
                slope = (bessel_k0(x + h) - bessel_k0(x - h)) / (2 * h)
                self.assertLess(abs(-slope - bessel_k1(x)) / bessel_k1(x), 1e-8)

    def test_monotone_decreasing_and_ordered(self) -> None:
        grid = [10 ** (-6 + 8 * i / 99) for i in range(100)]
        k0 = [bessel_k0(x) for x in grid]
        k1 = [bessel_k1(x) for x in grid]
        for i in range(1, len(grid)):
            self.assertLess(k0[i], k0[i - 1])
            self.assertLess(k1[i], k1[i - 1])
        for a, b in zip(k0, k1):
            self.assertGreater(b, a)

    def test_domain_errors(self) -> None:
        for bad in [0.0, -1.0, math.nan, math.inf]:
            with self.subTest(x=bad):
                with self.assertRaises(DomainError):
                    bessel_k0(bad)
                with self.assertRaises(DomainError):
                    bessel_k1_scaled(bad)

    def test_accuracy_contract_is_validated(self) -> None:
        with self.assertRaises(ParameterError):
            BesselAccuracy(target_relative_error=1e-3)
        with self.assertRaises(ParameterError):
            BesselAccuracy(target_relative_error=0.0)


class TestBesselOracle(unittest.TestCase):
    """The integral representation as an independent check."""

    def test_oracle_values(self) -> None:
        self.assertAlmostEqual(bessel_k_oracle(0, 1.0), 0.4210244382, places=9)
        self.assertAlmostEqual(bessel_k_oracle(1, 1.0), 0.6019072302, places=9)
        self.assertLess(abs(bessel_k_oracle(1, 1e-4) * 1e-4 - 1.0), 1e-3)

    def test_oracle_agrees_with_evaluation(self) -> None:
        for x in [1e-6, 1e-3, 0.3, 1.0, 2.0, 7.0, 30.0, 50.0]:
            for order, func in ((0, bessel_k0), (1, bessel_k1)):
                with self.subTest(order=order, x=x):
                    oracle = bessel_k_oracle(order, x)
                    self.assertLess(abs(func(x) - oracle) / oracle, 1e-9)

    def test_upper_limit_shrinks_with_argument(self) -> None:
        self.assertGreater(oracle_upper_limit(1e-3), oracle_upper_limit(1.0))
        self.assertGreater(oracle_upper_limit(1.0), oracle_upper_limit(50.0))

    def test_oracle_rejects_other_orders(self) -> None:
        with self.assertRaises(DomainError):
            bessel_k_oracle(2, 1.0)
        with self.assertRaises(DomainError):
            bessel_k_oracle(0, -1.0)


if __name__ == "__main__":
    unittest.main()
