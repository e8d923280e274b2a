#!/usr/bin/env python3
"""Tests for the closed-form densities and the formula-level oracles."""

import math
import sys
import unittest
from pathlib import Path

import numpy as np
from scipy import special

# Add the fapchan directory to the Python path
sys.path.insert(
    0,
    str(Path(__file__).parent.parent.parent),
)

from models.boundary_data import BoundaryData
from models.channel_params import BoundaryOffset, SourceOffset, params_new
from models.errors import DomainError, ParameterError
from models.quadrature_config import QuadratureConfig

from services.densities import (
    absorbing_green_2d,
    boundary_mass,
    drift_factor,
    fap_cdf_2d,
    fap_density,
    fap_density_2d,
    fap_density_2d_longitudinal,
    fap_density_3d,
    fap_via_time_integration,
    first_passage_cdf,
    first_passage_time_density,
    flux_2d,
    generator_apply,
    harmonic_extension_3d,
    hitting_probability,
    image_coefficient,
    peak_time,
    poisson_kernel_halfspace_3d,
    source_density_field,
    time_marginal_oracle,
)
from services.stats import IntegrationDomain, adaptive_integrate, relative_error

ORIGIN_2D = SourceOffset((0.0,))
ORIGIN_3D = SourceOffset((0.0, 0.0))
TIGHT_QUADRATURE = QuadratureConfig(1e-11, 1e-15)


def at(*coords: float) -> BoundaryOffset:
    return BoundaryOffset(tuple(coords))


class TestDriftFactor(unittest.TestCase):
    def test_values(self) -> None:
        self.assertEqual(drift_factor(params_new(2, (0, 0), 1, 1), (5.0, 7.0)), 1.0)
        self.assertAlmostEqual(drift_factor(params_new(2, (1, 2), 1, 1), (3.0, 4.0)), math.exp(11), delta=1e-9 * math.exp(11))
        self.assertAlmostEqual(drift_factor(params_new(2, (1, 0), 2, 1), (2.0, 0.0)), math.e, places=14)

    def test_guards(self) -> None:
        with self.assertRaises(DomainError):
            drift_factor(params_new(2, (1, 0), 1, 1), (800.0, 0.0))
        with self.assertRaises(ParameterError):
            drift_factor(params_new(2, (1, 0), 1, 1), (1.0, 0.0, 0.0))


class TestClosedForms2D(unittest.TestCase):
    """fap_density_2d and its specializations."""

    def test_zero_drift_is_cauchy(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        self.assertAlmostEqual(fap_density_2d(params, ORIGIN_2D, at(0.0)), 1 / math.pi, places=15)
        self.assertAlmostEqual(fap_density_2d(params, ORIGIN_2D, at(2.0)), 1 / (5 * math.pi), places=15)

    def test_longitudinal_symmetry(self) -> None:
        params = params_new(2, (0, -1), 1, 1)
        self.assertAlmostEqual(fap_density_2d(params, ORIGIN_2D, at(1.0)), fap_density_2d(params, ORIGIN_2D, at(-1.0)), places=15)

    def test_oblique_matches_time_marginal_oracle(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)
        for xi in [-3.0, 0.0, 0.7, 4.0]:
            with self.subTest(xi=xi):
                closed = fap_density_2d(params, ORIGIN_2D, at(xi))
                self.assertLess(relative_error(closed, time_marginal_oracle(params, ORIGIN_2D, at(xi))), 1e-6)

    def test_longitudinal_form_is_identical(self) -> None:
        params = params_new(2, (0, -1), 1, 1)
        for xi in [0.0, 0.5, 3.0]:
            with self.subTest(xi=xi):
                general = fap_density_2d(params, ORIGIN_2D, at(xi))
                self.assertLess(relative_error(fap_density_2d_longitudinal(params, ORIGIN_2D, at(xi)), general), 1e-14)

    def test_longitudinal_sigma2_substitution(self) -> None:
        # sigma^2 = 2 is D = 1
        params = params_new(2, (0, -1), 2, 1)
        diff, v, d, r = 1.0, -1.0, 1.0, math.hypot(0.5, 1.0)
        expected = abs(v) * d / (2 * diff * math.pi) * math.exp(-v * d / (2 * diff)) * special.k1(abs(v) * r / (2 * diff)) / r
        self.assertLess(relative_error(fap_density_2d_longitudinal(params, ORIGIN_2D, at(0.5)), float(expected)), 1e-10)

    def test_longitudinal_translation_invariance(self) -> None:
        params = params_new(2, (0, -1), 1, 1)
        shifted = fap_density_2d_longitudinal(params, SourceOffset((2.0,)), at(2.5))
        self.assertAlmostEqual(shifted, fap_density_2d_longitudinal(params, ORIGIN_2D, at(0.5)), places=15)

    def test_longitudinal_rejects_tangential_drift(self) -> None:
        with self.assertRaises(ParameterError):
            fap_density_2d_longitudinal(params_new(2, (0.1, -1), 1, 1), ORIGIN_2D, at(0.0))

    def test_far_arrival_does_not_overflow(self) -> None:
        params = params_new(2, (2.0, -1), 1, 1)
        for xi in [-1e6, 1e6]:
            value = fap_density_2d(params, ORIGIN_2D, at(xi))
            self.assertTrue(math.isfinite(value))
            self.assertGreaterEqual(value, 0.0)

    def test_translation_and_reflection(self) -> None:
        params = params_new(2, (0.7, -0.4), 1.5, 2.0)
        base = fap_density_2d(params, SourceOffset((0.3,)), at(1.1))
        shifted = fap_density_2d(params, SourceOffset((3.3,)), at(4.1))
        mirrored = fap_density_2d(params_new(2, (-0.7, -0.4), 1.5, 2.0), SourceOffset((-0.3,)), at(-1.1))
        self.assertLess(relative_error(shifted, base), 1e-13)
        self.assertLess(relative_error(mirrored, base), 1e-13)

    def test_zero_drift_limit_is_approached(self) -> None:
        near = params_new(2, (0.6e-8, -0.8e-8), 1, 1)
        for xi in [0.0, 1.0, 5.0]:
            cauchy = 1 / (math.pi * (1 + xi * xi))
            self.assertLess(relative_error(fap_density_2d(near, ORIGIN_2D, at(xi)), cauchy), 1e-4)

    def test_dimension_checks(self) -> None:
        with self.assertRaises(ParameterError):
            fap_density_2d(params_new(3, (0, 0, 0), 1, 1), ORIGIN_3D, at(0.0, 0.0))
        with self.assertRaises(ParameterError):
            fap_density_2d(params_new(2, (0, 0), 1, 1), ORIGIN_3D, at(0.0))


class TestClosedForms3D(unittest.TestCase):
    def test_zero_drift_center(self) -> None:
        params = params_new(3, (0, 0, 0), 1, 1)
        self.assertAlmostEqual(fap_density_3d(params, ORIGIN_3D, at(0.0, 0.0)), 1 / (2 * math.pi), places=15)

    def test_zero_drift_is_poisson_kernel(self) -> None:
        params = params_new(3, (0, 0, 0), 1, 1)
        for rho in [0.5, 1.0, 3.0]:
            expected = (rho * rho + 1) ** -1.5 / (2 * math.pi)
            self.assertLess(relative_error(fap_density_3d(params, ORIGIN_3D, at(rho, 0.0)), expected), 1e-14)
            self.assertLess(relative_error(poisson_kernel_halfspace_3d(1.0, (0.0, rho)), expected), 1e-14)

    def test_oblique_matches_time_marginal_oracle(self) -> None:
        params = params_new(3, (0.3, -0.1, -0.8), 1, 2)
        closed = fap_density_3d(params, ORIGIN_3D, at(0.5, 0.5))
        self.assertLess(relative_error(closed, time_marginal_oracle(params, ORIGIN_3D, at(0.5, 0.5))), 1e-6)

    def test_dispatch(self) -> None:
        params = params_new(3, (0.3, -0.1, -0.8), 1, 2)
        self.assertEqual(fap_density(params, ORIGIN_3D, at(1.0, -1.0)), fap_density_3d(params, ORIGIN_3D, at(1.0, -1.0)))


class TestPoissonKernel(unittest.TestCase):
    def test_center_values(self) -> None:
        self.assertAlmostEqual(poisson_kernel_halfspace_3d(1.0, (0.0, 0.0)), 1 / (2 * math.pi), places=15)
        self.assertAlmostEqual(poisson_kernel_halfspace_3d(2.0, (0.0, 0.0)), 1 / (8 * math.pi), places=15)
        with self.assertRaises(DomainError):
            poisson_kernel_halfspace_3d(0.0, (0.0, 0.0))

    def test_harmonic_extension_of_constant(self) -> None:
        value = harmonic_extension_3d(BoundaryData.constant(1.0, planar=True), (0.3, -0.2, 1.5))
        self.assertAlmostEqual(value, 1.0, delta=1e-8)

    def test_harmonic_extension_of_disk(self) -> None:
        # on the axis of a unit disk: 1 - z / sqrt(1 + z^2)
        value = harmonic_extension_3d(BoundaryData.indicator((0.0, 0.0), 1.0), (0.0, 0.0, 1.0))
        self.assertAlmostEqual(value, 1 - 1 / math.sqrt(2), delta=1e-8)

    def test_harmonic_extension_needs_planar_data(self) -> None:
        with self.assertRaises(ParameterError):
            harmonic_extension_3d(BoundaryData.indicator(0.0, 1.0), (0.0, 0.0, 1.0))


class TestImageMethod(unittest.TestCase):
    """Absorbing Green's function, flux and the time integral."""

    def setUp(self) -> None:
        self.params = params_new(2, (0, -0.5), 1, 1)

    def test_green_vanishes_on_receiver(self) -> None:
        self.assertEqual(absorbing_green_2d(self.params, 0.0, 0.3, 1.0, 0.0, 0.7), 0.0)
        self.assertGreater(absorbing_green_2d(self.params, 0.2, 0.3, 1.0, 0.0, 0.7), 0.0)

    def test_image_coefficient(self) -> None:
        self.assertAlmostEqual(image_coefficient(self.params, 2.0), math.exp(2.0), places=12)

    def test_flux_is_normal_derivative(self) -> None:
        diff, h = self.params.diffusion_d(), 1e-6
        for t in [0.2, 1.0, 3.0]:
            with self.subTest(t=t):
                slope = absorbing_green_2d(self.params, h, 0.4, 1.0, 0.0, t) / h
                self.assertLess(relative_error(diff * slope, flux_2d(self.params, 0.4, 1.0, 0.0, t)), 1e-4)

    def test_time_integration_matches_closed_form(self) -> None:
        params = params_new(2, (0, -1), 1, 1)
        closed = fap_density_2d_longitudinal(params, ORIGIN_2D, at(0.0))
        self.assertLess(relative_error(fap_via_time_integration(params, ORIGIN_2D, at(0.0)), closed), 1e-8)

    def test_time_integration_zero_drift_is_cauchy(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        self.assertAlmostEqual(fap_via_time_integration(params, ORIGIN_2D, at(1.0)), 1 / (2 * math.pi), delta=1e-9)

    def test_drift_away_damps_the_density(self) -> None:
        away = fap_via_time_integration(params_new(2, (0, 1), 1, 1), ORIGIN_2D, at(1.0))
        self.assertLess(away, 1 / (2 * math.pi))

    def test_image_method_needs_normal_drift(self) -> None:
        with self.assertRaises(ParameterError):
            flux_2d(params_new(2, (0.2, 0), 1, 1), 0.0, 1.0, 0.0, 1.0)
        with self.assertRaises(DomainError):
            flux_2d(self.params, 0.0, 1.0, 0.0, 0.0)


class TestFirstPassage(unittest.TestCase):
    def test_hitting_probability(self) -> None:
        self.assertEqual(hitting_probability(params_new(2, (0, 0), 1, 1)), 1.0)
        self.assertAlmostEqual(hitting_probability(params_new(2, (0, 1), 1, 1)), math.exp(-2), places=15)
        self.assertEqual(hitting_probability(params_new(2, (0, -5), 1, 1)), 1.0)

    def test_density_integrates_to_hitting_probability(self) -> None:
        for v in [-1.0, 1.0]:
            params = params_new(2, (0, v), 1, 1)
            peak = peak_time(1.5, 0.5, 0.5)
            mass, _ = adaptive_integrate(
                lambda t: first_passage_time_density(params, t), IntegrationDomain.half_line(0.0, peak, [peak]), TIGHT_QUADRATURE
            )
            self.assertLess(abs(mass - hitting_probability(params)), 1e-8)

    def test_cdf_matches_density_integral(self) -> None:
        params = params_new(2, (0.3, 0.4), 1, 1)
        for t in [0.1, 1.0, 10.0]:
            with self.subTest(t=t):
                partial, _ = adaptive_integrate(
                    lambda s: first_passage_time_density(params, s), IntegrationDomain.finite(1e-6, t), TIGHT_QUADRATURE
                )
                self.assertLess(relative_error(first_passage_cdf(params, t), partial), 1e-8)

    def test_cdf_limits(self) -> None:
        params = params_new(2, (0, 1), 1, 1)
        self.assertEqual(first_passage_cdf(params, 0.0), 0.0)
        self.assertAlmostEqual(first_passage_cdf(params, math.inf), math.exp(-2), places=15)
        self.assertAlmostEqual(first_passage_cdf(params, 1e6), math.exp(-2), places=12)
        with self.assertRaises(DomainError):
            first_passage_cdf(params, -1.0)

    def test_oracle_zero_drift_is_cauchy(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        self.assertLess(relative_error(time_marginal_oracle(params, ORIGIN_2D, at(2.0)), 1 / (5 * math.pi)), 1e-8)

    def test_oracle_with_horizon_is_smaller(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        full = time_marginal_oracle(params, ORIGIN_2D, at(0.5))
        capped = time_marginal_oracle(params, ORIGIN_2D, at(0.5), horizon=5.0)
        self.assertLess(capped, full)
        self.assertGreater(capped, 0.5 * full)


class TestGenerator(unittest.TestCase):
    def test_constant_field(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)
        self.assertAlmostEqual(generator_apply(params, lambda p: 3.0, (0.0, 1.0), 0.01), 0.0, places=10)

    def test_stationary_exponential(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)

        def field(p):  # type: ignore[no-untyped-def]
            return math.exp(-2 * (0.5 * p[0] - 1.0 * p[1]) / params.sigma2)

        self.assertLess(abs(generator_apply(params, field, (0.2, 1.0), 1e-3)), 1e-4)

    def test_density_residual_decays_quadratically(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)
        field = source_density_field(params, at(0.0))
        coarse = abs(generator_apply(params, field, (0.5, 1.0), 0.05))
        fine = abs(generator_apply(params, field, (0.5, 1.0), 0.025))
        self.assertGreater(coarse / fine, 3.0)

    def test_source_field_moves_the_source(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)
        field = source_density_field(params, at(0.0))
        expected = fap_density_2d(params.with_distance(2.0), SourceOffset((0.3,)), at(0.0))
        self.assertEqual(field((0.3, 2.0)), expected)

    def test_point_too_close_to_receiver(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        with self.assertRaises(DomainError):
            generator_apply(params, lambda p: 1.0, (0.0, 0.01), 0.05)
        with self.assertRaises(DomainError):
            generator_apply(params, lambda p: 1.0, (0.0, 1.0), 0.0)


class TestArrivalCdfAndMass(unittest.TestCase):
    def test_zero_drift_cdf_is_cauchy(self) -> None:
        params = params_new(2, (0, 0), 1, 1)
        cdf = fap_cdf_2d(params)
        self.assertAlmostEqual(cdf.mass, 1.0)
        for xi in [-3.0, 0.0, 1.0]:
            self.assertAlmostEqual(float(cdf(xi)), 0.5 + math.atan(xi) / math.pi, delta=1e-4)
        self.assertAlmostEqual(cdf.quantile(0.5), 0.0, delta=1e-3)

    def test_horizon_mass(self) -> None:
        params = params_new(2, (0.5, -1), 1, 1)
        cdf = fap_cdf_2d(params, horizon=2.0)
        self.assertAlmostEqual(cdf.mass, first_passage_cdf(params, 2.0), places=14)
        self.assertTrue(np.all(np.diff(cdf.values) >= 0))
        masses = cdf.bin_masses([-math.inf, 0.0, math.inf])
        self.assertAlmostEqual(float(masses.sum()), 1.0, places=12)

    def test_cdf_is_2d_only(self) -> None:
        with self.assertRaises(ParameterError):
            fap_cdf_2d(params_new(3, (0, 0, 0), 1, 1))

    def test_boundary_mass(self) -> None:
        self.assertAlmostEqual(boundary_mass(params_new(2, (0.5, -1), 1, 1)), 1.0, delta=1e-6)
        self.assertAlmostEqual(boundary_mass(params_new(2, (0, 1), 1, 1)), math.exp(-2), delta=1e-6)
        self.assertAlmostEqual(boundary_mass(params_new(3, (0, 0, 0), 1, 1)), 1.0, delta=1e-6)

    def test_boundary_mass_transverse_drift(self) -> None:
        self.assertAlmostEqual(boundary_mass(params_new(2, (1, 0), 1, 1)), 1.0, delta=1e-6)
        self.assertAlmostEqual(boundary_mass(params_new(3, (0.6, -0.3, 0), 1, 1)), 1.0, delta=1e-6)
        self.assertAlmostEqual(boundary_mass(params_new(3, (2, 0, 0), 0.5, 1)), 1.0, delta=1e-6)

    def test_boundary_mass_3d_oblique(self) -> None:
        self.assertAlmostEqual(boundary_mass(params_new(3, (0.5, 0, -1), 1, 1)), 1.0, delta=1e-6)
        away = params_new(3, (0.3, 0.2, 0.5), 1, 1)
        self.assertAlmostEqual(boundary_mass(away), hitting_probability(away), delta=1e-6)
        shifted = boundary_mass(away, SourceOffset((1.5, -2.0)))
        self.assertAlmostEqual(shifted, hitting_probability(away), delta=1e-6)


if __name__ == "__main__":
    unittest.main()
