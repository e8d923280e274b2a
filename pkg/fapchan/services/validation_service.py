"""Validation suites.

Each suite compares the closed forms with an independent oracle and returns
one ValidationReport per case. A case that raises is logged and reported as
failed; the remaining cases still run.
"""

import logging
import math
import time
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from config.constants import (
    DEFAULT_DT,
    DEFAULT_GRID_HALF_WIDTH,
    DEFAULT_GRID_HEIGHT,
    DEFAULT_GRID_SPACING,
    DEFAULT_PARTICLE_COUNT,
    DEFAULT_SEED,
    DEFAULT_STREAMS,
    FAPCHAN_WORKERS,
    FAST_GRID_SPACING,
    FAST_SCALE,
    FAST_TOLERANCES,
    FULL_TOLERANCES,
    SUITE_NAMES,
)
from models.boundary_data import BoundaryData
from models.channel_params import BoundaryOffset, ChannelParams, SourceOffset, params_new
from models.errors import ParameterError
from models.grid import FarField, GridConfig
from models.hit_record import SimConfig
from models.validation_report import ValidationReport
from scipy import special

from services.bvp import compare_bvp_vs_representation, grid_convergence_ratio
from services.densities import (
    boundary_mass,
    fap_cdf_2d,
    fap_density,
    fap_density_2d_longitudinal,
    fap_via_time_integration,
    first_passage_cdf,
    generator_apply,
    poisson_kernel_halfspace_3d,
    source_density_field,
    time_marginal_oracle,
)
from services.simulation import simulate_hits
from services.special_functions import bessel_k0, bessel_k1, bessel_k1_scaled, bessel_k_oracle
from services.stats import (
    bin_counts,
    bin_edges_from_quantiles,
    chi_square_gof,
    ks_distance,
    relative_error,
)

logger = logging.getLogger(__name__)

# Denominator floor for relative density errors
DENSITY_FLOOR = 1e-300

BESSEL_GRID_POINTS = 60
BESSEL_GRID_RANGE = (1e-6, 50.0)
DERIVATIVE_GRID_RANGE = (0.1, 10.0)
DERIVATIVE_RELATIVE_STEP = 1e-5

ORACLE_SIGMA2 = (0.5, 1.0, 2.0)
ORACLE_DISTANCES = (0.5, 1.0, 3.0)
ORACLE_OFFSETS = 11

DRIFTS_2D: Dict[str, Tuple[float, ...]] = {
    "zero": (0.0, 0.0),
    "toward": (0.0, -1.0),
    "away": (0.0, 1.0),
    "transverse": (1.0, 0.0),
    "oblique": (0.5, -1.0),
}
DRIFTS_3D: Dict[str, Tuple[float, ...]] = {
    "zero": (0.0, 0.0, 0.0),
    "toward": (0.0, 0.0, -1.0),
    "away": (0.0, 0.0, 1.0),
    "transverse": (0.6, -0.3, 0.0),
    "oblique": (0.3, -0.1, -0.8),
}

NORMALIZATION_DRIFTS_2D: Dict[str, Tuple[float, ...]] = {
    "zero": (0.0, 0.0),
    "toward": (0.0, -1.0),
    "away": (0.0, 1.0),
    "oblique_toward": (0.5, -1.0),
    "transverse": (1.0, 0.0),
    "oblique_away": (0.5, 0.5),
}
NORMALIZATION_DRIFTS_3D: Dict[str, Tuple[float, ...]] = {
    "zero": (0.0, 0.0, 0.0),
    "toward": (0.0, 0.0, -1.0),
    "away": (0.0, 0.0, 1.0),
    "oblique_toward": (0.5, 0.0, -1.0),
    "transverse": (0.6, -0.3, 0.0),
    "oblique_away": (0.3, 0.2, 0.5),
}

OLD_METHOD_NORMAL_DRIFTS = (-2.0, -1.0, 0.0, 0.5, 1.0)
OLD_METHOD_OFFSETS = (0.0, 0.5, 1.0, 2.0, 5.0)

LIMIT_SPEED = 1e-8

GENERATOR_ARRIVAL = 0.0
GENERATOR_PROBES_2D = ((0.0, 1.0), (0.5, 1.0), (-1.0, 0.7), (2.0, 1.5), (0.3, 2.0))
GENERATOR_STEPS = (0.05, 0.025)

MONTE_CARLO_DRIFTS: Dict[str, Tuple[float, ...]] = {
    "zero": (0.0, 0.0),
    "toward": (0.0, -1.0),
    "oblique": (0.5, -1.0),
}
CHI_SQUARE_BINS = 30

BVP_DRIFTS: Dict[str, Tuple[float, ...]] = MONTE_CARLO_DRIFTS
BVP_PROBES = (0.0, -2.0, 2.0)

SuiteRunner = Callable[[], List[ValidationReport]]


def _log_grid(lo: float, hi: float, points: int) -> List[float]:
    return [float(x) for x in np.geomspace(lo, hi, points)]


def _offsets_2d(distance: float) -> List[BoundaryOffset]:
    return [BoundaryOffset((float(t),)) for t in np.linspace(-5.0 * distance, 5.0 * distance, ORACLE_OFFSETS)]


def _offsets_3d(distance: float) -> List[BoundaryOffset]:
    """Points along three rotating directions, spanning +/-5d radially."""
    angles = (0.0, math.pi / 3.0, 3.0 * math.pi / 4.0)
    out = []
    for i, t in enumerate(np.linspace(-5.0 * distance, 5.0 * distance, ORACLE_OFFSETS)):
        phi = angles[i % len(angles)]
        out.append(BoundaryOffset((float(t) * math.cos(phi), float(t) * math.sin(phi))))
    return out


class ValidationService:
    """Runs the named validation suites.

    ``fast`` scales the Monte Carlo particle count and the grid resolution
    down and switches to the wider tolerance table.
    """

    def __init__(self, fast: bool = False, workers: int = FAPCHAN_WORKERS) -> None:
        if workers < 1:
            raise ParameterError(f"workers must be >= 1, got {workers}")
        self.logger = logger
        self.fast = fast
        self.workers = workers
        self.tolerances = FAST_TOLERANCES if fast else FULL_TOLERANCES
        self._suites: Dict[str, SuiteRunner] = {
            "bessel": self.run_bessel,
            "oracle2d": self.run_oracle2d,
            "oracle3d": self.run_oracle3d,
            "normalization": self.run_normalization,
            "montecarlo": self.run_montecarlo,
            "bvp": self.run_bvp,
        }

    @staticmethod
    def resolve_suites(selection: str) -> List[str]:
        if selection == "all":
            return list(SUITE_NAMES)
        if selection not in SUITE_NAMES:
            raise ParameterError(f"Unknown suite '{selection}'; choose from {', '.join(SUITE_NAMES)} or all")
        return [selection]

    def run(self, suites: Iterable[str]) -> List[ValidationReport]:
        reports: List[ValidationReport] = []
        for name in suites:
            runner = self._suites.get(name)
            if runner is None:
                raise ParameterError(f"Unknown suite '{name}'")
            started = time.monotonic()
            self.logger.info(f"Running validation suite '{name}'{' (fast)' if self.fast else ''}")
            try:
                suite_reports = runner()
            except Exception as e:
                self.logger.error(f"Suite '{name}' aborted: {str(e)}", exc_info=True)
                suite_reports = [ValidationReport.failed(name, str(e))]
            passed = sum(1 for r in suite_reports if r.passed)
            self.logger.info(
                f"Suite '{name}' finished in {time.monotonic() - started:.1f}s: {passed}/{len(suite_reports)} case(s) passed"
            )
            for report in suite_reports:
                if not report.passed:
                    detail = report.error or ", ".join(report.failing_metrics())
                    self.logger.warning(f"Case '{report.name}' failed: {detail}")
            reports.extend(suite_reports)
        return reports

    def _guarded(self, name: str, params: Optional[ChannelParams], case: Callable[[], ValidationReport]) -> ValidationReport:
        try:
            return case()
        except Exception as e:
            self.logger.error(f"Validation case '{name}' raised: {str(e)}", exc_info=True)
            return ValidationReport.failed(name, str(e), params.to_dict() if params else None)

    def _tolerance(self, *keys: str) -> Dict[str, float]:
        return {k: self.tolerances[k] for k in keys}

    # =========================================================================
    # BESSEL
    # =========================================================================

    def run_bessel(self) -> List[ValidationReport]:
        return [
            self._guarded("bessel/oracle", None, self._bessel_oracle_case),
            self._guarded("bessel/identities", None, self._bessel_identity_case),
        ]

    def _bessel_oracle_case(self) -> ValidationReport:
        grid = _log_grid(*BESSEL_GRID_RANGE, BESSEL_GRID_POINTS)
        errors = []
        for x in grid:
            for order, func in ((0, bessel_k0), (1, bessel_k1)):
                errors.append(relative_error(func(x), bessel_k_oracle(order, x)))
        return ValidationReport(
            name="bessel/oracle",
            metrics={"bessel_rel_err": max(errors), "mean_rel_err": float(np.mean(errors))},
            tolerances=self._tolerance("bessel_rel_err"),
            config={"grid": {"lower": BESSEL_GRID_RANGE[0], "upper": BESSEL_GRID_RANGE[1], "points": BESSEL_GRID_POINTS}},
        )

    def _bessel_identity_case(self) -> ValidationReport:
        derivative_errors = []
        for x in _log_grid(*DERIVATIVE_GRID_RANGE, 25):
            h = DERIVATIVE_RELATIVE_STEP * x
            slope = (bessel_k0(x + h) - bessel_k0(x - h)) / (2.0 * h)
            derivative_errors.append(relative_error(-slope, bessel_k1(x)))

        scaled_errors = []
        monotone = True
        previous = (math.inf, math.inf)
        for x in _log_grid(1e-3, 30.0, BESSEL_GRID_POINTS):
            k0, k1 = bessel_k0(x), bessel_k1(x)
            scaled_errors.append(relative_error(bessel_k1_scaled(x) * math.exp(-x), k1))
            monotone = monotone and k0 < previous[0] and k1 < previous[1] and k1 > k0
            previous = (k0, k1)

        # scipy's own implementation as a second reference
        reference_errors = [
            max(relative_error(bessel_k0(x), float(special.k0(x))), relative_error(bessel_k1(x), float(special.k1(x))))
            for x in _log_grid(*BESSEL_GRID_RANGE, BESSEL_GRID_POINTS)
        ]
        return ValidationReport(
            name="bessel/identities",
            metrics={
                "derivative_rel_err": max(derivative_errors),
                "scaling_rel_err": max(scaled_errors),
                "scipy_rel_err": max(reference_errors),
                "monotone_violations": 0.0 if monotone else 1.0,
            },
            tolerances={**self._tolerance("derivative_rel_err"), "monotone_violations": 0.0},
            config={"derivative_step": f"{DERIVATIVE_RELATIVE_STEP} * x"},
        )

    # =========================================================================
    # CLOSED FORM VS TIME-MARGINAL ORACLE
    # =========================================================================

    def _oracle_matrix_case(self, name: str, params: ChannelParams, offsets: Sequence[BoundaryOffset]) -> ValidationReport:
        source = SourceOffset.origin(params.dimension)
        errors = [
            relative_error(fap_density(params, source, a), time_marginal_oracle(params, source, a), DENSITY_FLOOR)
            for a in offsets
        ]
        return ValidationReport(
            name=name,
            metrics={"oracle_rel_err": max(errors), "mean_rel_err": float(np.mean(errors))},
            tolerances=self._tolerance("oracle_rel_err"),
            params=params.to_dict(),
            config={"offsets": [list(a.tangential) for a in offsets]},
        )

    def _oracle_matrix(self, dimension: int, drifts: Dict[str, Tuple[float, ...]]) -> List[ValidationReport]:
        offsets_for = _offsets_2d if dimension == 2 else _offsets_3d
        reports = []
        for label, drift in drifts.items():
            for sigma2 in ORACLE_SIGMA2:
                for d in ORACLE_DISTANCES:
                    name = f"oracle{dimension}d/{label}/sigma2={sigma2:g}/d={d:g}"
                    params = params_new(dimension, drift, sigma2, d)
                    reports.append(self._guarded(name, params, lambda: self._oracle_matrix_case(name, params, offsets_for(d))))
        return reports

    def _limit_case(self, dimension: int) -> ValidationReport:
        """Zero-drift branch against the exact kernel, and the approach as |v| -> 1e-8."""
        d = 1.0
        zero = params_new(dimension, (0.0,) * dimension, 1.0, d)
        direction = (0.6, -0.8) if dimension == 2 else (0.36, 0.48, -0.8)
        near = params_new(dimension, tuple(LIMIT_SPEED * c for c in direction), 1.0, d)
        source = SourceOffset.origin(dimension)
        offsets = _offsets_2d(d) if dimension == 2 else _offsets_3d(d)

        branch_errors, approach_errors = [], []
        for arrival in offsets:
            if dimension == 2:
                delta = arrival.tangential[0]
                exact = d / (math.pi * (d * d + delta * delta))
            else:
                exact = poisson_kernel_halfspace_3d(d, arrival.tangential)
            branch_errors.append(relative_error(fap_density(zero, source, arrival), exact))
            approach_errors.append(relative_error(fap_density(near, source, arrival), exact))
        return ValidationReport(
            name=f"oracle{dimension}d/zero_drift_limit",
            metrics={"limit_branch_rel_err": max(branch_errors), "limit_approach_rel_err": max(approach_errors)},
            tolerances=self._tolerance("limit_branch_rel_err", "limit_approach_rel_err"),
            params=near.to_dict(),
        )

    def _old_method_case(self) -> ValidationReport:
        errors = []
        for v in OLD_METHOD_NORMAL_DRIFTS:
            params = params_new(2, (0.0, v), 1.0, 1.0)
            for offset in OLD_METHOD_OFFSETS:
                arrival = BoundaryOffset((offset,))
                closed = fap_density_2d_longitudinal(params, SourceOffset.origin(2), arrival)
                integrated = fap_via_time_integration(params, SourceOffset.origin(2), arrival)
                errors.append(relative_error(integrated, closed, DENSITY_FLOOR))
        return ValidationReport(
            name="oracle2d/time_integration",
            metrics={"old_method_rel_err": max(errors), "mean_rel_err": float(np.mean(errors))},
            tolerances=self._tolerance("old_method_rel_err"),
            config={"normal_drifts": list(OLD_METHOD_NORMAL_DRIFTS), "offsets": list(OLD_METHOD_OFFSETS)},
        )

    def _generator_case(self) -> ValidationReport:
        """Finite-difference generator on the density in its source point; the residual should drop ~4x per halving."""
        params = params_new(2, DRIFTS_2D["oblique"], 1.0, 1.0)
        field = source_density_field(params, BoundaryOffset((GENERATOR_ARRIVAL,)))
        coarse, fine = GENERATOR_STEPS
        ratios = []
        metrics: Dict[str, float] = {}
        for point in GENERATOR_PROBES_2D:
            r_coarse = abs(generator_apply(params, field, point, coarse))
            r_fine = abs(generator_apply(params, field, point, fine))
            ratio = r_coarse / r_fine if r_fine > 0.0 else math.inf
            ratios.append(ratio)
            metrics[f"residual[{point[0]:g},{point[1]:g}]"] = r_fine
        # Median guards against a probe where the leading error term happens to vanish
        metrics["generator_decay_ratio"] = float(np.median(ratios))
        metrics["min_decay"] = float(min(ratios))
        return ValidationReport(
            name="oracle2d/generator",
            metrics=metrics,
            tolerances=self._tolerance("generator_decay_ratio"),
            params=params.to_dict(),
            config={"steps": list(GENERATOR_STEPS), "probes": [list(p) for p in GENERATOR_PROBES_2D]},
        )

    def run_oracle2d(self) -> List[ValidationReport]:
        reports = self._oracle_matrix(2, DRIFTS_2D)
        reports.append(self._guarded("oracle2d/time_integration", None, self._old_method_case))
        reports.append(self._guarded("oracle2d/zero_drift_limit", None, lambda: self._limit_case(2)))
        reports.append(self._guarded("oracle2d/generator", None, self._generator_case))
        return reports

    def run_oracle3d(self) -> List[ValidationReport]:
        reports = self._oracle_matrix(3, DRIFTS_3D)
        reports.append(self._guarded("oracle3d/zero_drift_limit", None, lambda: self._limit_case(3)))
        return reports

    # =========================================================================
    # NORMALIZATION
    # =========================================================================

    def _normalization_case(self, name: str, params: ChannelParams) -> ValidationReport:
        mass = boundary_mass(params)
        expected = first_passage_cdf(params, math.inf)
        return ValidationReport(
            name=name,
            metrics={"normalization_abs_err": abs(mass - expected), "boundary_mass": mass, "hitting_probability": expected},
            tolerances=self._tolerance("normalization_abs_err"),
            params=params.to_dict(),
        )

    def run_normalization(self) -> List[ValidationReport]:
        reports = []
        for dimension, drifts in ((2, NORMALIZATION_DRIFTS_2D), (3, NORMALIZATION_DRIFTS_3D)):
            for label, drift in drifts.items():
                name = f"normalization/{dimension}d/{label}"
                params = params_new(dimension, drift, 1.0, 1.0)
                reports.append(self._guarded(name, params, lambda: self._normalization_case(name, params)))
        return reports

    # =========================================================================
    # MONTE CARLO
    # =========================================================================

    def _sim_config(self) -> SimConfig:
        count = DEFAULT_PARTICLE_COUNT // FAST_SCALE if self.fast else DEFAULT_PARTICLE_COUNT
        return SimConfig(
            particle_count=count,
            dt=DEFAULT_DT,
            seed=DEFAULT_SEED,
            streams=DEFAULT_STREAMS,
            bridge_correction=True,
            workers=self.workers,
        )

    def _montecarlo_case(self, name: str, params: ChannelParams, config: SimConfig) -> ValidationReport:
        batch = simulate_hits(params, config)
        n = len(batch)
        positions = batch.absorbed_positions(0)
        cdf = fap_cdf_2d(params, horizon=batch.t_max)

        edges = bin_edges_from_quantiles(cdf.quantile, CHI_SQUARE_BINS)
        statistic, p_value = chi_square_gof(bin_counts(positions, edges), cdf.bin_masses(edges))

        expected_fraction = cdf.mass
        # Binomial error with a one-particle floor when the expected fraction is 0 or 1
        standard_error = math.sqrt(max(expected_fraction * (1.0 - expected_fraction), 1.0 / n) / n)
        z = abs(batch.absorbed_fraction - expected_fraction) / standard_error

        return ValidationReport(
            name=name,
            metrics={
                "ks_distance": ks_distance(positions, cdf),
                "chi2_stat": statistic,
                "chi2_p_value": p_value,
                "absorbed_fraction": batch.absorbed_fraction,
                "expected_fraction": expected_fraction,
                "absorbed_fraction_z": z,
                "mean_hit_time": batch.mean_absorbed_time,
            },
            tolerances=self._tolerance("ks_distance", "chi2_p_value", "absorbed_fraction_z"),
            params=params.to_dict(),
            config={**config.to_dict(), "t_max": batch.t_max, "chi2_bins": CHI_SQUARE_BINS},
        )

    def run_montecarlo(self) -> List[ValidationReport]:
        config = self._sim_config()
        reports = []
        for label, drift in MONTE_CARLO_DRIFTS.items():
            name = f"montecarlo/{label}"
            params = params_new(2, drift, 1.0, 1.0)
            reports.append(self._guarded(name, params, lambda: self._montecarlo_case(name, params, config)))
        return reports

    # =========================================================================
    # BOUNDARY-VALUE PROBLEM
    # =========================================================================

    def _grid(self) -> GridConfig:
        return GridConfig(
            half_width=DEFAULT_GRID_HALF_WIDTH,
            height=DEFAULT_GRID_HEIGHT,
            spacing=FAST_GRID_SPACING if self.fast else DEFAULT_GRID_SPACING,
            far_field=FarField.REPRESENTATION,
        )

    def _bvp_case(self, name: str, params: ChannelParams) -> ValidationReport:
        g = BoundaryData.indicator(0.0, 1.0)
        grid = self._grid()
        probes = [SourceOffset((x,)) for x in BVP_PROBES]
        report = compare_bvp_vs_representation(
            params, g, grid, probes=probes, tolerance=self.tolerances["bvp_rel_err"], name=name
        )
        coarse, fine, ratio = grid_convergence_ratio(params, g, grid, probe=probes[0])
        report.metrics.update({"error_h": coarse, "error_h_half": fine, "convergence_ratio": ratio})
        report.tolerances["convergence_ratio"] = self.tolerances["bvp_convergence_ratio"]
        return report

    def run_bvp(self) -> List[ValidationReport]:
        reports = []
        for label, drift in BVP_DRIFTS.items():
            name = f"bvp/{label}"
            params = params_new(2, drift, 1.0, 1.0)
            reports.append(self._guarded(name, params, lambda: self._bvp_case(name, params)))
        return reports
