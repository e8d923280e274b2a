#!/usr/bin/env python3
"""Command-line entry point.

Subcommands:
    density   closed-form density at receiver points
    sample    Monte Carlo hit records
    validate  run validation suites and write their reports
    bvp       boundary-value oracle against the representation formula

Exit codes: 0 success, 1 failed suite or computation, 2 usage error.
Logs go to standard error; data goes to --output or standard output.
"""

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO

import numpy as np
from config.constants import (
    CLI_JSON_INDENT,
    DEFAULT_DT,
    DEFAULT_GRID_HALF_WIDTH,
    DEFAULT_GRID_HEIGHT,
    DEFAULT_GRID_SPACING,
    DEFAULT_PARTICLE_COUNT,
    DEFAULT_SEED,
    DEFAULT_SOLVER_MAX_ITERATIONS,
    DEFAULT_SOLVER_TOLERANCE,
    DEFAULT_STREAMS,
    FAPCHAN_WORKERS,
    LOG_FORMAT,
    SUITE_NAMES,
    resolve_log_level,
    validate_env,
)
from dotenv import load_dotenv
from models.boundary_data import BoundaryData, BoundaryKind
from models.channel_params import BoundaryOffset, ChannelParams, SourceOffset
from models.errors import FapChannelError
from models.grid import FarField, GridConfig
from models.hit_record import SimConfig
from models.validation_report import ValidationReport

from services.bvp import compare_bvp_vs_representation, solve_bvp_2d, write_field_csv
from services.densities import fap_density
from services.simulation import simulate_hits, write_hits_csv
from services.validation_service import ValidationService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Invalid flags or configuration; maps to exit code 2."""


def configure_logging() -> None:
    logging.basicConfig(level=resolve_log_level(), format=LOG_FORMAT, stream=sys.stderr)


# =============================================================================
# FLAG PARSING
# =============================================================================


def parse_vector(text: str, name: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"--{name} must be a comma-separated list of numbers, got '{text}'")


def parse_range(text: str) -> List[float]:
    """``start:stop:step`` with both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--xi-range must look like start:stop:step, got '{text}'")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--xi-range must be numeric, got '{text}'")
    if step <= 0 or stop < start:
        raise UsageError(f"--xi-range needs step > 0 and stop >= start, got '{text}'")
    count = int(round((stop - start) / step)) + 1
    return [float(x) for x in np.linspace(start, start + (count - 1) * step, count)]


def load_params(args: argparse.Namespace) -> ChannelParams:
    """Channel parameters from --config, overridden by explicit flags."""
    data: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Could not read --config {args.config}: {str(e)}")
        if not isinstance(data, dict):
            raise UsageError(f"--config {args.config} must hold a JSON object")
    if args.dim is not None:
        data["dimension"] = args.dim
    if args.drift is not None:
        data["drift"] = parse_vector(args.drift, "drift")
    if args.sigma2 is not None:
        data["sigma2"] = args.sigma2
    if args.distance is not None:
        data["distance"] = args.distance
    return ChannelParams.from_dict(data)


def _points(args: argparse.Namespace, params: ChannelParams) -> List[BoundaryOffset]:
    width = params.dimension - 1
    points: List[BoundaryOffset] = []
    if args.xi_range:
        points.extend(BoundaryOffset((xi,) + (0.0,) * (width - 1)) for xi in parse_range(args.xi_range))
    for text in args.point or []:
        values = parse_vector(text, "point")
        if len(values) != width:
            raise UsageError(f"--point needs {width} component(s) for a {params.dimension}D channel, got '{text}'")
        points.append(BoundaryOffset(tuple(values)))
    if not points:
        raise UsageError("density needs --xi-range or at least one --point")
    return points


def _source(args: argparse.Namespace, params: ChannelParams) -> SourceOffset:
    if not args.source:
        return SourceOffset.origin(params.dimension)
    values = parse_vector(args.source, "source")
    if len(values) != params.dimension - 1:
        raise UsageError(f"--source needs {params.dimension - 1} component(s), got '{args.source}'")
    return SourceOffset(tuple(values))


def _boundary_data(args: argparse.Namespace) -> BoundaryData:
    kind = BoundaryKind(args.g_kind)
    center = parse_vector(args.g_center, "g-center")
    if kind is BoundaryKind.INDICATOR:
        return BoundaryData.indicator(center, args.g_halfwidth, args.g_value)
    if kind is BoundaryKind.GAUSSIAN_BUMP:
        return BoundaryData.gaussian_bump(center, args.g_width, args.g_value)
    if kind is BoundaryKind.CONSTANT:
        return BoundaryData.constant(args.g_value)
    if not args.g_table:
        raise UsageError("--g-kind tabulated needs --g-table")
    try:
        table = np.loadtxt(args.g_table, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise UsageError(f"Could not read --g-table {args.g_table}: {str(e)}")
    if table.shape[1] != 2:
        raise UsageError(f"--g-table must have two columns (x,g), got {table.shape[1]}")
    return BoundaryData.tabulated(table[:, 0], table[:, 1])


@contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", newline="", encoding="utf-8") as f:
        yield f


def _fmt(value: float) -> str:
    return format(value, ".17g")


# =============================================================================
# SUBCOMMANDS
# =============================================================================


def cmd_density(args: argparse.Namespace) -> int:
    params = load_params(args)
    source = _source(args, params)
    points = _points(args, params)
    rows = [(p, fap_density(params, source, p)) for p in points]

    with open_output(args.output) as out:
        if args.format == "json":
            payload = {
                "params": params.to_dict(),
                "source": list(source.tangential),
                "points": [{"offset": list(p.tangential), "density": value} for p, value in rows],
            }
            out.write(json.dumps(payload, indent=CLI_JSON_INDENT) + "\n")
        else:
            header = ["xi", "eta"][: params.dimension - 1] + ["density"]
            out.write(",".join(header) + "\n")
            for p, value in rows:
                out.write(",".join(_fmt(c) for c in p.tangential) + f",{_fmt(value)}\n")
    logger.info(f"Wrote {len(rows)} density value(s)")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    params = load_params(args)
    config = SimConfig(
        particle_count=args.particles,
        dt=args.dt,
        t_max=args.t_max,
        seed=args.seed,
        streams=args.streams,
        bridge_correction=not args.no_bridge,
        workers=args.workers,
    )
    config.resolve_t_max(params)
    batch = simulate_hits(params, config)

    with open_output(args.output) as out:
        if args.format == "json":
            payload = {
                "params": params.to_dict(),
                "config": {**config.to_dict(), "t_max": batch.t_max},
                "records": [
                    {"position": list(r.tangential_position), "tau": r.hit_time, "status": r.status.value}
                    for r in batch.records()
                ],
            }
            out.write(json.dumps(payload, indent=CLI_JSON_INDENT) + "\n")
        else:
            write_hits_csv(batch, out)

    print(
        f"absorbed_fraction={batch.absorbed_fraction:.6f} mean_hit_time={batch.mean_absorbed_time:.6g} "
        f"particles={len(batch)}",
        file=sys.stderr,
    )
    return EXIT_OK


def _write_reports(reports: Sequence[ValidationReport], path: Optional[str]) -> None:
    payload = {"pass": all(r.passed for r in reports), "reports": [r.to_dict() for r in reports]}
    with open_output(path) as out:
        out.write(json.dumps(payload, indent=CLI_JSON_INDENT) + "\n")


def cmd_validate(args: argparse.Namespace) -> int:
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")
    suites = ValidationService.resolve_suites(args.suite)
    service = ValidationService(fast=args.fast, workers=args.workers)
    reports = service.run(suites)
    _write_reports(reports, args.output)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.error(f"{len(failed)} validation case(s) failed: {', '.join(failed)}")
        return EXIT_FAILURE
    logger.info(f"All {len(reports)} validation case(s) passed")
    return EXIT_OK


def cmd_bvp(args: argparse.Namespace) -> int:
    params = load_params(args)
    g = _boundary_data(args)
    grid = GridConfig(
        half_width=args.half_width,
        height=args.height,
        spacing=args.spacing,
        solver_tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        far_field=FarField(args.far_field),
    )
    grid.check_against(params, g)

    if args.format == "csv":
        field = solve_bvp_2d(params, g, grid)
        with open_output(args.output) as out:
            rows = write_field_csv(field, out)
        logger.info(f"Wrote {rows} field value(s) ({field.metadata['method']})")
        return EXIT_OK

    probes = [SourceOffset((x,)) for x in (args.probe or [0.0])]
    report = compare_bvp_vs_representation(params, g, grid, probes=probes, tolerance=args.rel_tolerance)
    _write_reports([report], args.output)
    return EXIT_OK if report.passed else EXIT_FAILURE


# =============================================================================
# PARSER
# =============================================================================


def _add_channel_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("channel")
    group.add_argument("--config", help="JSON file with dimension, drift, sigma2, distance")
    group.add_argument("--dim", type=int, choices=(2, 3), help="Spatial dimension")
    group.add_argument("--drift", help="Comma-separated drift vector; length must equal --dim, last component is normal")
    group.add_argument("--sigma2", type=float, help="Diffusion parameter sigma^2 (D = sigma^2 / 2)")
    group.add_argument("--distance", type=float, help="Transmitter height above the receiver")


def _add_output_flags(parser: argparse.ArgumentParser, default_format: str) -> None:
    parser.add_argument("--output", "-o", help="Output path (default: standard output)")
    parser.add_argument("--format", choices=("csv", "json"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fapchan", description="First-arrival-position densities for drift-diffusion channels")
    sub = parser.add_subparsers(dest="command", required=True)

    density = sub.add_parser("density", help="Evaluate the closed-form density")
    _add_channel_flags(density)
    density.add_argument("--xi-range", help="start:stop:step along the first tangential axis")
    density.add_argument("--point", action="append", help="Comma-separated arrival offset (repeatable)")
    density.add_argument("--source", help="Comma-separated tangential source offset (default: origin)")
    _add_output_flags(density, "csv")
    density.set_defaults(handler=cmd_density)

    sample = sub.add_parser("sample", help="Simulate first-arrival hit records")
    _add_channel_flags(sample)
    sample.add_argument("-n", "--particles", type=int, default=DEFAULT_PARTICLE_COUNT)
    sample.add_argument("--dt", type=float, default=DEFAULT_DT)
    sample.add_argument("--t-max", type=float, default=None, help="Horizon (default 200 d^2 / sigma^2)")
    sample.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sample.add_argument("--streams", type=int, default=DEFAULT_STREAMS)
    sample.add_argument("--workers", type=int, default=FAPCHAN_WORKERS)
    sample.add_argument("--no-bridge", action="store_true", help="Disable the Brownian-bridge crossing correction")
    _add_output_flags(sample, "csv")
    sample.set_defaults(handler=cmd_sample)

    validate = sub.add_parser("validate", help="Run validation suites")
    validate.add_argument("--suite", default="all", choices=SUITE_NAMES + ("all",))
    validate.add_argument("--fast", action="store_true", help="Smaller Monte Carlo runs and coarser grids")
    validate.add_argument("--workers", type=int, default=FAPCHAN_WORKERS)
    _add_output_flags(validate, "json")
    validate.set_defaults(handler=cmd_validate)

    bvp = sub.add_parser("bvp", help="Solve the boundary-value oracle")
    _add_channel_flags(bvp)
    bvp.add_argument("--g-kind", default=BoundaryKind.INDICATOR.value, choices=[k.value for k in BoundaryKind])
    bvp.add_argument("--g-center", default="0")
    bvp.add_argument("--g-halfwidth", type=float, default=1.0)
    bvp.add_argument("--g-width", type=float, default=1.0)
    bvp.add_argument("--g-value", type=float, default=1.0)
    bvp.add_argument("--g-table", help="CSV with header x,g")
    bvp.add_argument("--half-width", type=float, default=DEFAULT_GRID_HALF_WIDTH)
    bvp.add_argument("--height", type=float, default=DEFAULT_GRID_HEIGHT)
    bvp.add_argument("--spacing", type=float, default=DEFAULT_GRID_SPACING)
    bvp.add_argument("--tolerance", type=float, default=DEFAULT_SOLVER_TOLERANCE)
    bvp.add_argument("--max-iterations", type=int, default=DEFAULT_SOLVER_MAX_ITERATIONS)
    bvp.add_argument("--far-field", default=FarField.ZERO.value, choices=[f.value for f in FarField])
    bvp.add_argument("--probe", type=float, action="append", help="Probe x1 at the source height (repeatable)")
    bvp.add_argument("--rel-tolerance", type=float, default=0.01, help="Pass threshold on the max relative error")
    # csv writes the solved field, json the comparison report
    _add_output_flags(bvp, "json")
    bvp.set_defaults(handler=cmd_bvp)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        validate_env()
    except ValueError as e:
        print(f"fapchan: {str(e)}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return int(args.handler(args))
    except (UsageError, ValueError) as e:
        # ParameterError, DomainError and GridError are ValueErrors
        print(f"fapchan {args.command}: {str(e)}", file=sys.stderr)
        return EXIT_USAGE
    except FapChannelError as e:
        logger.error(f"{args.command} failed: {str(e)}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
