"""Monte Carlo first-arrival simulation.

Particles start at (0, ..., 0, distance) and follow Euler-Maruyama steps
X <- X + v dt + sigma sqrt(dt) Z until the normal coordinate reaches the
receiver. Particle j belongs to stream j mod streams; every stream draws
from its own PCG64 generator spawned from the run seed, so the output
depends only on (seed, streams, particle_count, dt, t_max,
bridge_correction) and never on how many threads run the streams.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO, Union

import numpy as np
from models.channel_params import ChannelParams
from models.errors import DomainError
from models.histogram import Histogram
from models.hit_record import HitBatch, HitRecord, SimConfig
from numpy.typing import ArrayLike, NDArray

from services.stats import bin_counts

logger = logging.getLogger(__name__)

# Compact the live arrays once this share of them is dead
COMPACTION_THRESHOLD = 0.5

# Censoring share above which a run is reported as truncated
CENSORING_WARNING_LEVEL = 0.01


def crossing_probability(a: float, b: float, params: ChannelParams, dt: float) -> float:
    """Probability that a Brownian bridge from height a to height b touches 0 within dt."""
    if a < 0 or b < 0:
        raise DomainError(f"crossing_probability needs nonnegative heights, got a={a} b={b}")
    if not dt > 0:
        raise DomainError(f"crossing_probability needs dt > 0, got {dt}")
    return math.exp(-2.0 * a * b / (params.sigma2 * dt))


@dataclass
class _StreamResult:
    positions: NDArray[np.float64]
    times: NDArray[np.float64]
    absorbed: NDArray[np.bool_]


def _simulate_stream(
    params: ChannelParams,
    config: SimConfig,
    t_max: float,
    count: int,
    seed: np.random.SeedSequence,
) -> _StreamResult:
    rng = np.random.Generator(np.random.PCG64(seed))
    k = params.dimension - 1
    v_tan = np.asarray(params.tangential_drift(), dtype=float)
    v_n = params.normal_drift()
    sigma = math.sqrt(params.sigma2)

    out_pos = np.zeros((count, k))
    out_time = np.full(count, t_max)
    out_absorbed = np.zeros(count, dtype=bool)

    ids = np.arange(count)
    pos = np.zeros((count, k))
    height = np.full(count, params.distance)

    n_steps = int(math.ceil(t_max / config.dt - 1e-9))
    for step in range(n_steps):
        if ids.size == 0:
            break
        t0 = step * config.dt
        h = min(config.dt, t_max - t0)
        noise = rng.standard_normal((ids.size, k + 1))
        uniforms = rng.random(ids.size)

        new_pos = pos + v_tan * h + sigma * math.sqrt(h) * noise[:, :k]
        new_height = height + v_n * h + sigma * math.sqrt(h) * noise[:, k]

        crossed = new_height <= 0.0
        if np.any(crossed):
            frac = height[crossed] / (height[crossed] - new_height[crossed])
            hit_ids = ids[crossed]
            out_time[hit_ids] = t0 + frac * h
            out_pos[hit_ids] = pos[crossed] + frac[:, None] * (new_pos[crossed] - pos[crossed])
            out_absorbed[hit_ids] = True

        hit = crossed
        if config.bridge_correction:
            p_bridge = np.exp(-2.0 * height * np.maximum(new_height, 0.0) / (params.sigma2 * h))
            bridged = ~crossed & (uniforms < p_bridge)
            if np.any(bridged):
                hit_ids = ids[bridged]
                out_time[hit_ids] = t0 + 0.5 * h
                out_pos[hit_ids] = 0.5 * (pos[bridged] + new_pos[bridged])
                out_absorbed[hit_ids] = True
            hit = crossed | bridged

        # Absorbed particles are parked at infinite height until the next compaction
        pos, height = new_pos, np.where(hit, np.inf, new_height)
        alive = np.isfinite(height)
        if alive.sum() < COMPACTION_THRESHOLD * alive.size:
            ids, pos, height = ids[alive], pos[alive], height[alive]

    # Survivors at the horizon are censored at their final position
    alive = np.isfinite(height)
    out_pos[ids[alive]] = pos[alive]
    out_time[ids[alive]] = t_max
    return _StreamResult(out_pos, out_time, out_absorbed)


def simulate_hits(params: ChannelParams, config: SimConfig) -> HitBatch:
    """Run config.particle_count particles to absorption or the horizon."""
    t_max = config.resolve_t_max(params)
    n, streams = config.particle_count, config.streams
    seeds = np.random.SeedSequence(config.seed).spawn(streams)
    counts = [len(range(s, n, streams)) for s in range(streams)]

    logger.info(
        f"Simulating {n} particles in {streams} streams on {config.workers} worker(s): "
        f"dt={config.dt}, t_max={t_max:g}, bridge={'on' if config.bridge_correction else 'off'}"
    )
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_simulate_stream, params, config, t_max, counts[s], seeds[s]) for s in range(streams)]
        # Merge strictly in stream order
        results = [future.result() for future in futures]

    k = params.dimension - 1
    positions = np.zeros((n, k))
    times = np.zeros(n)
    absorbed = np.zeros(n, dtype=bool)
    for s, result in enumerate(results):
        positions[s::streams] = result.positions
        times[s::streams] = result.times
        absorbed[s::streams] = result.absorbed

    batch = HitBatch(positions, times, absorbed, t_max)
    censored = 1.0 - batch.absorbed_fraction
    if censored > CENSORING_WARNING_LEVEL:
        logger.warning(f"{censored:.2%} of particles were still alive at t_max={t_max:g}")
    logger.info(f"Absorbed fraction {batch.absorbed_fraction:.6f}, mean hit time {batch.mean_absorbed_time:.6g}")
    return batch


def empirical_density(
    records: Union[HitBatch, Sequence[HitRecord]],
    bin_edges: ArrayLike,
    axis: Optional[int] = 0,
) -> Histogram:
    """Histogram of absorbed arrival positions normalized over all particles.

    ``axis`` selects a tangential coordinate; ``None`` uses the radial
    distance from the origin (3D reduction).

    Raises:
        DomainError: empty record set or edges not strictly increasing
    """
    if isinstance(records, HitBatch):
        batch = records
    else:
        if len(records) == 0:
            raise DomainError("empirical_density needs at least one record")
        batch = HitBatch.from_records(list(records))
    if len(batch) == 0:
        raise DomainError("empirical_density needs at least one record")

    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or not np.all(np.diff(edges) > 0) or not np.all(np.isfinite(edges)):
        raise DomainError("Bin edges must be finite and strictly increasing")

    if axis is None:
        values = np.linalg.norm(batch.positions[batch.absorbed], axis=1)
    else:
        values = batch.absorbed_positions(axis)
    counts = bin_counts(values, edges)
    densities = counts / (len(batch) * np.diff(edges))
    return Histogram(edges, counts, densities, len(batch))


def _format(value: float) -> str:
    return format(value, ".17g")


def write_hits_csv(records: Union[HitBatch, Sequence[HitRecord]], target: TextIO) -> int:
    """Write ``xi[,eta],tau,status`` rows in particle order; returns the row count."""
    if isinstance(records, HitBatch):
        rows, width = records.records(), records.tangential_dimension
    else:
        rows = list(records)
        width = len(rows[0].tangential_position) if rows else 1
    header = ["xi", "eta"][:width] + ["tau", "status"]
    writer = csv.writer(target, lineterminator="\n")
    writer.writerow(header)
    for record in rows:
        writer.writerow([_format(x) for x in record.tangential_position] + [_format(record.hit_time), record.status.value])
    return len(rows)

