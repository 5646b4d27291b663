"""
Capacity sweeps, dominance comparison and the search for baseline non-monotonicity.
"""
import asyncio
import csv
import hashlib
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.codec import dumps, instance_to_dict, rational
from core.db import ResultStore, cell_hash
from core.errors import ConfigError, VidSchedError
from core.models import DependencyDag, Instance, LinkConfig, NonMonotoneWitness, SweepRow
from core.simulator import lossless_capacity
from core.traces import SynthParams, synth_instance, with_delay
from schedulers import ALGORITHMS, SCHEDULERS
from schedulers.doedf import doedf
from schedulers.edf import edf
from schedulers.pbedf import pbedf_best

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("algo", "delay", "capacity", "avg_quality", "reward", "frames_successful")
DEFAULT_POINTS = 20
LADDER_FACTOR = Fraction(5, 4)


def default_threads() -> int:
    raw = os.getenv("VIDSCHED_THREADS")
    if not raw:
        return os.cpu_count() or 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"VIDSCHED_THREADS must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"VIDSCHED_THREADS must be at least 1, got {threads}")
    return threads


def parse_capacities(spec: str) -> Tuple[int, ...]:
    """'a:b:step' (inclusive) or a comma list."""
    try:
        if ":" in spec:
            lo, hi, step = (int(x) for x in spec.split(":"))
            if step < 1 or lo < 1 or hi < lo:
                raise ValueError(spec)
            grid = tuple(range(lo, hi + 1, step))
        else:
            grid = tuple(int(x) for x in spec.split(","))
    except ValueError:
        raise ConfigError(f"capacity grid must be 'a:b:step' or a comma list of positive integers, got {spec!r}")
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"capacity grid must be positive and strictly increasing: {spec!r}")
    return grid


def parse_delays(spec: str) -> Tuple[Fraction, ...]:
    try:
        delays = tuple(Fraction(x.strip()) for x in spec.split(",") if x.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"delays must be a comma list of seconds, got {spec!r}")
    if not delays or any(d < 0 for d in delays):
        raise ConfigError(f"delays must be non-negative, got {spec!r}")
    return delays


def _all_lossless(dag: DependencyDag, capacity: int) -> bool:
    link = LinkConfig.for_dag(dag, capacity)
    return all(len(r.simulation.successful) == len(dag) for r in (edf(dag, link), doedf(dag, link), pbedf_best(dag, link)))


def sweep_endpoint(dag: DependencyDag) -> Optional[int]:
    """
    Smallest capacity on a geometric ladder from the lossless capacity at which every
    baseline is lossless too, capped at the largest frame size.
    """
    base = lossless_capacity(dag)
    if base is None:
        return None
    cap = max(f.size_bits for f in dag.frames)
    capacity = base
    while capacity < cap and not _all_lossless(dag, capacity):
        capacity = min(cap, math.ceil(capacity * LADDER_FACTOR))
    logger.info(f"Sweep endpoint: {capacity} bits/slot (lossless capacity {base})")
    return capacity


def capacity_grid(endpoint: int, points: int = DEFAULT_POINTS) -> Tuple[int, ...]:
    lo = max(1, endpoint // points)
    grid = np.unique(np.linspace(lo, endpoint, points).round().astype(np.int64))
    return tuple(int(c) for c in grid)


def instance_digest(instance: Instance) -> str:
    return hashlib.md5(dumps(instance_to_dict(instance))).hexdigest()


def run_cell(dag: DependencyDag, algo: str, delay: Fraction, capacity: int) -> SweepRow:
    scheduler = SCHEDULERS[algo]()
    link = LinkConfig.for_dag(dag, capacity)
    result = scheduler.run(dag, link)
    return SweepRow(
        algo=algo,
        delay=delay,
        capacity=capacity,
        reward=result.reward,
        frames_successful=len(result.simulation.successful),
        frame_count=len(dag),
    )


def _row_from_cache(cached: dict, frame_count: int, delay: Fraction) -> SweepRow:
    return SweepRow(
        algo=cached["algo"],
        delay=delay,
        capacity=int(cached["capacity"]),
        reward=Fraction(cached["reward"]),
        frames_successful=int(cached["frames_successful"]),
        frame_count=frame_count,
    )


def _row_to_cache(row: SweepRow) -> dict:
    return {
        "algo": row.algo,
        "delay": rational(row.delay),
        "capacity": row.capacity,
        "reward": rational(row.reward),
        "avg_quality": float(row.avg_quality),
        "frames_successful": row.frames_successful,
    }


async def sweep(
    instance: Instance,
    delays: Sequence[Fraction],
    capacities: Optional[Sequence[int]] = None,
    algos: Iterable[str] = ALGORITHMS,
    store: Optional[ResultStore] = None,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """
    Every (algo, delay, capacity) cell, computed concurrently and returned in that
    nesting order. Without an explicit grid each delay gets DEFAULT_POINTS capacities up
    to its sweep endpoint.
    """
    algos = list(algos)
    unknown = [a for a in algos if a not in SCHEDULERS]
    if unknown:
        raise ConfigError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
    store = store or ResultStore(enabled=False)
    digest = instance_digest(instance)

    dags: Dict[Fraction, DependencyDag] = {}
    grids: Dict[Fraction, Tuple[int, ...]] = {}
    for delay in delays:
        dags[delay] = with_delay(instance, delay).dag
        if capacities is not None:
            grids[delay] = tuple(capacities)
        else:
            endpoint = sweep_endpoint(dags[delay])
            if endpoint is None:
                raise ConfigError(f"no capacity makes delay {delay}s lossless; pass an explicit grid", delay=str(delay))
            grids[delay] = capacity_grid(endpoint)

    loop = asyncio.get_running_loop()
    workers = threads or default_threads()
    logger.info(f"Sweeping {len(algos)} algorithms x {len(delays)} delays on {workers} threads")

    async def cell(pool: ThreadPoolExecutor, algo: str, delay: Fraction, capacity: int) -> SweepRow:
        key = cell_hash(digest, algo, rational(delay), capacity)
        cached = store.get(key)
        if cached is not None:
            logger.debug(f"Cache hit for {algo} delay={delay} C={capacity}")
            return _row_from_cache(cached, len(dags[delay]), delay)
        try:
            row = await loop.run_in_executor(pool, run_cell, dags[delay], algo, delay, capacity)
        except VidSchedError as e:
            logger.error(f"Sweep cell {algo} delay={delay} C={capacity} failed: {e.message}")
            raise
        store.save(key, _row_to_cache(row))
        return row

    with ThreadPoolExecutor(max_workers=workers) as pool:
        tasks = [
            cell(pool, algo, delay, capacity)
            for algo in algos
            for delay in delays
            for capacity in grids[delay]
        ]
        rows = await asyncio.gather(*tasks)

    logger.info(f"✅ Sweep complete: {len(rows)} cells")
    return list(rows)


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.algo,
                rational(row.delay),
                row.capacity,
                f"{float(row.avg_quality):.6f}",
                rational(row.reward),
                row.frames_successful,
            ]
        )
    return buffer.getvalue()


def compare(rows: Sequence[SweepRow]) -> List[dict]:
    """
    Per (delay, capacity): every algorithm's reward, whether the optimum dominates all
    baselines, and which algorithms lost reward relative to the previous capacity.
    """
    table: Dict[Tuple[Fraction, int], Dict[str, Fraction]] = {}
    for row in rows:
        table.setdefault((row.delay, row.capacity), {})[row.algo] = row.reward

    out = []
    previous: Dict[Fraction, Dict[str, Fraction]] = {}
    for (delay, capacity) in sorted(table):
        rewards = table[(delay, capacity)]
        baselines = [r for algo, r in rewards.items() if algo != "optimal"]
        dominant = "optimal" not in rewards or all(rewards["optimal"] >= r for r in baselines)
        last = previous.get(delay, {})
        out.append(
            {
                "delay": rational(delay),
                "capacity": capacity,
                "rewards": {algo: rational(r) for algo, r in sorted(rewards.items())},
                "dominant": dominant,
                "nonmonotone": {algo: algo in last and r < last[algo] for algo, r in sorted(rewards.items())},
            }
        )
        if not dominant:
            logger.warning(f"Optimum dominated at delay={delay} C={capacity}: {rewards}")
        previous[delay] = rewards
    return out


def find_nonmonotone(
    seeds: Iterable[int],
    params: Optional[SynthParams] = None,
    capacities: Sequence[int] = tuple(range(1, 9)),
) -> Optional[NonMonotoneWitness]:
    """First seeded instance on which EDF earns less after a capacity increase."""
    params = params or SynthParams(pattern="G4B1", gops=2, regime="tight")
    for seed in seeds:
        instance = synth_instance(seed, params)
        dag = instance.dag
        rewards = [edf(dag, LinkConfig.for_dag(dag, c)).reward for c in capacities]
        for k in range(1, len(capacities)):
            if rewards[k] < rewards[k - 1]:
                logger.info(
                    f"EDF non-monotone on seed {seed}: {rewards[k - 1]} at C={capacities[k - 1]} -> "
                    f"{rewards[k]} at C={capacities[k]}"
                )
                return NonMonotoneWitness(
                    seed=seed,
                    instance=instance,
                    low_capacity=capacities[k - 1],
                    high_capacity=capacities[k],
                    low_reward=rewards[k - 1],
                    high_reward=rewards[k],
                )
    return None
