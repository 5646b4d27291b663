"""
Replay of a transmission sequence over a fixed-capacity link.

A frame is decoded once it and all of its parents have arrived and every parent is
decoded; its decode time is the latest of those arrivals. It is successful when that
decode time is no later than its deadline slot.
"""
import logging
from fractions import Fraction
from typing import Dict, Mapping, Optional

from core.dag import decode_order
from core.errors import ScheduleError, UnsupportedStructure
from core.models import (
    DependencyDag,
    FrameStatus,
    LinkConfig,
    ScheduledFrame,
    SimulationResult,
    TransmissionSequence,
)
from core.universal import universal_sequence

logger = logging.getLogger(__name__)


def simulate(
    seq: TransmissionSequence,
    dag: DependencyDag,
    link: LinkConfig,
    start_times: Optional[Mapping[int, int]] = None,
) -> SimulationResult:
    finish: Dict[int, int] = {}
    starts: Dict[int, int] = {}
    clock = 0
    for fid in seq.order:
        if fid not in dag.by_id:
            raise ScheduleError(f"unknown frame {fid} in sequence", frame=fid)
        if start_times is not None:
            if fid not in start_times:
                raise ScheduleError(f"no start time for frame {fid}", frame=fid)
            start = int(start_times[fid])
            if start < clock:
                raise ScheduleError(
                    f"frame {fid} starts at slot {start} before the link is free at {clock}", frame=fid
                )
        else:
            start = clock
        starts[fid] = start
        clock = start + link.slots(dag.frame(fid).size_bits)
        finish[fid] = clock

    decoded: Dict[int, Optional[int]] = {}
    for fid in dag.topological_order:
        if fid not in finish:
            decoded[fid] = None
            continue
        times = [decoded[p] for p in dag.parents[fid]]
        decoded[fid] = None if any(t is None for t in times) else max([finish[fid], *times])

    status: Dict[int, FrameStatus] = {}
    reward = Fraction(0)
    for f in dag.frames:
        if f.id not in finish:
            status[f.id] = FrameStatus.DROPPED
        elif decoded[f.id] is not None and decoded[f.id] <= f.deadline:
            status[f.id] = FrameStatus.SUCCESSFUL
            reward += f.quality
        else:
            status[f.id] = FrameStatus.UNSUCCESSFUL

    schedule = tuple(ScheduledFrame(fid, starts[fid], finish[fid], status[fid]) for fid in seq.order)
    return SimulationResult(reward=reward, status=status, finish_times=finish, schedule=schedule)


def transmission_order(dag: DependencyDag):
    """Universal order when the dag has one, otherwise a deadline-keyed decode order."""
    try:
        return list(universal_sequence(dag).order)
    except UnsupportedStructure:
        return decode_order(dag)


def _lossless_at(order, dag: DependencyDag, capacity: int, **link_kwargs) -> bool:
    link = LinkConfig.for_dag(dag, capacity, **link_kwargs)
    result = simulate(TransmissionSequence(tuple(order)), dag, link)
    return len(result.successful) == len(dag)


def lossless_capacity(dag: DependencyDag, **link_kwargs) -> Optional[int]:
    """
    Smallest integer capacity at which sending every frame back-to-back in universal
    order makes all of them successful; None when even one slot per frame is too slow.
    """
    order = transmission_order(dag)
    hi = max(f.size_bits for f in dag.frames)
    if not _lossless_at(order, dag, hi, **link_kwargs):
        logger.warning(f"Lossless delivery unattainable for {len(dag)} frames even at C={hi}")
        return None
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _lossless_at(order, dag, mid, **link_kwargs):
            hi = mid
        else:
            lo = mid + 1
    logger.debug(f"Lossless capacity: {lo} bits/slot")
    return lo
