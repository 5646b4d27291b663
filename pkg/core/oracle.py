"""
Brute-force optimum for desk-scale instances.

The default search only extends a sequence with frames whose ancestors have all been
sent, packs transmissions back-to-back and memoizes on (sent set, clock). The audit
search enumerates every ordered subset with every idle prefix and replays each one
through the simulator.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Optional, Tuple

from core.errors import OracleLimitError
from core.models import DependencyDag, LinkConfig, OracleLimits, TransmissionSequence
from core.simulator import simulate

logger = logging.getLogger(__name__)


def _check_limits(dag: DependencyDag, limits: OracleLimits) -> None:
    if len(dag) > limits.max_frames:
        raise OracleLimitError(
            f"{len(dag)} frames exceed the oracle cap of {limits.max_frames}", frames=len(dag)
        )
    if dag.horizon > limits.max_horizon:
        raise OracleLimitError(
            f"horizon {dag.horizon} exceeds the oracle cap of {limits.max_horizon}", horizon=dag.horizon
        )


def _pruned(dag: DependencyDag, link: LinkConfig) -> Tuple[Fraction, TransmissionSequence]:
    ids = dag.ids
    bit = {fid: 1 << k for k, fid in enumerate(ids)}
    need = {fid: sum(bit[a] for a in dag.ancestors(fid)) for fid in ids}
    delta = {fid: link.slots(dag.frame(fid).size_bits) for fid in ids}

    @lru_cache(maxsize=None)
    def best(mask: int, t: int) -> Tuple[Fraction, Tuple[int, ...]]:
        top: Tuple[Fraction, Tuple[int, ...]] = (Fraction(0), ())
        if t > dag.horizon:
            return top
        for fid in ids:
            if mask & bit[fid] or need[fid] & ~mask:
                continue
            f = dag.frame(fid)
            finish = t + delta[fid]
            gain = f.quality if finish <= f.deadline else Fraction(0)
            rest, tail = best(mask | bit[fid], finish)
            if gain + rest > top[0]:
                top = (gain + rest, (fid, *tail))
        return top

    reward, order = best(0, 0)
    logger.debug(f"Pruned oracle explored {best.cache_info().currsize} states")
    return reward, TransmissionSequence(order)


def _exhaustive(dag: DependencyDag, link: LinkConfig) -> Tuple[Fraction, TransmissionSequence]:
    top: Tuple[Fraction, TransmissionSequence] = (Fraction(0), TransmissionSequence(()))
    checked = 0
    for size in range(1, len(dag) + 1):
        for order in permutations(dag.ids, size):
            seq = TransmissionSequence(order)
            for idle in range(dag.horizon + 1):
                starts, clock = {}, idle
                for fid in order:
                    starts[fid] = clock
                    clock += link.slots(dag.frame(fid).size_bits)
                reward = simulate(seq, dag, link, starts).reward
                checked += 1
                if reward > top[0]:
                    top = (reward, seq)
    logger.debug(f"Exhaustive oracle simulated {checked} schedules")
    return top


def brute_force(
    dag: DependencyDag, link: LinkConfig, limits: Optional[OracleLimits] = None
) -> Tuple[Fraction, TransmissionSequence]:
    """Maximum reward over all ordered subsets of frames, with one maximizing sequence."""
    limits = limits or OracleLimits()
    _check_limits(dag, limits)
    if limits.exhaustive:
        return _exhaustive(dag, link)
    return _pruned(dag, link)
