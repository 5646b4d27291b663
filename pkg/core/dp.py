"""
Optimal scheduling by dynamic programming over the universal sequence.

Rows are universal-sequence ranks, columns are start slots 0..T plus a zero boundary
column for t > T. Every row is computed in one vectorized pass over t: transmit reads
the next row shifted by the frame's transmission time, drop reads the row of the next
irrelevant frame, and wait is a reverse running maximum.
"""
import logging
import math
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from core.dag import partition_gops
from core.errors import ScheduleError, UnsupportedStructure
from core.mbfs import classify
from core.models import (
    DependencyDag,
    DpSolution,
    FrameKind,
    GopPartition,
    LinkConfig,
    StructureClass,
    TransmissionSequence,
    UniversalSequence,
)
from core.simulator import simulate
from core.universal import quasi_sio_universal, sio_universal

logger = logging.getLogger(__name__)

# quasi-SIO gating: states s in which a non-I frame may be transmitted
ALLOWED_STATES = {
    "before-next-i": (1, 3),
    "dual": (3,),
    "after-next-i": (2, 3),
}

State = Tuple[int, int, int, Optional[int]]  # (rank, slot, s, pending continuation)


def iframe_state(s: int, transmitted: bool) -> int:
    """Shift in the newest I-frame status bit."""
    return (2 * s + (1 if transmitted else 0)) % 4


class _Rewards:
    """Qualities scaled to integers so the tables stay exact."""

    def __init__(self, dag: DependencyDag):
        denominators = [f.quality.denominator for f in dag.frames] or [1]
        self.scale = math.lcm(*denominators)
        self.q = {f.id: int(f.quality * self.scale) for f in dag.frames}
        total = sum(self.q.values())
        if total < np.iinfo(np.int32).max:
            self.dtype = np.int32
        elif total <= np.iinfo(np.int64).max:
            self.dtype = np.int64
        else:
            # exact Python ints per cell
            logger.warning(f"Scaled quality total {total} exceeds int64, using object tables")
            self.dtype = object

    def to_fraction(self, value) -> Fraction:
        return Fraction(int(value), self.scale)


def _transmit(next_row: np.ndarray, ts: np.ndarray, delta: int, deadline: int, q: int) -> np.ndarray:
    horizon = len(next_row) - 2
    finish = ts + delta
    gain = np.zeros(len(ts), dtype=next_row.dtype)
    gain[finish <= deadline] = q
    return next_row[np.minimum(finish, horizon + 1)] + gain


def _with_wait(best: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(best[::-1])[::-1]


def _replay(start: State, options: Callable[[State], List[Tuple[str, int, State]]], value: Callable[[State], int],
            horizon: int, n: int, order) -> Tuple[List[Tuple[int, int]], int]:
    """
    Follow argmax actions; options come in tie order transmit > drop > wait. Returns the
    schedule and the number of states visited.
    """
    schedule: List[Tuple[int, int]] = []
    state = start
    visited = 0
    while state[0] < n and state[1] <= horizon:
        visited += 1
        target = value(state)
        for action, candidate, nxt in options(state):
            if candidate == target:
                if action == "transmit":
                    schedule.append((order[state[0]], state[1]))
                state = nxt
                break
        else:
            raise ScheduleError(f"no action reproduces table value at state {state}")
    return schedule, visited


def _finish(
    schedule: List[Tuple[int, int]],
    dag: DependencyDag,
    link: LinkConfig,
    reward: Fraction,
    structure: StructureClass,
    evaluations: int,
) -> DpSolution:
    seq = TransmissionSequence(tuple(f for f, _ in schedule))
    result = simulate(seq, dag, link, dict(schedule))
    ok = set(result.successful)
    # unsuccessful frames that no successful frame depends on carry no value
    kept = [(f, t) for f, t in schedule if f in ok or dag.descendants(f) & ok]
    seq = TransmissionSequence(tuple(f for f, _ in kept))
    result = simulate(seq, dag, link, dict(kept))
    if result.reward != reward:
        logger.error(f"Replayed reward {result.reward} differs from table optimum {reward}")
        raise ScheduleError("reconstructed schedule does not reproduce the optimum", expected=str(reward),
                            replayed=str(result.reward))
    return DpSolution(
        optimal_reward=reward,
        schedule=tuple(kept),
        status=result.status,
        structure=structure,
        evaluations=evaluations,
    )


def solve_sio(universal: UniversalSequence, dag: DependencyDag, link: LinkConfig) -> DpSolution:
    if universal.structure is not StructureClass.SIO or universal.resume:
        raise UnsupportedStructure(f"solve_sio needs an SIO universal sequence, got {universal.structure.value}")
    order = universal.order
    n = len(order)
    if n == 0:
        raise ScheduleError("cannot schedule an empty sequence")

    horizon = dag.horizon
    rewards = _Rewards(dag)
    ts = np.arange(horizon + 1)
    h = np.zeros((n + 1, horizon + 2), dtype=rewards.dtype)
    deltas = [link.slots(dag.frame(fid).size_bits) for fid in order]
    skip = [universal.next_irrelevant[fid] for fid in order]

    evaluations = 0
    for j in range(n - 1, -1, -1):
        f = dag.frame(order[j])
        trans = _transmit(h[j + 1], ts, deltas[j], f.deadline, rewards.q[f.id])
        h[j, : horizon + 1] = _with_wait(np.maximum(trans, h[skip[j], : horizon + 1]))
        evaluations += trans.size

    def value(state: State) -> int:
        return int(h[state[0], state[1]])

    def options(state: State):
        j, t, s, _ = state
        f = dag.frame(order[j])
        finish = t + deltas[j]
        gain = rewards.q[f.id] if finish <= f.deadline else 0
        return [
            ("transmit", int(h[j + 1, min(finish, horizon + 1)]) + gain, (j + 1, finish, s, None)),
            ("drop", int(h[skip[j], t]), (skip[j], t, s, None)),
            ("wait", int(h[j, t + 1]), (j, t + 1, s, None)),
        ]

    reward = rewards.to_fraction(h[0, 0])
    schedule, visited = _replay((0, 0, 0, None), options, value, horizon, n, order)
    evaluations += visited
    solution = _finish(schedule, dag, link, reward, StructureClass.SIO, evaluations)
    logger.debug(f"SIO DP: {n} frames, T={horizon}, reward {reward}, {evaluations} evaluations")
    return solution


def _membership(universal: UniversalSequence, partition: GopPartition, fid: int) -> str:
    gop = partition.gop_of[fid]
    nxt = partition.next_iframe(gop)
    if nxt is None or universal.position[fid] < universal.position[nxt]:
        return "before-next-i"
    if fid in partition.dual[gop]:
        return "dual"
    return "after-next-i"


def solve_quasi_sio(
    universal: UniversalSequence,
    dag: DependencyDag,
    partition: Optional[GopPartition],
    link: LinkConfig,
) -> DpSolution:
    """
    g(j, t, s) where the two bits of s record whether the two most recent I-frames in
    the universal order were transmitted. Dropping a frame whose block encloses the next
    I-frame continues at that I-frame with a pending jump past the block.
    """
    order = universal.order
    n = len(order)
    if n == 0:
        raise ScheduleError("cannot schedule an empty sequence")
    if universal.structure is StructureClass.NEITHER:
        raise UnsupportedStructure("solve_quasi_sio needs a quasi-SIO universal sequence")
    partition = partition or partition_gops(dag)

    horizon = dag.horizon
    rewards = _Rewards(dag)
    ts = np.arange(horizon + 1)
    g = np.zeros((n + 1, 4, horizon + 2), dtype=rewards.dtype)
    deltas = [link.slots(dag.frame(fid).size_bits) for fid in order]
    skip = [universal.next_irrelevant[fid] for fid in order]
    is_i = [dag.frame(fid).kind is FrameKind.I for fid in order]
    allowed = [() if is_i[j] else ALLOWED_STATES[_membership(universal, partition, order[j])] for j in range(n)]
    pending: Dict[int, int] = {}  # rank of a straddling frame -> rank of the I-frame inside its block
    for fid in universal.resume:
        gop = partition.gop_of[fid]
        pending[universal.position[fid]] = universal.position[partition.gop_starts[gop + 1]]

    continued: Dict[Tuple[int, int], np.ndarray] = {}
    evaluations = 0

    def iframe_row(j: int, on_transmit: int, on_drop: int) -> np.ndarray:
        nonlocal evaluations
        f = dag.frame(order[j])
        row = np.zeros((4, horizon + 2), dtype=rewards.dtype)
        for s in range(4):
            trans = _transmit(g[on_transmit, iframe_state(s, True)], ts, deltas[j], f.deadline, rewards.q[f.id])
            row[s, : horizon + 1] = _with_wait(np.maximum(trans, g[on_drop, iframe_state(s, False), : horizon + 1]))
            evaluations += trans.size
        return row

    def continuation(p: int, resume: int) -> np.ndarray:
        key = (p, resume)
        if key not in continued:
            continued[key] = iframe_row(p, resume, max(skip[p], resume))
        return continued[key]

    for j in range(n - 1, -1, -1):
        if is_i[j]:
            g[j] = iframe_row(j, j + 1, skip[j])
            continue
        f = dag.frame(order[j])
        if j in pending:
            drop_rows = continuation(pending[j], universal.resume[order[j]])
        else:
            drop_rows = g[skip[j]]
        for s in range(4):
            best = drop_rows[s, : horizon + 1]
            if s in allowed[j]:
                best = np.maximum(_transmit(g[j + 1, s], ts, deltas[j], f.deadline, rewards.q[f.id]), best)
            g[j, s, : horizon + 1] = _with_wait(best)
            evaluations += best.size

    def table(j: int, resume: Optional[int]) -> np.ndarray:
        return g[j] if resume is None else continued[(j, resume)]

    def value(state: State) -> int:
        j, t, s, resume = state
        return int(table(j, resume)[s, t])

    def options(state: State):
        j, t, s, resume = state
        f = dag.frame(order[j])
        finish = t + deltas[j]
        gain = rewards.q[f.id] if finish <= f.deadline else 0
        col = min(finish, horizon + 1)
        wait = ("wait", int(table(j, resume)[s, t + 1]), (j, t + 1, s, resume))
        if is_i[j]:
            on_transmit = j + 1 if resume is None else resume
            on_drop = skip[j] if resume is None else max(skip[j], resume)
            s_sent, s_dropped = iframe_state(s, True), iframe_state(s, False)
            return [
                ("transmit", int(g[on_transmit, s_sent, col]) + gain, (on_transmit, finish, s_sent, None)),
                ("drop", int(g[on_drop, s_dropped, t]), (on_drop, t, s_dropped, None)),
                wait,
            ]
        out = []
        if s in allowed[j]:
            out.append(("transmit", int(g[j + 1, s, col]) + gain, (j + 1, finish, s, None)))
        if j in pending:
            p, target = pending[j], universal.resume[order[j]]
            out.append(("drop", int(continued[(p, target)][s, t]), (p, t, s, target)))
        else:
            out.append(("drop", int(g[skip[j], s, t]), (skip[j], t, s, None)))
        out.append(wait)
        return out

    reward = rewards.to_fraction(g[0, 0, 0])
    schedule, visited = _replay((0, 0, 0, None), options, value, horizon, n, order)
    evaluations += visited
    solution = _finish(schedule, dag, link, reward, universal.structure, evaluations)
    logger.debug(
        f"Quasi-SIO DP: {n} frames, T={horizon}, {len(continued)} continuation rows, "
        f"reward {reward}, {evaluations} evaluations"
    )
    return solution


def solve(dag: DependencyDag, link: LinkConfig) -> DpSolution:
    label = classify(dag)
    if label.structure is StructureClass.NEITHER:
        raise UnsupportedStructure(
            "dag is neither SIO nor quasi-SIO", witness=label.witness, node=label.node
        )
    if label.structure is StructureClass.SIO:
        solution = solve_sio(sio_universal(dag), dag, link)
    else:
        partition = partition_gops(dag)
        solution = solve_quasi_sio(quasi_sio_universal(dag, partition=partition), dag, partition, link)
    logger.info(
        f"Solved {label.structure.value} instance: {len(dag)} frames at C={link.capacity_bits_per_slot}, "
        f"reward {solution.optimal_reward} ({solution.evaluations} evaluations)"
    )
    return solution
