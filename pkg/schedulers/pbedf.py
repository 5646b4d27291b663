import logging
from typing import List, Optional

from core.errors import ScheduleError
from core.models import BaselineResult, DependencyDag, FrameKind, LinkConfig
from core.scheduler_base import BaseScheduler, greedy_sequence

logger = logging.getLogger(__name__)

KIND_PRIORITY = {FrameKind.I: 0, FrameKind.P: 1, FrameKind.B: 2}


def block_order(dag: DependencyDag, m: int) -> List[int]:
    """Display order cut into blocks of m frames; I, then P, then B inside a block, each by deadline."""
    if m < 1:
        raise ScheduleError(f"PBEDF block size must be at least 1, got {m}", m=m)
    order: List[int] = []
    for start in range(0, len(dag), m):
        block = dag.frames[start : start + m]
        order.extend(f.id for f in sorted(block, key=lambda f: (KIND_PRIORITY[f.kind], f.deadline)))
    return order


class PbedfScheduler(BaseScheduler):
    """Priority-based EDF; with no block size the best one over 1..N is searched."""

    algo = "pbedf"

    def __init__(self, m: Optional[int] = None):
        super().__init__()
        self.m = m

    def run_with(self, dag: DependencyDag, link: LinkConfig, m: int) -> BaselineResult:
        return self.result(dag, link, greedy_sequence(block_order(dag, m), dag, link), pbedf_m=m)

    def run(self, dag: DependencyDag, link: LinkConfig) -> BaselineResult:
        if self.m is not None:
            return self.run_with(dag, link, self.m)
        best: Optional[BaselineResult] = None
        for m in range(1, len(dag) + 1):
            candidate = self.run_with(dag, link, m)
            if best is None or candidate.reward > best.reward:
                best = candidate
        logger.debug(f"PBEDF best block size {best.pbedf_m} with reward {best.reward}")
        return best


def pbedf(dag: DependencyDag, link: LinkConfig, m: int) -> BaselineResult:
    return PbedfScheduler(m).run(dag, link)


def pbedf_best(dag: DependencyDag, link: LinkConfig) -> BaselineResult:
    return PbedfScheduler().run(dag, link)
