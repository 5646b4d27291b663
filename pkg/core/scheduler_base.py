from abc import ABC, abstractmethod
from typing import Iterable, List, Optional, Set
import logging

from core.models import BaselineResult, DependencyDag, LinkConfig, TransmissionSequence
from core.simulator import simulate

logger = logging.getLogger(__name__)


class BaseScheduler(ABC):
    algo = "base"

    def __init__(self):
        self.name = self.__class__.__name__

    @abstractmethod
    def run(self, dag: DependencyDag, link: LinkConfig) -> BaselineResult:
        """
        Main entry point for the scheduler.
        Returns the chosen sequence with its simulated reward.
        """
        pass

    def result(
        self,
        dag: DependencyDag,
        link: LinkConfig,
        seq: TransmissionSequence,
        pbedf_m: Optional[int] = None,
    ) -> BaselineResult:
        simulation = simulate(seq, dag, link)
        return BaselineResult(
            name=self.algo.upper(),
            reward=simulation.reward,
            sequence=seq,
            pbedf_m=pbedf_m,
            simulation=simulation,
        )


def greedy_sequence(order: Iterable[int], dag: DependencyDag, link: LinkConfig) -> TransmissionSequence:
    """
    Best-effort scan: a frame is skipped when an ancestor was skipped, or when sending
    it now plus every ancestor still outstanding would finish after its deadline.
    """
    clock = 0
    sent: Set[int] = set()
    skipped: Set[int] = set()
    out: List[int] = []
    for fid in order:
        f = dag.frame(fid)
        ancestors = dag.ancestors(fid)
        if ancestors & skipped:
            skipped.add(fid)
            continue
        outstanding = sum(link.slots(dag.frame(a).size_bits) for a in ancestors - sent)
        delta = link.slots(f.size_bits)
        if clock + delta + outstanding > f.deadline:
            logger.debug(f"Skipping frame {fid}: {clock}+{delta}+{outstanding} > {f.deadline}")
            skipped.add(fid)
            continue
        sent.add(fid)
        out.append(fid)
        clock += delta
    return TransmissionSequence(tuple(out))
