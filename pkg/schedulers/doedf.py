from typing import Optional

from core.models import BaselineResult, DependencyDag, LinkConfig, UniversalSequence
from core.scheduler_base import BaseScheduler, greedy_sequence
from core.simulator import transmission_order


class DoedfScheduler(BaseScheduler):
    """EDF's skip rule applied while scanning frames in decoding order."""

    algo = "doedf"

    def __init__(self, universal: Optional[UniversalSequence] = None):
        super().__init__()
        self.universal = universal

    def run(self, dag: DependencyDag, link: LinkConfig) -> BaselineResult:
        order = self.universal.order if self.universal is not None else transmission_order(dag)
        return self.result(dag, link, greedy_sequence(order, dag, link))


def doedf(dag: DependencyDag, link: LinkConfig, universal: Optional[UniversalSequence] = None) -> BaselineResult:
    return DoedfScheduler(universal).run(dag, link)
