from core.models import BaselineResult, DependencyDag, LinkConfig
from core.scheduler_base import BaseScheduler, greedy_sequence


class EdfScheduler(BaseScheduler):
    """Earliest deadline first: display order, best effort."""

    algo = "edf"

    def run(self, dag: DependencyDag, link: LinkConfig) -> BaselineResult:
        return self.result(dag, link, greedy_sequence(dag.ids, dag, link))


def edf(dag: DependencyDag, link: LinkConfig) -> BaselineResult:
    return EdfScheduler().run(dag, link)
