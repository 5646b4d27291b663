from core.dp import solve
from core.models import BaselineResult, DependencyDag, LinkConfig
from core.scheduler_base import BaseScheduler
from core.simulator import simulate


class OptimalScheduler(BaseScheduler):
    """The dynamic-programming optimum, wrapped to report like the baselines."""

    algo = "optimal"

    def run(self, dag: DependencyDag, link: LinkConfig) -> BaselineResult:
        solution = solve(dag, link)
        simulation = simulate(solution.sequence, dag, link, solution.start_times)
        return BaselineResult(
            name=self.algo.upper(),
            reward=solution.optimal_reward,
            sequence=solution.sequence,
            simulation=simulation,
        )
