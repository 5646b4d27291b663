from schedulers.doedf import DoedfScheduler
from schedulers.edf import EdfScheduler
from schedulers.optimal import OptimalScheduler
from schedulers.pbedf import PbedfScheduler

SCHEDULERS = {
    cls.algo: cls
    for cls in (OptimalScheduler, EdfScheduler, DoedfScheduler, PbedfScheduler)
}
ALGORITHMS = tuple(SCHEDULERS)
