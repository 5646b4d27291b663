from fractions import Fraction
from pathlib import Path

from hypothesis import HealthCheck, given, settings, strategies as st
import orjson
import pytest

from core.dag import make_dag, with_metadata
from core.errors import ScheduleError
from core.experiments import find_nonmonotone
from core.models import Frame, FrameKind, FrameStatus, LinkConfig
from core.scheduler_base import greedy_sequence
from core.traces import SynthParams, synth_instance
from core.universal import universal_sequence
from schedulers import ALGORITHMS, SCHEDULERS
from schedulers.doedf import DoedfScheduler, doedf
from schedulers.edf import edf
from schedulers.pbedf import PbedfScheduler, block_order, pbedf, pbedf_best

FIXTURES = Path(__file__).parent / "fixtures"


def test_registry_covers_every_algorithm():
    assert ALGORITHMS == ("optimal", "edf", "doedf", "pbedf")
    assert SCHEDULERS["edf"]().name == "EdfScheduler"


def test_edf_skips_child_of_skipped_iframe(chain, link_for):
    dag = chain([3, 1], [2, 5])
    result = edf(dag, link_for(dag))
    assert result.sequence.order == ()
    assert result.reward == 0
    assert result.name == "EDF"


def test_edf_lossless_when_capacity_is_ample(g16b3, link_for):
    dag = with_metadata(g16b3, deadlines=[fid + 17 for fid in g16b3.ids])
    result = edf(dag, link_for(dag))
    assert result.reward == 17


def test_skip_rule_counts_outstanding_ancestors(g16b3, link_for):
    # frame 13 waits on 14 and 16, neither sent yet in display order
    dag = with_metadata(g16b3, sizes=[2] * len(g16b3))
    link = link_for(dag)
    assert greedy_sequence([13], dag, link).order == ()
    assert greedy_sequence([16, 13], dag, link).order == (16,)


@pytest.fixture
def pinned_witness():
    return orjson.loads((FIXTURES / "edf_nonmonotone.json").read_bytes())


def test_edf_reward_drops_with_more_capacity(pinned_witness):
    instance = synth_instance(pinned_witness["seed"], SynthParams(**pinned_witness["params"]))
    dag = instance.dag
    assert dag.edges()
    low = edf(dag, LinkConfig.for_dag(dag, pinned_witness["low_capacity"])).reward
    high = edf(dag, LinkConfig.for_dag(dag, pinned_witness["high_capacity"])).reward
    assert low == Fraction(pinned_witness["low_reward"])
    assert high == Fraction(pinned_witness["high_reward"])
    assert high < low


def test_skip_rule_sends_b_frame_ahead_of_its_next_iframe(link_for):
    # B1 predicts from I0 and I2; with I2 counted as outstanding it still fits by d=3
    frames = [
        Frame(0, FrameKind.I, 1, 1),
        Frame(1, FrameKind.B, 1, 3),
        Frame(2, FrameKind.I, 1, 4),
    ]
    dag = make_dag(frames, {1: [0, 2]})
    link = link_for(dag)
    result = edf(dag, link)
    assert result.sequence.order == (0, 1, 2)
    assert result.simulation.status[1] is FrameStatus.SUCCESSFUL
    assert result.reward == 3
    assert doedf(dag, link).sequence.order == (0, 2, 1)


def test_doedf_at_lossless_capacity_sends_universal_order(g16b3, link_for):
    dag = with_metadata(g16b3, deadlines=[fid + 17 for fid in g16b3.ids])
    result = doedf(dag, link_for(dag))
    assert result.sequence.order == universal_sequence(dag).order
    assert result.reward == 17


def test_doedf_accepts_precomputed_universal(g16b3, link_for):
    universal = universal_sequence(g16b3)
    link = link_for(g16b3)
    assert DoedfScheduler(universal).run(g16b3, link) == DoedfScheduler().run(g16b3, link)


def test_block_order_prioritizes_kinds(g4b1_two):
    assert block_order(g4b1_two, 4) == [0, 2, 1, 3, 4, 6, 5, 7]
    assert block_order(g4b1_two, 1) == g4b1_two.ids
    assert block_order(g4b1_two, 8) == [0, 4, 2, 6, 1, 3, 5, 7]


def test_pbedf_rejects_empty_blocks(g4b1_two, link_for):
    with pytest.raises(ScheduleError):
        pbedf(g4b1_two, link_for(g4b1_two), 0)


def test_pbedf_single_block_chain_is_edf(chain, link_for):
    dag = chain([2, 1, 3, 1], [2, 3, 6, 7])
    link = link_for(dag)
    assert pbedf(dag, link, len(dag)).sequence == edf(dag, link).sequence


def test_pbedf_reports_block_size(g4b1_two, link_for):
    assert pbedf(g4b1_two, link_for(g4b1_two), 3).pbedf_m == 3
    assert pbedf_best(g4b1_two, link_for(g4b1_two)).pbedf_m == 1
    assert PbedfScheduler(2).run(g4b1_two, link_for(g4b1_two)).name == "PBEDF"


@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(seed=st.integers(0, 100_000), capacity=st.integers(1, 7))
def test_pbedf_block_size_properties(tight_instance, seed, capacity):
    dag = tight_instance(seed).dag
    link = LinkConfig.for_dag(dag, capacity)
    assert pbedf(dag, link, 1).sequence == edf(dag, link).sequence
    best = pbedf_best(dag, link)
    for m in range(1, len(dag) + 1):
        assert best.reward >= pbedf(dag, link, m).reward
    assert best.reward >= edf(dag, link).reward


@settings(deadline=None, max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(seed=st.integers(0, 100_000), capacity=st.integers(1, 7))
def test_baseline_rewards_come_from_simulation(tight_instance, seed, capacity):
    dag = tight_instance(seed).dag
    link = LinkConfig.for_dag(dag, capacity)
    for algo in ("edf", "doedf", "pbedf"):
        result = SCHEDULERS[algo]().run(dag, link)
        assert result.reward == result.simulation.reward
        assert set(result.simulation.successful) <= result.sequence.selected


def test_find_nonmonotone_finds_pinned_witness(pinned_witness):
    witness = find_nonmonotone(range(300))
    assert witness is not None
    assert witness.seed == pinned_witness["seed"]
    assert witness.instance.pattern == pinned_witness["params"]["pattern"]
    assert (witness.low_capacity, witness.high_capacity) == (
        pinned_witness["low_capacity"],
        pinned_witness["high_capacity"],
    )
    assert witness.low_reward == Fraction(pinned_witness["low_reward"])
    assert witness.high_reward == Fraction(pinned_witness["high_reward"])
