from fractions import Fraction

import pytest

from core.dag import build_pattern, make_dag
from core.errors import OracleLimitError
from core.mbfs import classify
from core.models import Frame, FrameKind, LinkConfig, OracleLimits, StructureClass
from core.oracle import brute_force
from core.simulator import simulate
from core.traces import SynthParams, synth_instance
from core.universal import quasi_sio_universal

# five-frame shapes, small enough for the exhaustive audit
AUDIT_SHAPES = [
    ("G4B1", 1, True, False),  # quasi-SIO, P2 straddles the moved I4
    ("G4B1", 1, True, True),
    ("G4B3", 1, True, False),
    ("G2B1", 2, True, False),
]


def audit_instance(seed):
    pattern, gops, trailing, strip = AUDIT_SHAPES[seed % len(AUDIT_SHAPES)]
    params = SynthParams(pattern=pattern, gops=gops, regime="tight", trailing_iframe=trailing, strip_backward=strip)
    return synth_instance(seed, params)


def test_single_frame():
    dag = make_dag([Frame(0, FrameKind.I, 1, 1, Fraction(2))], {})
    reward, seq = brute_force(dag, LinkConfig.for_dag(dag, 1))
    assert reward == 2
    assert seq.order == (0,)


def test_chain(chain, link_for):
    dag = chain([1, 1], [1, 2], [5, 3])
    reward, seq = brute_force(dag, link_for(dag))
    assert reward == 8
    assert seq.order == (0, 1)


def test_rejects_too_many_frames(link_for):
    dag = build_pattern("G16B3", 1)
    with pytest.raises(OracleLimitError) as exc:
        brute_force(dag, link_for(dag))
    assert exc.value.details["frames"] == 16


def test_rejects_long_horizon(chain, link_for):
    dag = chain([1, 1], [1, 30])
    with pytest.raises(OracleLimitError):
        brute_force(dag, link_for(dag))
    reward, _ = brute_force(dag, link_for(dag), OracleLimits(max_horizon=30))
    assert reward == 2


def test_returned_sequence_achieves_reward(tight_instance):
    dag = tight_instance(4).dag
    link = LinkConfig.for_dag(dag, 2)
    reward, seq = brute_force(dag, link)
    assert simulate(seq, dag, link).reward == reward


def test_audit_shapes_include_a_straddling_frame():
    dag = audit_instance(0).dag
    assert classify(dag).structure is StructureClass.QUASI_SIO
    assert quasi_sio_universal(dag).resume == {2: 5}


@pytest.mark.parametrize("seed", range(50))
def test_pruned_search_matches_exhaustive(seed):
    dag = audit_instance(seed).dag
    assert len(dag) == 5
    for capacity in (1, 3):
        link = LinkConfig.for_dag(dag, capacity)
        pruned, _ = brute_force(dag, link)
        exhaustive, seq = brute_force(dag, link, OracleLimits(exhaustive=True))
        assert pruned == exhaustive
        assert simulate(seq, dag, link).reward == exhaustive
