from hypothesis import HealthCheck, given, settings, strategies as st
import pytest

from core.dag import build_pattern, partition_gops, strip_backward_edges
from core.errors import UnsupportedStructure
from core.mbfs import build_forest, classify, critical_nodes
from core.models import StructureClass, TransmissionSequence
from core.universal import (
    canonical_form,
    check_canonical,
    direct_next_irrelevant,
    quasi_sio_universal,
    sio_universal,
    universal_sequence,
)

QUASI_ORDER_G16B3 = (0, 4, 2, 1, 3, 8, 6, 5, 7, 12, 10, 9, 11, 16, 14, 13, 15)


def is_subsequence(short, long):
    it = iter(long)
    return all(x in it for x in short)


def test_sio_universal_stripped_g16b3(g16b3_stripped):
    universal = sio_universal(g16b3_stripped)
    assert universal.order == (0, 4, 2, 1, 3, 8, 6, 5, 7, 12, 10, 9, 11, 14, 13, 15, 16)
    assert universal.structure is StructureClass.SIO
    assert universal.next_irrelevant[4] == 16
    assert universal.next_irrelevant[0] == 16
    assert universal.next_iframe[0] == 16


def test_sio_universal_chain(chain):
    assert sio_universal(chain([1] * 4, [0, 1, 2, 3])).order == (0, 1, 2, 3)


def test_sio_universal_keeps_gops_in_blocks():
    dag = strip_backward_edges(build_pattern("G4B1", 2))
    assert sio_universal(dag).order == (0, 2, 1, 3, 4, 6, 5, 7)


def test_sio_universal_rejects_quasi(g16b3):
    with pytest.raises(UnsupportedStructure):
        sio_universal(g16b3)


def test_quasi_universal_g16b3(g16b3):
    universal = quasi_sio_universal(g16b3)
    assert universal.order == QUASI_ORDER_G16B3
    assert universal.structure is StructureClass.QUASI_SIO
    assert universal.resume == {4: 17, 8: 17, 12: 17}
    assert universal.next_irrelevant[4] == 13
    assert universal.next_irrelevant[16] == 17
    assert universal.next_irrelevant[11] == 13


def test_quasi_universal_without_dual_frames_matches_sio(g16b3_stripped):
    assert quasi_sio_universal(g16b3_stripped).order == sio_universal(g16b3_stripped).order


def test_universal_sequence_is_deterministic(g16b3):
    assert universal_sequence(g16b3) == universal_sequence(g16b3)


@pytest.mark.parametrize("pattern", ["G4B1", "G8B3", "G16B3", "G16B15"])
@pytest.mark.parametrize("gops,trailing", [(1, True), (2, False), (2, True), (3, True)])
def test_quasi_universal_placement(pattern, gops, trailing):
    dag = build_pattern(pattern, gops, trailing_iframe=trailing)
    partition = partition_gops(dag)
    forest = build_forest(dag, partition)
    critical = critical_nodes(dag, forest, partition)
    universal = quasi_sio_universal(dag, forest, partition, critical)
    pos = universal.position

    assert sorted(universal.order) == dag.ids
    assert check_canonical(TransmissionSequence(universal.order), dag).ok
    assert dict(universal.next_irrelevant) == direct_next_irrelevant(universal.order, dag)

    merged = partition.merged
    for g, start in enumerate(partition.gop_starts):
        nxt = partition.next_iframe(g)
        block = sorted(pos[f] for f in merged[g])
        if block:
            assert block == list(range(block[0], block[0] + len(block)))
        if g + 1 < len(merged) and merged[g] and merged[g + 1]:
            assert min(pos[f] for f in merged[g + 1]) == block[-1] + 1

        zeta = critical.zeta[g]
        if zeta is None:
            continue
        assert pos[zeta] == pos[nxt] + 1
        d_zeta = dag.frame(zeta).deadline
        for f in merged[g] - partition.dual[g] - {nxt}:
            if dag.related(f, zeta):
                continue
            if dag.frame(f).deadline < d_zeta:
                assert pos[f] < pos[nxt]
            else:
                assert pos[f] > pos[nxt]


@pytest.mark.parametrize("name,node", [("late-sibling", 3), ("dual-triple", 3)])
def test_quasi_universal_rejects_frames_deferred_past_next_iframe(quasi_shape, name, node):
    dag = quasi_shape(name)
    assert classify(dag).structure is StructureClass.QUASI_SIO
    with pytest.raises(UnsupportedStructure) as exc:
        quasi_sio_universal(dag)
    assert exc.value.node == node
    assert "zeta 2" in exc.value.witness


def test_quasi_universal_dual_pair(quasi_shape):
    universal = quasi_sio_universal(quasi_shape("dual-pair"))
    assert universal.order == (0, 1, 4, 2, 3)
    assert universal.resume == {1: 5}
    assert universal.next_irrelevant[1] == 2
    assert universal.next_irrelevant[2] == 4
    assert universal.next_irrelevant[4] == 5


def test_sio_next_irrelevant_matches_direct_scan():
    dag = strip_backward_edges(build_pattern("G16B15", 2, trailing_iframe=True))
    universal = sio_universal(dag)
    assert dict(universal.next_irrelevant) == direct_next_irrelevant(universal.order, dag)


def test_canonical_form_of_everything_is_universal(g16b3):
    universal = universal_sequence(g16b3)
    assert canonical_form(g16b3.ids, universal, g16b3).order == universal.order


def test_canonical_form_filters(g16b3_stripped):
    universal = universal_sequence(g16b3_stripped)
    assert canonical_form({8, 0, 4}, universal, g16b3_stripped).order == (0, 4, 8)


def test_canonical_form_prunes_blocks_of_dropped_iframe():
    dag = build_pattern("G16B3", 2)
    universal = universal_sequence(dag)
    selected = set(dag.ids) - {16}
    out = canonical_form(selected, universal, dag).selected
    assert not out & {13, 14, 15}
    assert not out & set(range(16, 32))
    assert out == frozenset(range(0, 13))


def test_check_canonical_ancestor_order(chain):
    report = check_canonical(TransmissionSequence((1, 0)), chain([1, 1], [0, 1]))
    assert not report.ok
    assert report.violated_property == 1
    assert report.pair == (0, 1)


def test_check_canonical_deadline_order():
    dag = strip_backward_edges(build_pattern("G4B1", 1))
    report = check_canonical(TransmissionSequence((3, 1)), dag)
    assert not report.ok
    assert report.violated_property == 2
    assert report.pair == (1, 3)


def test_check_canonical_accepts_sio_universal(g16b3_stripped):
    assert check_canonical(TransmissionSequence(sio_universal(g16b3_stripped).order), g16b3_stripped).ok


@settings(deadline=None, max_examples=50, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(seed=st.integers(0, 10_000), data=st.data())
def test_canonical_form_is_subsequence_of_universal(tight_instance, seed, data):
    dag = tight_instance(seed).dag
    if classify(dag).structure is StructureClass.NEITHER:
        return
    universal = universal_sequence(dag)
    subset = data.draw(st.sets(st.sampled_from(dag.ids)))
    seq = canonical_form(subset, universal, dag)
    assert is_subsequence(seq.order, universal.order)
    assert all(dag.ancestors(f) <= seq.selected for f in seq.order)
    assert check_canonical(seq, dag).violated_property != 1
