"""
Universal transmission sequences and canonical forms.

The SIO universal sequence is the per-GOP pre-order walk of the MBFS forest. The
quasi-SIO variant moves each I_{i+1} to sit immediately before the earliest frame of
D_i, so every frame predicted from both I-frames follows both of them.
"""
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from core.dag import partition_gops
from core.errors import UnsupportedStructure
from core.mbfs import build_forest, classify, critical_nodes
from core.models import (
    CanonicalReport,
    CriticalNodes,
    DependencyDag,
    FrameKind,
    GopPartition,
    MbfsTree,
    StructureClass,
    TransmissionSequence,
    UniversalSequence,
)

logger = logging.getLogger(__name__)


def _require(dag: DependencyDag, allowed: Iterable[StructureClass]):
    label = classify(dag)
    if label.structure not in allowed:
        raise UnsupportedStructure(
            f"dag classified as {label.structure.value}", witness=label.witness, node=label.node
        )
    return label


def _scan_next_irrelevant(order: Sequence[int], pos: int, dag: DependencyDag) -> int:
    fid = order[pos]
    k = pos + 1
    while k < len(order) and dag.related(fid, order[k]):
        k += 1
    return k


def _next_iframes(order: Sequence[int], dag: DependencyDag) -> Dict[int, int]:
    out: Dict[int, int] = {}
    last: Optional[int] = None
    for rank in range(len(order) - 1, -1, -1):
        fid = order[rank]
        if dag.frame(fid).kind is FrameKind.I:
            out[fid] = last if last is not None else len(order)
            last = rank
    return out


def _deferral_violation(
    blocks: List[List[int]], anchors: List[Optional[int]], partition: GopPartition
) -> Optional[Tuple[str, int]]:
    """
    First frame that follows the anchor of its GOP in pre-order without depending on
    I_{i+1}. When no D_i frame is sent such a frame belongs before I_{i+1}, so no single
    position of I_{i+1} serves every selection.
    """
    for g, block in enumerate(blocks):
        anchor = anchors[g]
        if anchor is None:
            continue
        dual = partition.dual[g]
        for fid in block[block.index(anchor) + 1 :]:
            if fid not in dual:
                nxt = partition.gop_starts[g + 1]
                return (
                    f"GOP {g}: frame {fid} follows zeta {anchor} but does not depend on I-frame {nxt}",
                    fid,
                )
    return None


def sio_universal(
    dag: DependencyDag,
    forest: Optional[List[MbfsTree]] = None,
    partition: Optional[GopPartition] = None,
) -> UniversalSequence:
    _require(dag, (StructureClass.SIO,))
    partition = partition or partition_gops(dag)
    forest = forest or build_forest(dag, partition)

    order: List[int] = []
    next_irrelevant: Dict[int, int] = {}
    for tree in forest:
        for fid in tree.preorder():
            next_irrelevant[fid] = len(order) + tree.subtree_size[fid]
            order.append(fid)

    return UniversalSequence(
        order=tuple(order),
        structure=StructureClass.SIO,
        position={fid: rank for rank, fid in enumerate(order)},
        next_irrelevant=next_irrelevant,
        next_iframe=_next_iframes(order, dag),
    )


def quasi_sio_universal(
    dag: DependencyDag,
    forest: Optional[List[MbfsTree]] = None,
    partition: Optional[GopPartition] = None,
    critical: Optional[CriticalNodes] = None,
) -> UniversalSequence:
    label = _require(dag, (StructureClass.SIO, StructureClass.QUASI_SIO))
    partition = partition or partition_gops(dag)
    forest = forest or build_forest(dag, partition)
    critical = critical or critical_nodes(dag, forest, partition)

    blocks = [tree.preorder() for tree in forest]
    # earliest D_i member in the stripped SIO order; equals zeta_i for isomorphically ordered trees
    anchors: List[Optional[int]] = []
    for g, block in enumerate(blocks):
        dual = partition.dual[g]
        anchors.append(next((f for f in block if f in dual), None))
        if anchors[-1] is not None and anchors[-1] != critical.zeta[g]:
            logger.warning(f"GOP {g}: earliest dual frame {anchors[-1]} differs from zeta {critical.zeta[g]}")

    violation = _deferral_violation(blocks, anchors, partition)
    if violation is not None:
        raise UnsupportedStructure(
            "next I-frame cannot be placed at a fixed universal position", witness=violation[0], node=violation[1]
        )

    order: List[int] = []
    for g, block in enumerate(blocks):
        moved = g > 0 and anchors[g - 1] is not None
        for fid in block[1:] if moved else block:
            if fid == anchors[g]:
                order.append(partition.gop_starts[g + 1])
            order.append(fid)

    position = {fid: rank for rank, fid in enumerate(order)}
    straddling: Dict[int, int] = {}  # frame -> GOP whose next I-frame lands inside its block
    for g, tree in enumerate(forest):
        if anchors[g] is not None:
            for fid in tree.root_path(anchors[g])[1:-1]:
                straddling[fid] = g

    next_irrelevant: Dict[int, int] = {}
    resume: Dict[int, int] = {}
    for g, tree in enumerate(forest):
        for fid in tree.preorder():
            rank = position[fid]
            if dag.frame(fid).kind is FrameKind.I:
                next_irrelevant[fid] = _scan_next_irrelevant(order, rank, dag)
            elif fid in straddling:
                next_irrelevant[fid] = position[partition.gop_starts[straddling[fid] + 1]]
                resume[fid] = rank + tree.subtree_size[fid] + 1
            else:
                next_irrelevant[fid] = rank + tree.subtree_size[fid]

    logger.debug(f"Quasi-SIO universal sequence: {len(order)} frames, {len(resume)} straddling")
    return UniversalSequence(
        order=tuple(order),
        structure=label.structure,
        position=position,
        next_irrelevant=next_irrelevant,
        next_iframe=_next_iframes(order, dag),
        resume=resume,
    )


def universal_sequence(dag: DependencyDag) -> UniversalSequence:
    """Universal sequence for any SIO or quasi-SIO dag."""
    label = _require(dag, (StructureClass.SIO, StructureClass.QUASI_SIO))
    if label.structure is StructureClass.SIO:
        return sio_universal(dag)
    return quasi_sio_universal(dag)


def direct_next_irrelevant(order: Sequence[int], dag: DependencyDag) -> Dict[int, int]:
    """min{k > j : order[k] unrelated to order[j]} by pairwise scan, len(order) if none."""
    return {order[j]: _scan_next_irrelevant(order, j, dag) for j in range(len(order))}


def canonical_form(selected: Iterable[int], universal: UniversalSequence, dag: DependencyDag) -> TransmissionSequence:
    """
    The universal order restricted to `selected`, after removing every frame with an
    unselected ancestor. Pruning is total, so any subset has a canonical form.
    """
    chosen = set(selected)
    kept = {f for f in chosen if dag.ancestors(f) <= chosen}
    pruned = chosen - kept
    if pruned:
        logger.debug(f"Canonical form pruned {len(pruned)} frames with missing ancestors: {sorted(pruned)}")
    return TransmissionSequence(tuple(f for f in universal.order if f in kept))


def check_canonical(seq: TransmissionSequence, dag: DependencyDag) -> CanonicalReport:
    order = list(seq.order)
    for a, early in enumerate(order):
        later = order[a + 1 :]
        for late in later:
            if late in dag.ancestors(early):
                return CanonicalReport(
                    ok=False,
                    violated_property=1,
                    pair=(late, early),
                    message=f"frame {late} is an ancestor of {early} but is scheduled after it",
                )

    for a, first in enumerate(order):
        d_first = dag.frame(first).deadline
        seen_related = False
        for second in order[a + 1 :]:
            if not dag.related(first, second):
                if dag.frame(second).deadline < d_first and not seen_related:
                    return CanonicalReport(
                        ok=False,
                        violated_property=2,
                        pair=(second, first),
                        message=(
                            f"irrelevant frames {first} and {second}: {second} has the earlier deadline "
                            f"but follows {first} with no frame related to {first} in between"
                        ),
                    )
            else:
                seen_related = True
    return CanonicalReport(ok=True)
