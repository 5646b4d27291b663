"""
MBFS forest construction, SIO / quasi-SIO classification and critical nodes.

The MBFS (modified breadth first search) differs from BFS in two ways: a child is
picked only once every one of its parents has been visited (it is decodable), and the
picked children are taken in ascending deadline order.
"""
import logging
from collections import deque
from typing import Dict, List, Optional, Tuple

from core.dag import partition_gops, strip_backward_edges
from core.errors import InvalidDagError, UnsupportedStructure
from core.models import (
    ClassLabel,
    CriticalNodes,
    DependencyDag,
    FrameKind,
    GopPartition,
    MbfsTree,
    StructureClass,
)

logger = logging.getLogger(__name__)


def mbfs(dag: DependencyDag, root: int) -> MbfsTree:
    if dag.frame(root).kind is not FrameKind.I:
        raise InvalidDagError(f"MBFS root {root} is not an I-frame", frame=root)

    tree = MbfsTree(root=root, children={root: []})
    visited = set()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        visited.add(u)
        for v in sorted(dag.children[u], key=lambda c: dag.frame(c).deadline):
            if v in tree.children:
                continue
            # decodable: every parent already dequeued (u itself included)
            if all(p in visited for p in dag.parents[v]):
                tree.children[u].append(v)
                tree.children[v] = []
                tree.parent_in_tree[v] = u
                queue.append(v)

    _fill_ranges(tree, dag)
    return tree


def _fill_ranges(tree: MbfsTree, dag: DependencyDag) -> None:
    for node in reversed(tree.preorder()):
        d = dag.frame(node).deadline
        lo, hi, size = d, d, 1
        for c in tree.children[node]:
            lo = min(lo, tree.min_dln[c])
            hi = max(hi, tree.max_dln[c])
            size += tree.subtree_size[c]
        tree.min_dln[node] = lo
        tree.max_dln[node] = hi
        tree.subtree_size[node] = size


def build_forest(dag: DependencyDag, partition: Optional[GopPartition] = None) -> List[MbfsTree]:
    """
    One MBFS tree per I-frame, in display order, built on the backward-edge-stripped dag.

    Every tree must cover its GOP exactly; a frame that never becomes decodable from its
    own I-frame is reported instead of being attached by some fallback rule.
    """
    stripped = strip_backward_edges(dag)
    partition = partition or partition_gops(dag)
    forest = []
    for g, root in enumerate(partition.gop_starts):
        tree = mbfs(stripped, root)
        expected = partition.non_i[g] | {root}
        covered = set(tree.children)
        if covered != expected:
            missing = sorted(expected - covered)
            extra = sorted(covered - expected)
            raise UnsupportedStructure(
                f"MBFS tree rooted at {root} does not cover its GOP",
                witness=f"missing={missing} extra={extra}",
                node=(missing or extra)[0],
            )
        forest.append(tree)
    logger.debug(f"Built MBFS forest: {len(forest)} trees over {len(dag)} frames")
    return forest


def forest_index(forest: List[MbfsTree]) -> Dict[int, MbfsTree]:
    return {node: tree for tree in forest for node in tree.children}


def _sequential_violation(dag: DependencyDag, forest: List[MbfsTree]) -> Optional[Tuple[str, int]]:
    index = forest_index(forest)
    for fid in dag.ids:
        path = set(index[fid].root_path(fid))
        off_path = sorted(dag.ancestors(fid) - path)
        if off_path:
            return f"frame {fid}: ancestor {off_path[0]} is not on its MBFS root path", fid
    return None


def _order_violation(dag: DependencyDag, forest: List[MbfsTree]) -> Optional[Tuple[str, int]]:
    for tree in forest:
        for node in tree.nodes:
            kids = tree.children[node]
            for a, b in zip(kids, kids[1:]):
                if tree.max_dln[a] >= tree.min_dln[b]:
                    return (
                        f"node {node}: max_dln(T({a}))={tree.max_dln[a]} >= "
                        f"min_dln(T({b}))={tree.min_dln[b]}",
                        node,
                    )
    return None


def classify(dag: DependencyDag) -> ClassLabel:
    try:
        forest = build_forest(dag)
    except UnsupportedStructure as e:
        return ClassLabel(StructureClass.NEITHER, witness=f"{e.message}: {e.witness}", node=e.node)

    ordered = _order_violation(dag, forest)
    if ordered is not None:
        return ClassLabel(StructureClass.NEITHER, witness=ordered[0], node=ordered[1])

    if _sequential_violation(dag, forest) is None:
        return ClassLabel(StructureClass.SIO)

    stripped = _sequential_violation(strip_backward_edges(dag), forest)
    if stripped is None:
        return ClassLabel(StructureClass.QUASI_SIO)
    return ClassLabel(StructureClass.NEITHER, witness=stripped[0], node=stripped[1])


def critical_nodes(dag: DependencyDag, forest: List[MbfsTree], partition: GopPartition) -> CriticalNodes:
    gammas = []
    zetas = []
    for g, tree in enumerate(forest):
        dual = partition.dual[g]
        gamma = frozenset(f for f in dual if not (set(tree.root_path(f)[:-1]) & dual))
        gammas.append(gamma)
        zetas.append(min(gamma, key=lambda f: dag.frame(f).deadline) if gamma else None)
    return CriticalNodes(gamma=tuple(gammas), zeta=tuple(zetas))


def is_deadline_bst(tree: MbfsTree, dag: DependencyDag) -> bool:
    """At most two children, left subtree strictly earlier and right subtree strictly later."""
    for node in tree.nodes:
        kids = tree.children[node]
        d = dag.frame(node).deadline
        if len(kids) > 2:
            return False
        if len(kids) == 2:
            left, right = kids
            if not (tree.max_dln[left] < d < tree.min_dln[right]):
                return False
        if len(kids) == 1:
            (only,) = kids
            if not (tree.max_dln[only] < d or tree.min_dln[only] > d):
                return False
    return True
