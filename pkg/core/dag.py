"""
Frames, their prediction DAG, GOP partitioning and the hierarchical dyadic GnBm generator.
"""
import logging
import re
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from core.errors import InvalidDagError, PatternError
from core.models import DependencyDag, Frame, FrameKind, GopPartition

logger = logging.getLogger(__name__)

PATTERN_RE = re.compile(r"^G(\d+)B(\d+)$")


def make_dag(frames: Iterable[Frame], parents: Mapping[int, Iterable[int]], validate: bool = True) -> DependencyDag:
    ordered = tuple(sorted(frames, key=lambda f: f.id))
    frozen = {f.id: frozenset(parents.get(f.id, ())) for f in ordered}
    dag = DependencyDag(frames=ordered, parents=frozen)
    if validate:
        validate_dag(dag)
    return dag


def validate_dag(dag: DependencyDag) -> None:
    """Raise InvalidDagError on the first broken structural invariant."""
    ids = dag.ids
    if ids != list(range(len(ids))):
        raise InvalidDagError(f"frame ids must be contiguous display indices from 0, got {ids[:5]}...")

    for prev, cur in zip(dag.frames, dag.frames[1:]):
        # Ties are rejected: every strict-inequality argument on deadlines relies on it.
        if cur.deadline <= prev.deadline:
            raise InvalidDagError(
                f"deadlines must strictly increase in display order: "
                f"d[{prev.id}]={prev.deadline}, d[{cur.id}]={cur.deadline}",
                frame=cur.id,
            )

    for f in dag.frames:
        if f.size_bits <= 0:
            raise InvalidDagError(f"frame {f.id} has non-positive size {f.size_bits}", frame=f.id)
        if f.quality < 0:
            raise InvalidDagError(f"frame {f.id} has negative quality {f.quality}", frame=f.id)
        if f.deadline < 0:
            raise InvalidDagError(f"frame {f.id} has negative deadline {f.deadline}", frame=f.id)

        ps = dag.parents.get(f.id, frozenset())
        unknown = [p for p in ps if p not in dag.by_id]
        if unknown:
            raise InvalidDagError(f"frame {f.id} references unknown parents {unknown}", frame=f.id)
        before = [p for p in ps if p < f.id]
        after = [p for p in ps if p > f.id]
        if f.kind is FrameKind.I and ps:
            raise InvalidDagError(f"I-frame {f.id} must not have parents", frame=f.id)
        if f.kind is FrameKind.P:
            if len(ps) != 1 or len(before) != 1 or dag.frame(before[0]).kind is FrameKind.B:
                raise InvalidDagError(f"P-frame {f.id} needs exactly one preceding non-B parent", frame=f.id)
        if f.kind is FrameKind.B:
            if not ps or len(ps) > 2 or len(before) > 1 or len(after) > 1:
                raise InvalidDagError(
                    f"B-frame {f.id} needs at most one preceding and one succeeding parent", frame=f.id
                )

    if dag.frames and dag.frames[0].kind is not FrameKind.I:
        raise InvalidDagError("sequence must start with an I-frame", frame=0)

    if not nx.is_directed_acyclic_graph(dag.graph):
        raise InvalidDagError("dependency graph has a cycle")

    # GOP locality: parents live in the frame's GOP or are the GOP's own/next I-frame.
    starts = dag.i_frames
    gop_of = _gop_index(dag)
    for f in dag.frames:
        g = gop_of[f.id]
        for p in dag.parents[f.id]:
            if gop_of[p] == g:
                continue
            if g + 1 < len(starts) and p == starts[g + 1]:
                continue
            raise InvalidDagError(f"frame {f.id} depends on {p} outside its GOP", frame=f.id)


def _gop_index(dag: DependencyDag) -> Dict[int, int]:
    out: Dict[int, int] = {}
    g = -1
    for f in dag.frames:
        if f.kind is FrameKind.I:
            g += 1
        out[f.id] = max(g, 0)
    return out


def parse_pattern(pattern: str) -> Tuple[int, int]:
    match = PATTERN_RE.match(pattern.strip().upper())
    if not match:
        raise PatternError(f"pattern must look like GnBm, got {pattern!r}")
    n, m = int(match.group(1)), int(match.group(2))
    _check_pattern(n, m)
    return n, m


def _check_pattern(n: int, m: int) -> None:
    if n < 1 or n & (n - 1):
        raise PatternError(f"GOP size {n} is not a power of 2")
    if m < 0 or (m + 1) & m:
        raise PatternError(f"B-run length {m} is not of the form 2^w - 1")
    if n % (m + 1):
        raise PatternError(f"m+1={m + 1} does not divide n={n}")


def _dyadic_edges(i: int, j: int) -> List[Tuple[int, int]]:
    span = abs(i - j)
    if span <= 1 or span & (span - 1):
        return []
    mid = (i + j) // 2
    return [(i, mid), (j, mid)] + _dyadic_edges(i, mid) + _dyadic_edges(mid, j)


def dyadic_build(i: int, j: int, dag: DependencyDag) -> DependencyDag:
    """
    Add midpoint-recursion B dependencies between frames i and j.

    Spans that are not a power of two (or are at most 1) add nothing. Endpoints missing
    from `dag` (e.g. an absent next I-frame) are omitted, so the midpoint keeps only the
    parent that exists.
    """
    parents: Dict[int, Set[int]] = {fid: set(ps) for fid, ps in dag.parents.items()}
    for parent, child in _dyadic_edges(i, j):
        if parent in parents and child in parents:
            parents[child].add(parent)
    return make_dag(dag.frames, parents, validate=False)


def build_dyadic(
    n: int,
    m: int,
    num_gops: int,
    trailing_iframe: bool = False,
    frame_count: Optional[int] = None,
) -> DependencyDag:
    """
    Generate a GnBm hierarchical dyadic structure.

    Each GOP has a leading I-frame, n/(m+1) - 1 P-frames chained on the previous non-B
    frame, and B-runs filled by dyadic_build. The tail run of a GOP predicts backward from
    the next GOP's I-frame when it exists. `trailing_iframe` appends the next GOP's
    I-frame after the last GOP; `frame_count` truncates the sequence (edges into removed
    frames are dropped). Metadata is placeholder: size 1, quality 1, deadline = id.
    """
    _check_pattern(n, m)
    if num_gops < 1:
        raise PatternError(f"need at least one GOP, got {num_gops}")

    total = n * num_gops + (1 if trailing_iframe else 0)
    if frame_count is not None:
        if frame_count < 1 or frame_count > total:
            raise PatternError(f"frame_count {frame_count} outside 1..{total}")
        total = frame_count

    step = m + 1
    kinds: List[FrameKind] = []
    for fid in range(total):
        pos = fid % n
        if pos == 0:
            kinds.append(FrameKind.I)
        elif pos % step == 0:
            kinds.append(FrameKind.P)
        else:
            kinds.append(FrameKind.B)

    parents: Dict[int, Set[int]] = {fid: set() for fid in range(total)}
    for gop in range(num_gops + 1):
        base = gop * n
        if base >= total:
            break
        anchors = list(range(base, base + n + 1, step))  # non-B frames bounding each B-run
        for prev, nxt in zip(anchors, anchors[1:]):
            if nxt < total and kinds[nxt] is FrameKind.P:
                parents[nxt].add(prev)
            for parent, child in _dyadic_edges(prev, nxt):
                if child < total and parent < total:
                    parents[child].add(parent)

    frames = [Frame(id=fid, kind=kinds[fid], size_bits=1, deadline=fid, quality=Fraction(1)) for fid in range(total)]
    dag = make_dag(frames, parents)
    logger.debug(f"Built G{n}B{m} x{num_gops}: {len(dag)} frames, {len(dag.edges())} edges")
    return dag


def build_pattern(pattern: str, num_gops: int, **kwargs) -> DependencyDag:
    n, m = parse_pattern(pattern)
    return build_dyadic(n, m, num_gops, **kwargs)


def backward_edges(dag: DependencyDag) -> List[Tuple[int, int]]:
    """Edges I_{i+1} -> frame of GOP_i, i.e. I-frames predicting earlier frames."""
    return [(p, c) for p, c in dag.edges() if p > c and dag.frame(p).kind is FrameKind.I]


def strip_backward_edges(dag: DependencyDag) -> DependencyDag:
    removed = set(backward_edges(dag))
    if not removed:
        return dag
    parents = {c: frozenset(p for p in ps if (p, c) not in removed) for c, ps in dag.parents.items()}
    return DependencyDag(frames=dag.frames, parents=parents)


def partition_gops(dag: DependencyDag) -> GopPartition:
    if not dag.frames or dag.frames[0].kind is not FrameKind.I:
        raise InvalidDagError("sequence must start with an I-frame", frame=0)

    starts = tuple(dag.i_frames)
    gop_of = _gop_index(dag)
    non_i: List[Set[int]] = [set() for _ in starts]
    for f in dag.frames:
        if f.kind is not FrameKind.I:
            non_i[gop_of[f.id]].add(f.id)

    dual: List[FrozenSet[int]] = []
    for g, start in enumerate(starts):
        if g + 1 >= len(starts):
            dual.append(frozenset())
            continue
        both = dag.descendants(start) & dag.descendants(starts[g + 1])
        dual.append(frozenset(both & non_i[g]))

    return GopPartition(
        gop_starts=starts,
        gop_of=gop_of,
        non_i=tuple(frozenset(s) for s in non_i),
        dual=tuple(dual),
    )


def with_metadata(
    dag: DependencyDag,
    sizes: Optional[Sequence[int]] = None,
    deadlines: Optional[Sequence[int]] = None,
    qualities: Optional[Sequence[Fraction]] = None,
) -> DependencyDag:
    """Copy of `dag` with per-frame sizes, deadlines and/or qualities replaced."""
    frames = []
    for f in dag.frames:
        frames.append(
            Frame(
                id=f.id,
                kind=f.kind,
                size_bits=int(sizes[f.id]) if sizes is not None else f.size_bits,
                deadline=int(deadlines[f.id]) if deadlines is not None else f.deadline,
                quality=Fraction(qualities[f.id]) if qualities is not None else f.quality,
            )
        )
    return make_dag(frames, dag.parents)


def complete_sequences(dag: DependencyDag) -> List[Tuple[int, int]]:
    """
    Spans i..j whose interior is a non-empty run of B-frames with every parent inside
    the span, i.e. the sub-runs produced by dyadic_build.
    """
    spans = []
    n = len(dag)
    for i in range(n):
        for j in range(i + 2, n):
            if dag.frame(j - 1).kind is not FrameKind.B:
                break
            inside = set(range(i, j + 1))
            if all(dag.parents[k] <= inside for k in range(i + 1, j)):
                spans.append((i, j))
    return spans


def decode_order(dag: DependencyDag) -> List[int]:
    """A valid decoding order: deadline-keyed lexicographic topological sort."""
    return list(nx.lexicographical_topological_sort(dag.graph, key=lambda fid: dag.frame(fid).deadline))


