from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import networkx as nx


class FrameKind(str, Enum):
    I = "I"
    P = "P"
    B = "B"


class FrameStatus(str, Enum):
    SUCCESSFUL = "successful"
    UNSUCCESSFUL = "transmitted-unsuccessful"
    DROPPED = "dropped"


class StructureClass(str, Enum):
    SIO = "SIO"
    QUASI_SIO = "quasi-SIO"
    NEITHER = "neither"


@dataclass(frozen=True)
class Frame:
    id: int  # display index, 0-based
    kind: FrameKind
    size_bits: int
    deadline: int  # timeslots
    quality: Fraction = Fraction(1)


@dataclass(frozen=True)
class DependencyDag:
    """
    Frames in display order plus their direct dependencies.

    `parents[l]` holds every frame l' with l' -> l. The dag is immutable; derived views
    (children, ancestors, the networkx graph) are computed once and cached.
    """

    frames: Tuple[Frame, ...]
    parents: Mapping[int, FrozenSet[int]]

    def __len__(self) -> int:
        return len(self.frames)

    @cached_property
    def by_id(self) -> Dict[int, Frame]:
        return {f.id: f for f in self.frames}

    def frame(self, frame_id: int) -> Frame:
        return self.by_id[frame_id]

    @property
    def ids(self) -> List[int]:
        return [f.id for f in self.frames]

    @cached_property
    def children(self) -> Dict[int, Tuple[int, ...]]:
        out: Dict[int, List[int]] = {f.id: [] for f in self.frames}
        for child in sorted(self.parents):
            for parent in self.parents[child]:
                out[parent].append(child)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.ids)
        g.add_edges_from(self.edges())
        return g

    @cached_property
    def topological_order(self) -> Tuple[int, ...]:
        return tuple(nx.topological_sort(self.graph))

    @cached_property
    def _ancestors(self) -> Dict[int, FrozenSet[int]]:
        return {fid: frozenset(nx.ancestors(self.graph, fid)) for fid in self.ids}

    @cached_property
    def _descendants(self) -> Dict[int, FrozenSet[int]]:
        return {fid: frozenset(nx.descendants(self.graph, fid)) for fid in self.ids}

    def ancestors(self, frame_id: int) -> FrozenSet[int]:
        return self._ancestors[frame_id]

    def descendants(self, frame_id: int) -> FrozenSet[int]:
        return self._descendants[frame_id]

    def related(self, a: int, b: int) -> bool:
        return a == b or a in self._ancestors[b] or b in self._ancestors[a]

    def edges(self) -> List[Tuple[int, int]]:
        """(parent, child) pairs ordered by child then parent."""
        return [(p, c) for c in sorted(self.parents) for p in sorted(self.parents[c])]

    @property
    def i_frames(self) -> List[int]:
        return [f.id for f in self.frames if f.kind is FrameKind.I]

    @property
    def horizon(self) -> int:
        return max((f.deadline for f in self.frames), default=0)

    @property
    def total_quality(self) -> Fraction:
        return sum((f.quality for f in self.frames), Fraction(0))


@dataclass(frozen=True)
class GopPartition:
    gop_starts: Tuple[int, ...]
    gop_of: Mapping[int, int]
    non_i: Tuple[FrozenSet[int], ...]  # N_i
    dual: Tuple[FrozenSet[int], ...]  # D_i: descendants of both I_i and I_{i+1}

    @property
    def merged(self) -> Tuple[FrozenSet[int], ...]:
        """M_i = N_i plus the next I-frame."""
        out = []
        for i, n_i in enumerate(self.non_i):
            nxt = self.next_iframe(i)
            out.append(n_i | {nxt} if nxt is not None else n_i)
        return tuple(out)

    def next_iframe(self, gop: int) -> Optional[int]:
        return self.gop_starts[gop + 1] if gop + 1 < len(self.gop_starts) else None


@dataclass
class MbfsTree:
    root: int
    children: Dict[int, List[int]] = field(default_factory=dict)
    parent_in_tree: Dict[int, int] = field(default_factory=dict)
    min_dln: Dict[int, int] = field(default_factory=dict)
    max_dln: Dict[int, int] = field(default_factory=dict)
    subtree_size: Dict[int, int] = field(default_factory=dict)

    @property
    def nodes(self) -> List[int]:
        return sorted(self.children)

    def root_path(self, node: int) -> List[int]:
        """Nodes from the root down to `node`, both included."""
        path = [node]
        while path[-1] != self.root:
            path.append(self.parent_in_tree[path[-1]])
        return path[::-1]

    def preorder(self) -> List[int]:
        out: List[int] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(self.children[node]))
        return out


@dataclass(frozen=True)
class ClassLabel:
    structure: StructureClass
    witness: Optional[str] = None
    node: Optional[int] = None


@dataclass(frozen=True)
class CriticalNodes:
    gamma: Tuple[FrozenSet[int], ...]
    zeta: Tuple[Optional[int], ...]


@dataclass(frozen=True)
class TransmissionSequence:
    order: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            from core.errors import ScheduleError

            raise ScheduleError(f"duplicate frames in sequence {list(self.order)}")

    @property
    def selected(self) -> FrozenSet[int]:
        return frozenset(self.order)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)


@dataclass(frozen=True)
class UniversalSequence:
    order: Tuple[int, ...]
    structure: StructureClass
    position: Mapping[int, int]
    next_irrelevant: Mapping[int, int]
    next_iframe: Mapping[int, int]
    resume: Mapping[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class LinkConfig:
    capacity_bits_per_slot: int
    horizon: int
    slot_duration_s: Fraction = Fraction(1, 1000)
    initial_delay_s: Fraction = Fraction(0)

    def slots(self, size_bits: int) -> int:
        """Timeslots needed to send `size_bits` one-by-one: ceil(S / C)."""
        return -(-size_bits // self.capacity_bits_per_slot)

    @classmethod
    def for_dag(cls, dag: DependencyDag, capacity: int, **kwargs) -> "LinkConfig":
        return cls(capacity_bits_per_slot=capacity, horizon=dag.horizon, **kwargs)


@dataclass(frozen=True)
class ScheduledFrame:
    frame: int
    start: int
    end: int
    status: FrameStatus


@dataclass(frozen=True)
class SimulationResult:
    reward: Fraction
    status: Mapping[int, FrameStatus]
    finish_times: Mapping[int, int]
    schedule: Tuple[ScheduledFrame, ...] = ()

    @property
    def successful(self) -> List[int]:
        return sorted(k for k, v in self.status.items() if v is FrameStatus.SUCCESSFUL)


@dataclass(frozen=True)
class DpSolution:
    optimal_reward: Fraction
    schedule: Tuple[Tuple[int, int], ...]  # (frame, start_slot), ascending start
    status: Mapping[int, FrameStatus]
    structure: StructureClass
    evaluations: int = 0

    @property
    def sequence(self) -> TransmissionSequence:
        return TransmissionSequence(tuple(f for f, _ in self.schedule))

    @property
    def start_times(self) -> Dict[int, int]:
        return dict(self.schedule)


@dataclass(frozen=True)
class BaselineResult:
    name: str
    reward: Fraction
    sequence: TransmissionSequence
    pbedf_m: Optional[int] = None
    simulation: Optional[SimulationResult] = None


@dataclass(frozen=True)
class TraceRecord:
    display_index: int
    kind: FrameKind
    size_bits: int
    quality: Fraction


@dataclass(frozen=True)
class ExperimentConfig:
    fps: Fraction = Fraction(30)
    initial_delay_s: Fraction = Fraction(1)
    slot_duration_s: Fraction = Fraction(1, 1000)
    pattern: str = "G16B15"
    frame_count: Optional[int] = None


@dataclass(frozen=True)
class OracleLimits:
    max_frames: int = 9
    max_horizon: int = 24
    exhaustive: bool = False  # also enumerate orders that violate ancestor-first


@dataclass(frozen=True)
class Instance:
    """A dag plus the timing parameters its deadlines were derived from."""

    dag: DependencyDag
    pattern: Optional[str] = None
    fps: Fraction = Fraction(30)
    slot_duration_s: Fraction = Fraction(1, 1000)
    initial_delay_s: Fraction = Fraction(1)


@dataclass(frozen=True)
class CanonicalReport:
    ok: bool
    violated_property: Optional[int] = None
    pair: Optional[Tuple[int, int]] = None
    message: str = ""


@dataclass(frozen=True)
class SweepRow:
    algo: str
    delay: Fraction
    capacity: int
    reward: Fraction
    frames_successful: int
    frame_count: int

    @property
    def avg_quality(self) -> Fraction:
        """Reward per frame, the average Y-PSNR proxy."""
        return self.reward / self.frame_count if self.frame_count else Fraction(0)


@dataclass(frozen=True)
class NonMonotoneWitness:
    seed: int
    instance: Instance
    low_capacity: int
    high_capacity: int
    low_reward: Fraction
    high_reward: Fraction
