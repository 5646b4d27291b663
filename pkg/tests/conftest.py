from fractions import Fraction

import pytest

from core.dag import build_pattern, make_dag, strip_backward_edges
from core.models import Frame, FrameKind, LinkConfig
from core.traces import SynthParams, synth_instance

# (pattern, gops, trailing I-frame, strip backward edges): every shape stays at or under 9 frames
ORACLE_SHAPES = [
    ("G4B1", 1, True, False),
    ("G4B1", 2, False, False),
    ("G4B1", 2, False, True),
    ("G2B1", 2, True, False),
    ("G2B1", 3, False, False),
    ("G4B3", 1, True, False),
    ("G4B3", 2, False, False),
    ("G8B1", 1, False, False),
    ("G8B3", 1, True, False),
    ("G8B3", 1, True, True),
]


# hand-built quasi-SIO GOPs the dyadic builder never produces: (kinds, parents)
QUASI_SHAPES = {
    # P3 is unrelated to zeta = 2 and has the later deadline
    "late-sibling": ("IPBPI", {1: [0], 2: [1, 4], 3: [1]}),
    # two dual B-frames side by side under one P-frame
    "dual-pair": ("IPBBI", {1: [0], 2: [1, 4], 3: [1, 4]}),
    # three critical nodes, each hanging off its own P-frame
    "dual-triple": ("IPBPBPBI", {1: [0], 2: [1, 7], 3: [1], 4: [3, 7], 5: [3], 6: [5, 7]}),
}


@pytest.fixture
def quasi_shape():
    def build(name, sizes=None, deadlines=None, qualities=None):
        kinds, parents = QUASI_SHAPES[name]
        n = len(kinds)
        sizes = sizes or [1] * n
        deadlines = deadlines or [k + 1 for k in range(n)]
        qualities = qualities or [1] * n
        frames = [
            Frame(id=k, kind=FrameKind(kinds[k]), size_bits=sizes[k], deadline=deadlines[k], quality=Fraction(qualities[k]))
            for k in range(n)
        ]
        return make_dag(frames, parents)

    return build


@pytest.fixture
def g16b3():
    """One G16B3 GOP plus the next GOP's I-frame, so the tail B-run predicts backward."""
    return build_pattern("G16B3", 1, trailing_iframe=True)


@pytest.fixture
def g16b3_stripped(g16b3):
    return strip_backward_edges(g16b3)


@pytest.fixture
def g4b1_two():
    return build_pattern("G4B1", 2)


@pytest.fixture
def chain():
    """I followed by P-frames, each predicted from the previous frame."""

    def build(sizes, deadlines, qualities=None):
        qualities = qualities or [1] * len(sizes)
        frames = [
            Frame(
                id=k,
                kind=FrameKind.I if k == 0 else FrameKind.P,
                size_bits=sizes[k],
                deadline=deadlines[k],
                quality=Fraction(qualities[k]),
            )
            for k in range(len(sizes))
        ]
        return make_dag(frames, {k: [k - 1] for k in range(1, len(sizes))})

    return build


@pytest.fixture
def link_for():
    def build(dag, capacity=1):
        return LinkConfig.for_dag(dag, capacity)

    return build


@pytest.fixture
def tight_instance():
    """Desk-scale instance factory keyed by seed; the shape cycles through ORACLE_SHAPES."""

    def build(seed):
        pattern, gops, trailing, strip = ORACLE_SHAPES[seed % len(ORACLE_SHAPES)]
        params = SynthParams(
            pattern=pattern, gops=gops, regime="tight", trailing_iframe=trailing, strip_backward=strip
        )
        return synth_instance(seed, params)

    return build
