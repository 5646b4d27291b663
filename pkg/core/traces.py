"""
Video trace ingestion, deadline derivation, instance files and the seeded generator.

Trace CSV columns: display_index,kind,size_bits,quality. The dependency edges are not
part of the trace; they come from the declared GnBm pattern.
"""
import csv
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from core.codec import dumps, instance_from_dict, instance_to_dict, loads
from core.dag import build_dyadic, parse_pattern, strip_backward_edges, with_metadata
from core.errors import ConfigError, PatternError, TraceFormatError
from core.models import DependencyDag, ExperimentConfig, FrameKind, Instance, TraceRecord

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("display_index", "kind", "size_bits", "quality")

PathLike = Union[str, Path]


def deadline_slot(display_index: int, fps: Fraction, initial_delay_s: Fraction, slot_duration_s: Fraction) -> int:
    """floor((initial delay + index / fps) / slot duration)."""
    return math.floor((Fraction(initial_delay_s) + Fraction(display_index) / Fraction(fps)) / Fraction(slot_duration_s))


def derive_deadlines(count: int, fps: Fraction, initial_delay_s: Fraction, slot_duration_s: Fraction) -> List[int]:
    if Fraction(slot_duration_s) > 1 / Fraction(fps):
        logger.warning(f"Slot {slot_duration_s}s is longer than a frame period; deadlines may tie")
    return [deadline_slot(k, fps, initial_delay_s, slot_duration_s) for k in range(count)]


def read_records(path: PathLike) -> List[TraceRecord]:
    path = Path(path)
    if not path.is_file():
        raise TraceFormatError(f"trace {path} does not exist", path=str(path))
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise TraceFormatError(f"trace {path} is empty", path=str(path))
        if tuple(name.strip() for name in reader.fieldnames) != TRACE_COLUMNS:
            raise TraceFormatError(
                f"trace header must be {','.join(TRACE_COLUMNS)}, got {','.join(reader.fieldnames)}",
                path=str(path),
            )
        records = []
        for line, row in enumerate(reader, start=2):
            try:
                record = TraceRecord(
                    display_index=int(row["display_index"]),
                    kind=FrameKind(row["kind"].strip().upper()),
                    size_bits=int(row["size_bits"]),
                    quality=Fraction(row["quality"].strip()),
                )
            except (TypeError, ValueError, AttributeError, ZeroDivisionError) as e:
                raise TraceFormatError(f"malformed trace row at line {line}: {e}", path=str(path), line=line)
            if record.size_bits <= 0:
                raise TraceFormatError(f"non-positive size at line {line}", path=str(path), line=line)
            if record.quality < 0:
                raise TraceFormatError(f"negative quality at line {line}", path=str(path), line=line)
            records.append(record)

    if not records:
        raise TraceFormatError(f"trace {path} has no frames", path=str(path))
    indices = [r.display_index for r in records]
    if indices != list(range(len(records))):
        raise TraceFormatError(f"display indices in {path} are not contiguous from 0", path=str(path))
    return records


def save_trace(records: Sequence[TraceRecord], path: PathLike) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in records:
            writer.writerow([r.display_index, r.kind.value, r.size_bits, str(r.quality)])


def records_from_dag(dag: DependencyDag) -> List[TraceRecord]:
    return [TraceRecord(f.id, f.kind, f.size_bits, f.quality) for f in dag.frames]


def structure_for(pattern: str, count: int) -> DependencyDag:
    """GnBm structure with exactly `count` frames, truncated from whole GOPs."""
    n, m = parse_pattern(pattern)
    return build_dyadic(n, m, count // n + 1, frame_count=count)


def build_instance(records: Sequence[TraceRecord], config: ExperimentConfig) -> Instance:
    if config.frame_count is not None:
        if len(records) < config.frame_count:
            raise TraceFormatError(f"trace has {len(records)} frames, config asks for {config.frame_count}")
        records = records[: config.frame_count]

    shape = structure_for(config.pattern, len(records))
    for r, f in zip(records, shape.frames):
        if r.kind is not f.kind:
            raise PatternError(
                f"frame {r.display_index} is {r.kind.value} in the trace but {f.kind.value} in {config.pattern}",
                frame=r.display_index,
            )

    deadlines = derive_deadlines(len(records), config.fps, config.initial_delay_s, config.slot_duration_s)
    dag = with_metadata(
        shape,
        sizes=[r.size_bits for r in records],
        deadlines=deadlines,
        qualities=[r.quality for r in records],
    )
    return Instance(
        dag=dag,
        pattern=config.pattern,
        fps=config.fps,
        slot_duration_s=config.slot_duration_s,
        initial_delay_s=config.initial_delay_s,
    )


def load_trace(path: PathLike, config: Optional[ExperimentConfig] = None) -> Instance:
    config = config or ExperimentConfig()
    instance = build_instance(read_records(path), config)
    logger.info(f"Loaded trace {path}: {len(instance.dag)} frames, pattern {config.pattern}")
    return instance


def with_delay(instance: Instance, initial_delay_s: Fraction) -> Instance:
    """Same instance with deadlines re-derived for another initial playback delay."""
    deadlines = derive_deadlines(len(instance.dag), instance.fps, initial_delay_s, instance.slot_duration_s)
    return replace(instance, dag=with_metadata(instance.dag, deadlines=deadlines), initial_delay_s=Fraction(initial_delay_s))


def load_instance(path: PathLike) -> Instance:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise TraceFormatError(f"cannot read instance {path}: {e.strerror}", path=str(path))
    return instance_from_dict(loads(raw))


def save_instance(instance: Instance, path: PathLike) -> None:
    Path(path).write_bytes(dumps(instance_to_dict(instance)))


@dataclass(frozen=True)
class SynthParams:
    pattern: str = "G4B1"
    gops: int = 2
    regime: str = "trace"  # trace | tight
    trailing_iframe: bool = False
    strip_backward: bool = False
    frame_count: Optional[int] = None
    fps: Fraction = Fraction(30)
    initial_delay_s: Fraction = Fraction(1, 10)
    slot_duration_s: Fraction = Fraction(1, 1000)


# (low, high) bits and Y-PSNR hundredths per frame type, trace regime
TRACE_SIZES = {FrameKind.I: (40_000, 90_000), FrameKind.P: (12_000, 35_000), FrameKind.B: (2_000, 12_000)}
TRACE_PSNR = {FrameKind.I: (3_800, 4_300), FrameKind.P: (3_500, 3_900), FrameKind.B: (3_100, 3_600)}

TIGHT_MAX_FRAMES = 9
TIGHT_MAX_HORIZON = 24


def _check_params(params: SynthParams) -> None:
    if params.regime not in ("trace", "tight"):
        raise ConfigError(f"unknown synth regime {params.regime!r}")
    if params.gops < 1:
        raise ConfigError(f"need at least one GOP, got {params.gops}")


def synth_instance(seed: int, params: Optional[SynthParams] = None) -> Instance:
    """
    Seeded instance generator. The `trace` regime draws trace-like sizes and Y-PSNR
    values with deadlines from fps and delay; the `tight` regime draws small integer
    sizes, qualities and deadlines for brute-force comparisons.
    """
    params = params or SynthParams()
    _check_params(params)
    n, m = parse_pattern(params.pattern)
    shape = build_dyadic(n, m, params.gops, trailing_iframe=params.trailing_iframe, frame_count=params.frame_count)
    if params.strip_backward:
        shape = strip_backward_edges(shape)
    count = len(shape)
    rng = np.random.default_rng(seed)

    if params.regime == "trace":
        sizes = [int(rng.integers(*TRACE_SIZES[f.kind])) for f in shape.frames]
        qualities = [Fraction(int(rng.integers(*TRACE_PSNR[f.kind])), 100) for f in shape.frames]
        deadlines = derive_deadlines(count, params.fps, params.initial_delay_s, params.slot_duration_s)
    else:
        if count > TIGHT_MAX_FRAMES:
            raise ConfigError(f"tight regime supports at most {TIGHT_MAX_FRAMES} frames, got {count}")
        sizes = [int(s) for s in rng.integers(1, 7, size=count)]
        qualities = [Fraction(int(a), int(b)) for a, b in zip(rng.integers(0, 6, size=count), rng.integers(1, 4, size=count))]
        gaps = rng.integers(1, 3, size=count)
        first = int(rng.integers(0, 4))
        deadlines = [first + int(x) for x in np.cumsum(gaps) - gaps[0]]
        if deadlines[-1] > TIGHT_MAX_HORIZON:
            raise ConfigError(f"tight regime horizon {deadlines[-1]} exceeds {TIGHT_MAX_HORIZON}")

    dag = with_metadata(shape, sizes=sizes, deadlines=deadlines, qualities=qualities)
    logger.debug(f"Synthesized {params.regime} instance seed={seed}: {count} frames")
    return Instance(
        dag=dag,
        pattern=params.pattern,
        fps=params.fps,
        slot_duration_s=params.slot_duration_s,
        initial_delay_s=params.initial_delay_s,
    )
