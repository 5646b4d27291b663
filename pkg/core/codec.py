"""
JSON and text dumps. Rationals are written as exact strings with a float alongside.
"""
from fractions import Fraction
from typing import Any, Dict, List

import orjson

from core.dag import make_dag
from core.errors import TraceFormatError
from core.models import (
    BaselineResult,
    ClassLabel,
    DependencyDag,
    DpSolution,
    ExperimentConfig,
    Frame,
    FrameKind,
    Instance,
    LinkConfig,
    MbfsTree,
    SimulationResult,
    UniversalSequence,
)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS


def dumps(payload: Any) -> bytes:
    return orjson.dumps(payload, option=JSON_OPTIONS)


def loads(raw) -> Any:
    try:
        return orjson.loads(raw)
    except orjson.JSONDecodeError as e:
        raise TraceFormatError(f"invalid JSON: {e}")


def rational(value) -> str:
    return str(Fraction(value))


def parse_rational(value) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise TraceFormatError(f"not a rational number: {value!r}")


def dag_to_dict(dag: DependencyDag) -> Dict[str, Any]:
    return {
        "frames": [
            {
                "id": f.id,
                "kind": f.kind.value,
                "size_bits": f.size_bits,
                "deadline": f.deadline,
                "quality": rational(f.quality),
            }
            for f in dag.frames
        ],
        "edges": [[p, c] for p, c in dag.edges()],
    }


def dag_from_dict(doc: Dict[str, Any]) -> DependencyDag:
    try:
        frames = [
            Frame(
                id=int(row["id"]),
                kind=FrameKind(row["kind"]),
                size_bits=int(row["size_bits"]),
                deadline=int(row["deadline"]),
                quality=parse_rational(row.get("quality", 1)),
            )
            for row in doc["frames"]
        ]
        parents: Dict[int, List[int]] = {}
        for p, c in doc.get("edges", []):
            parents.setdefault(int(c), []).append(int(p))
    except (KeyError, TypeError, ValueError) as e:
        raise TraceFormatError(f"malformed dag document: {e!r}")
    return make_dag(frames, parents)


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    doc = dag_to_dict(instance.dag)
    doc.update(
        {
            "pattern": instance.pattern,
            "fps": rational(instance.fps),
            "slot_duration_s": rational(instance.slot_duration_s),
            "initial_delay_s": rational(instance.initial_delay_s),
        }
    )
    return doc


def instance_from_dict(doc: Dict[str, Any]) -> Instance:
    if not isinstance(doc, dict):
        raise TraceFormatError("instance document must be a JSON object")
    defaults = ExperimentConfig()
    return Instance(
        dag=dag_from_dict(doc),
        pattern=doc.get("pattern"),
        fps=parse_rational(doc.get("fps", defaults.fps)),
        slot_duration_s=parse_rational(doc.get("slot_duration_s", defaults.slot_duration_s)),
        initial_delay_s=parse_rational(doc.get("initial_delay_s", defaults.initial_delay_s)),
    )


def forest_to_dict(forest: List[MbfsTree]) -> Dict[str, Any]:
    return {
        "trees": [
            {
                "root": tree.root,
                "preorder": tree.preorder(),
                "nodes": [
                    {
                        "id": node,
                        "children": list(tree.children[node]),
                        "min_dln": tree.min_dln[node],
                        "max_dln": tree.max_dln[node],
                        "subtree_size": tree.subtree_size[node],
                    }
                    for node in tree.nodes
                ],
            }
            for tree in forest
        ]
    }


def classify_to_dict(label: ClassLabel) -> Dict[str, Any]:
    return {"structure": label.structure.value, "witness": label.witness, "node": label.node}


def universal_to_dict(universal: UniversalSequence) -> Dict[str, Any]:
    return {
        "structure": universal.structure.value,
        "order": list(universal.order),
        "next_irrelevant": {str(k): v for k, v in sorted(universal.next_irrelevant.items())},
        "resume": {str(k): v for k, v in sorted(universal.resume.items())},
    }


def universal_to_text(universal: UniversalSequence) -> str:
    return "".join(f"{fid}\n" for fid in universal.order)


def _schedule_rows(simulation: SimulationResult) -> List[Dict[str, Any]]:
    return [
        {"frame": row.frame, "start": row.start, "end": row.end, "status": row.status.value}
        for row in simulation.schedule
    ]


def simulation_to_dict(simulation: SimulationResult) -> Dict[str, Any]:
    return {
        "reward": rational(simulation.reward),
        "reward_float": float(simulation.reward),
        "schedule": _schedule_rows(simulation),
        "status": {str(k): v.value for k, v in sorted(simulation.status.items())},
    }


def solution_to_dict(solution: DpSolution, dag: DependencyDag, link: LinkConfig) -> Dict[str, Any]:
    schedule = []
    for fid, start in solution.schedule:
        schedule.append(
            {
                "frame": fid,
                "start": start,
                "end": start + link.slots(dag.frame(fid).size_bits),
                "status": solution.status[fid].value,
            }
        )
    return {
        "algo": "optimal",
        "structure": solution.structure.value,
        "capacity": link.capacity_bits_per_slot,
        "reward": rational(solution.optimal_reward),
        "reward_float": float(solution.optimal_reward),
        "evaluations": solution.evaluations,
        "schedule": schedule,
        "status": {str(k): v.value for k, v in sorted(solution.status.items())},
    }


def baseline_to_dict(result: BaselineResult, link: LinkConfig) -> Dict[str, Any]:
    doc = simulation_to_dict(result.simulation) if result.simulation is not None else {}
    doc.update(
        {
            "algo": result.name.lower(),
            "capacity": link.capacity_bits_per_slot,
            "reward": rational(result.reward),
            "reward_float": float(result.reward),
            "sequence": list(result.sequence.order),
        }
    )
    if result.pbedf_m is not None:
        doc["pbedf_m"] = result.pbedf_m
    return doc
