import argparse
import asyncio
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from core.codec import (
    baseline_to_dict,
    classify_to_dict,
    dumps,
    forest_to_dict,
    instance_to_dict,
    simulation_to_dict,
    solution_to_dict,
    universal_to_dict,
    universal_to_text,
)
from core.db import ResultStore
from core.dp import solve
from core.errors import ConfigError, VidSchedError
from core.experiments import compare, parse_capacities, parse_delays, rows_to_csv, sweep
from core.mbfs import build_forest, classify
from core.models import ExperimentConfig, Instance, LinkConfig, OracleLimits, TransmissionSequence
from core.oracle import brute_force
from core.simulator import simulate
from core.traces import SynthParams, load_instance, load_trace, synth_instance, with_delay
from core.universal import universal_sequence
from schedulers import ALGORITHMS, SCHEDULERS
from schedulers.pbedf import PbedfScheduler

# Load env
load_dotenv()

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False):
    level = "DEBUG" if verbose else os.getenv("VIDSCHED_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def open_store(db_path: Optional[str]) -> ResultStore:
    # Result store - supports optional enable via ENABLE_DATABASE env var
    path = db_path or os.getenv("VIDSCHED_RESULTS_DB")
    enabled = bool(db_path) or (
        bool(path) and os.getenv("ENABLE_DATABASE", "false").lower() in ("true", "1", "yes")
    )
    return ResultStore(path or "vidsched.db", enabled=enabled)


def _fraction(raw: str) -> Fraction:
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {raw!r}")


def _emit(payload) -> None:
    sys.stdout.write(dumps(payload).decode())
    sys.stdout.write("\n")


def _instance(args) -> Instance:
    instance = load_instance(args.instance)
    if getattr(args, "delay", None) is not None:
        instance = with_delay(instance, args.delay)
    logger.info(f"Loaded instance {args.instance}: {len(instance.dag)} frames")
    return instance


def _link(instance: Instance, capacity: int) -> LinkConfig:
    if capacity < 1:
        raise ConfigError(f"capacity must be a positive integer, got {capacity}")
    return LinkConfig.for_dag(
        instance.dag,
        capacity,
        slot_duration_s=instance.slot_duration_s,
        initial_delay_s=instance.initial_delay_s,
    )


def cmd_gen(args) -> int:
    params = SynthParams(
        pattern=args.pattern,
        gops=args.gops,
        regime=args.regime,
        trailing_iframe=args.trailing_iframe,
        strip_backward=args.strip,
        frame_count=args.frames,
        fps=args.fps,
        initial_delay_s=args.delay,
    )
    instance = synth_instance(args.seed, params)
    _emit(instance_to_dict(instance))
    return 0


def cmd_ingest(args) -> int:
    config = ExperimentConfig(
        fps=args.fps,
        initial_delay_s=args.delay,
        slot_duration_s=args.slot,
        pattern=args.pattern,
        frame_count=args.frames,
    )
    _emit(instance_to_dict(load_trace(args.trace, config)))
    return 0


def cmd_classify(args) -> int:
    label = classify(_instance(args).dag)
    logger.info(f"Structure: {label.structure.value}")
    _emit(classify_to_dict(label))
    return 0


def cmd_forest(args) -> int:
    _emit(forest_to_dict(build_forest(_instance(args).dag)))
    return 0


def cmd_universal(args) -> int:
    universal = universal_sequence(_instance(args).dag)
    if args.emit_universal:
        Path(args.emit_universal).write_text(universal_to_text(universal))
        logger.info(f"Wrote universal sequence to {args.emit_universal}")
    _emit(universal_to_dict(universal))
    return 0


def cmd_schedule(args) -> int:
    instance = _instance(args)
    link = _link(instance, args.capacity)
    if args.algo == "optimal":
        _emit(solution_to_dict(solve(instance.dag, link), instance.dag, link))
        return 0
    scheduler = PbedfScheduler(args.m) if args.algo == "pbedf" else SCHEDULERS[args.algo]()
    result = scheduler.run(instance.dag, link)
    logger.info(f"{scheduler.name}: reward {result.reward}")
    _emit(baseline_to_dict(result, link))
    return 0


def cmd_simulate(args) -> int:
    instance = _instance(args)
    try:
        order = tuple(int(x) for x in args.sequence.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"sequence must be a comma list of frame ids, got {args.sequence!r}")
    result = simulate(TransmissionSequence(order), instance.dag, _link(instance, args.capacity))
    _emit(simulation_to_dict(result))
    return 0


def cmd_oracle(args) -> int:
    instance = _instance(args)
    limits = OracleLimits(max_frames=args.max_frames, max_horizon=args.max_horizon, exhaustive=args.exhaustive)
    reward, seq = brute_force(instance.dag, _link(instance, args.capacity), limits)
    _emit({"reward": str(reward), "reward_float": float(reward), "sequence": list(seq.order)})
    return 0


def _sweep_rows(args):
    instance = load_instance(args.instance)
    capacities = parse_capacities(args.capacities) if args.capacities else None
    delays = parse_delays(args.delays)
    algos = [a.strip() for a in args.algos.split(",")] if args.algos else ALGORITHMS
    return asyncio.run(sweep(instance, delays, capacities, algos, store=open_store(args.db), threads=args.threads))


def cmd_sweep(args) -> int:
    sys.stdout.write(rows_to_csv(_sweep_rows(args)))
    return 0


def cmd_compare(args) -> int:
    _emit(compare(_sweep_rows(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidsched", description="Optimal frame scheduling for hierarchical video")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--db", help="persist sweep cells to this SQLite file")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a seeded synthetic instance")
    gen.add_argument("--pattern", default="G4B1")
    gen.add_argument("--gops", type=int, default=2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--regime", choices=("trace", "tight"), default="trace")
    gen.add_argument("--trailing-iframe", action="store_true")
    gen.add_argument("--strip", action="store_true", help="remove backward edges from next I-frames")
    gen.add_argument("--frames", type=int)
    gen.add_argument("--fps", type=_fraction, default=Fraction(30))
    gen.add_argument("--delay", type=_fraction, default=Fraction(1, 10))
    gen.set_defaults(func=cmd_gen)

    ingest = sub.add_parser("ingest", help="turn a trace CSV into an instance")
    ingest.add_argument("trace")
    ingest.add_argument("--pattern", default="G16B15")
    ingest.add_argument("--frames", type=int)
    ingest.add_argument("--fps", type=_fraction, default=Fraction(30))
    ingest.add_argument("--delay", type=_fraction, default=Fraction(1))
    ingest.add_argument("--slot", type=_fraction, default=Fraction(1, 1000))
    ingest.set_defaults(func=cmd_ingest)

    for name, func in (("classify", cmd_classify), ("forest", cmd_forest), ("universal", cmd_universal)):
        p = sub.add_parser(name)
        p.add_argument("instance")
        p.set_defaults(func=func)
        if name == "universal":
            p.add_argument("--emit-universal", metavar="PATH")

    schedule = sub.add_parser("schedule", help="schedule one instance at one capacity")
    schedule.add_argument("instance")
    schedule.add_argument("--capacity", type=int, required=True)
    schedule.add_argument("--delay", type=_fraction)
    schedule.add_argument("--algo", choices=ALGORITHMS, default="optimal")
    schedule.add_argument("--m", type=int, help="PBEDF block size (default: best over 1..N)")
    schedule.set_defaults(func=cmd_schedule)

    sim = sub.add_parser("simulate", help="replay a transmission sequence")
    sim.add_argument("instance")
    sim.add_argument("--sequence", required=True)
    sim.add_argument("--capacity", type=int, required=True)
    sim.add_argument("--delay", type=_fraction)
    sim.set_defaults(func=cmd_simulate)

    oracle = sub.add_parser("oracle", help="brute-force optimum of a small instance")
    oracle.add_argument("instance")
    oracle.add_argument("--capacity", type=int, required=True)
    oracle.add_argument("--delay", type=_fraction)
    oracle.add_argument("--exhaustive", action="store_true")
    oracle.add_argument("--max-frames", type=int, default=OracleLimits.max_frames)
    oracle.add_argument("--max-horizon", type=int, default=OracleLimits.max_horizon)
    oracle.set_defaults(func=cmd_oracle)

    for name, func in (("sweep", cmd_sweep), ("compare", cmd_compare)):
        p = sub.add_parser(name)
        p.add_argument("instance")
        p.add_argument("--capacities", help="a:b:step or comma list (default: 20 points up to the sweep endpoint)")
        p.add_argument("--delays", default="0.1,1,5")
        p.add_argument("--algos", help=f"comma list from {','.join(ALGORITHMS)}")
        p.add_argument("--threads", type=int)
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except VidSchedError as e:
        logger.error(f"{e.code}: {e.message}")
        _emit(e.to_dict())
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        _emit({"error": "internal", "message": str(e)})
        return 1


if __name__ == "__main__":
    sys.exit(main())
