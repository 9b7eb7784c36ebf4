"""Command-line entry points: ``luc-bench`` and ``luc-harness``.

Both exit with status 0 exactly when every enabled check passed, 1 when a
check failed and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import random
import sys
from typing import Optional, Sequence

from .bench import VARIANTS, BenchConfig, ConfigError, cross_count, emit_csv, parse_mix, run_bench
from .harness.checker import SearchExhausted, check_linearizable
from .harness.explore import ExploreConfig, explore_schedules
from .harness.history import save
from .harness.models import model_for
from .harness.oracle import replay_phase_oracle
from .harness.record import Workload, random_programs, record_history
from .objmodel import OBJECTS, make_object

# histories longer than this are checked by the phase-order witness only
CHECKER_MAX_OPS = 64


def _line(name: str, ok: bool, detail: str = "") -> str:
    return f"{name:24s} {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")


def bench_main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="luc-bench", description="Shared accesses per operation and throughput.")
    ap.add_argument("--variant", choices=VARIANTS, default="luc")
    ap.add_argument("--object", choices=sorted(OBJECTS), default="counter")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--ops", type=int, default=1000, help="operations per thread")
    ap.add_argument("--mix", default=None, help="opcode weights, e.g. push=0.5,pop=0.5")
    ap.add_argument("--think-us", default="0",
                    help="think time between ops: N, const:N, exp:MEAN or uniform:LO:HI "
                         "(microseconds; global steps with --mode steps)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count-steps", action="store_true", help="count shared accesses per operation")
    ap.add_argument("--mode", choices=("threads", "steps"), default="threads")
    ap.add_argument("--key-range", type=int, default=None, help="set object key range")
    ap.add_argument("--cross-check", action="store_true",
                    help="also count at the primitive layer and compare with the call-site count")
    ap.add_argument("--csv", default=None, help="write one row per operation")
    args = ap.parse_args(argv)

    object_args = {"key_range": args.key_range} if args.key_range is not None else {}
    try:
        config = BenchConfig(object=args.object, threads=args.threads, ops=args.ops, mix=parse_mix(args.mix),
                             think=args.think_us, variant=args.variant, seed=args.seed,
                             count_steps=args.count_steps or args.mode == "steps" or bool(args.csv),
                             mode=args.mode, object_args=object_args)
        result = run_bench(config)
    except ConfigError as exc:
        print(f"luc-bench: {exc}", file=sys.stderr)
        return 2

    print(result.summary())
    ok = True
    if config.count_steps:
        hist_total = sum(a * c for a, c in result.histogram.items())
        good = hist_total == result.total_counted
        ok &= good
        print(_line("histogram_total", good, f"{hist_total} vs {result.total_counted} counted"))
        hist = " ".join(f"{a}:{c}" for a, c in sorted(result.histogram.items()))
        print(f"histogram {hist}")
    if args.cross_check:
        site, prim = cross_count(BenchConfig(object=args.object, threads=args.threads, ops=min(args.ops, 500),
                                             mix=config.mix, variant=args.variant, seed=args.seed,
                                             object_args=object_args))
        good = site == prim
        ok &= good
        print(_line("cross_count", good, f"call sites {dict(site)} primitives {dict(prim)}"))
    if args.csv:
        emit_csv(result, args.csv)
    return 0 if ok else 1


def _explore_programs(obj_name: str, procs: int, per_proc: int, seed: int) -> dict:
    rng = random.Random(seed)
    obj = make_object(obj_name)
    return {pid: [(r.opcode, r.args) for r in (obj.random_request(rng) for _ in range(per_proc))]
            for pid in range(1, procs + 1)}


def _object_factory(name: str, initial: Optional[Sequence[int]]):
    kw = {}
    if initial:
        if name == "counter":
            kw["start"] = initial[0]
        else:
            kw["initial"] = tuple(initial)
    make_object(name, **kw)  # fail early on bad arguments
    return lambda: make_object(name, **kw)


def harness_main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="luc-harness", description="Correctness checks for the construction.")
    mode = ap.add_mutually_exclusive_group(required=True)
    mode.add_argument("--explore", action="store_true", help="enumerate schedules on the step machine")
    mode.add_argument("--stress", action="store_true", help="record a history from a random workload")
    ap.add_argument("--object", choices=sorted(OBJECTS), default="counter")
    ap.add_argument("--initial", default="", help="comma-separated initial contents (counter: start value)")
    ap.add_argument("--procs", type=int, default=2)
    ap.add_argument("--ops-per-proc", type=int, default=1)
    ap.add_argument("--budget", type=int, default=100_000, help="maximum schedules to explore")
    ap.add_argument("--preemptions", type=int, default=2, help="preemption bound for the exhaustive phase")
    ap.add_argument("--random", type=int, default=0, help="random schedules after the exhaustive phase")
    ap.add_argument("--threads", type=int, default=4)
    ap.add_argument("--ops", type=int, default=1000, help="total operations (stress)")
    ap.add_argument("--step-mode", action="store_true", help="stress on the step machine instead of threads")
    ap.add_argument("--check", action="store_true", help="verify the recorded history")
    ap.add_argument("--history", default=None, help="save the recorded history here")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        initial = [int(x) for x in args.initial.split(",") if x.strip()]
    except ValueError:
        print(f"luc-harness: bad --initial {args.initial!r}", file=sys.stderr)
        return 2
    factory = _object_factory(args.object, initial)

    if args.explore:
        if args.procs < 1 or args.ops_per_proc < 1:
            print("luc-harness: --procs and --ops-per-proc must be positive", file=sys.stderr)
            return 2
        config = ExploreConfig(factory, _explore_programs(args.object, args.procs, args.ops_per_proc, args.seed),
                               preemption_bound=args.preemptions, random_schedules=args.random,
                               budget=args.budget, seed=args.seed)
        report = explore_schedules(config)
        for line in report.lines():
            print(line)
        return 0 if report.ok else 1

    if args.threads < 1 or args.ops < 0:
        print("luc-harness: --threads must be positive and --ops non-negative", file=sys.stderr)
        return 2
    obj = factory()
    programs = random_programs(obj, args.threads, args.ops, random.Random(args.seed))
    rec = record_history(Workload(factory, programs, mode="steps" if args.step_mode else "threads",
                                  seed=args.seed))
    print(f"recorded {len(rec.history)} events in {len(rec.traces)} phases")
    if args.history:
        save(rec.history, args.history)
    if not args.check:
        return 0
    model = model_for(obj)
    report = replay_phase_oracle(rec.traces, model, rec.history)
    print(_line("phase_order_witness", report.ok, "; ".join(report.problems[:3])))
    ok = report.ok
    if args.ops <= CHECKER_MAX_OPS:
        try:
            good = bool(check_linearizable(rec.history, model))
            print(_line("linearizable", good))
        except SearchExhausted as exc:
            good = False
            print(_line("linearizable", False, f"inconclusive: {exc}"))
        ok &= good
    else:
        print(f"{'linearizable':24s} SKIP  more than {CHECKER_MAX_OPS} operations; witness check above applies")
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(harness_main())
