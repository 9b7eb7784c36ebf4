"""Systematic schedule exploration with invariant probes.

Every schedule is a sequence of scheduling decisions, one per shared step.
The explorer walks the tree of decisions depth-first and enumerates every
schedule with at most ``preemption_bound`` preemptions (switching away from
a process that could have continued). With the bound at or above the number
of steps this is full enumeration; otherwise it is the usual bounded
exhaustive search, followed by ``random_schedules`` seeded random schedules.
The total is capped by ``budget``.

Each schedule is checked with the probes of :mod:`luc.harness.probes`, the
phase-order oracle (which also establishes exactly-once application) and
the linearizability checker.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..core import UniversalConstruction
from ..objmodel import RequestDescriptor, SequentialObject
from .checker import SearchExhausted, check_linearizable
from .models import model_for
from .oracle import replay_phase_oracle
from .probes import ProbeObserver
from .stepper import (
    ProcessCrashed,
    StepLimitExceeded,
    StepSystem,
    random_chooser,
    scripted_chooser,
    sequential_chooser,
)

PROBES = (
    "toggle_parity",
    "no_pending_at_announce",
    "phase_counter",
    "item_stamp",
    "two_publications",
    "applied_after_attempt",
    "write_set_determinism",
    "exactly_once",
    "linearizable",
    "completes",
)


class BudgetExceeded(RuntimeError):
    def __init__(self, report: "ExploreReport") -> None:
        super().__init__(f"schedule budget exhausted after {report.schedules} schedules")
        self.report = report


@dataclass
class ExploreConfig:
    make_object: Callable[[], SequentialObject]
    programs: dict[int, Sequence[tuple[str, tuple]]]
    preemption_bound: Optional[int] = 2
    random_schedules: int = 0
    budget: int = 1_000_000
    seed: int = 0
    max_steps: int = 20_000
    runtime_cls: type = UniversalConstruction
    stop_at_first: bool = False
    raise_on_budget: bool = False

    @property
    def n(self) -> int:
        return max(self.programs)


@dataclass
class Counterexample:
    schedule: list[int]
    failures: list[str]

    def schedule_string(self) -> str:
        return ",".join(map(str, self.schedule))


@dataclass
class ExploreReport:
    schedules: int = 0
    exhaustive_schedules: int = 0
    random_schedules: int = 0
    tree_exhausted: bool = False
    budget_hit: bool = False
    max_depth: int = 0
    failures_by_probe: Counter = field(default_factory=Counter)
    counterexamples: list[Counterexample] = field(default_factory=list)
    seconds: float = 0.0
    preemption_bound: Optional[int] = None

    @property
    def ok(self) -> bool:
        return not self.failures_by_probe

    def lines(self) -> list[str]:
        out = []
        for probe in PROBES:
            bad = self.failures_by_probe.get(probe, 0)
            status = "PASS" if bad == 0 else "FAIL"
            line = f"{probe:24s} schedules={self.schedules:<8d} {status}"
            if bad:
                cx = next((c for c in self.counterexamples
                           if any(f.startswith(probe) for f in c.failures)), None)
                if cx:
                    line += f" counterexample={cx.schedule_string()}"
            out.append(line)
        if self.preemption_bound is None:
            cov = "random only"
        elif self.tree_exhausted:
            cov = f"all schedules with <= {self.preemption_bound} preemptions"
        else:
            cov = f"partial (budget hit below {self.preemption_bound} preemptions)"
        out.append(f"coverage: {cov} ({self.exhaustive_schedules} tree + {self.random_schedules} random), "
                   f"max depth {self.max_depth}, {self.seconds:.1f}s")
        return out


def run_one(config: ExploreConfig, choose) -> tuple[StepSystem, list[str]]:
    """Run a single schedule and return the system plus every probe failure."""
    obj = config.make_object()
    rt = config.runtime_cls(config.n, obj)
    probe = ProbeObserver().bind(rt)
    programs = {pid: [RequestDescriptor(op, tuple(args), pid) for op, args in ops]
                for pid, ops in config.programs.items()}
    system = StepSystem(rt, programs, max_steps=config.max_steps, after_step=probe.check_step)
    failures: list[str] = []
    try:
        system.run(choose)
    except StepLimitExceeded as exc:
        failures.append(f"completes: {exc}")
    except ProcessCrashed as exc:
        failures.append(f"completes: {exc}")
    finally:
        system.close()
    failures.extend(probe.finish())
    if not any(f.startswith("completes") for f in failures):
        model = model_for(obj)
        oracle = replay_phase_oracle(probe.traces, model, system.history)
        failures.extend(f"exactly_once: {p}" for p in oracle.problems)
        try:
            if not check_linearizable(system.history, model):
                failures.append("linearizable: history rejected")
        except SearchExhausted as exc:
            failures.append(f"linearizable: inconclusive ({exc})")
    return system, failures


@dataclass
class _Node:
    enabled: tuple
    last: Optional[int]
    preemptions: int  # preemptions before this decision
    chosen: int
    tried: set


def _preempts(node: _Node, pid: int) -> int:
    return int(node.last is not None and node.last in node.enabled and pid != node.last)


def explore_schedules(config: ExploreConfig) -> ExploreReport:
    report = ExploreReport(preemption_bound=config.preemption_bound)
    t0 = time.perf_counter()

    def record(system: StepSystem, failures: list[str]) -> None:
        report.schedules += 1
        report.max_depth = max(report.max_depth, len(system.choices))
        if failures:
            for probe in {f.split(":", 1)[0] for f in failures}:
                report.failures_by_probe[probe] += 1
            if len(report.counterexamples) < 10:
                report.counterexamples.append(Counterexample(list(system.choices), failures))

    def out_of_budget() -> bool:
        if report.schedules >= config.budget:
            report.budget_hit = True
            return True
        return config.stop_at_first and not report.ok

    if config.preemption_bound is not None:
        stack: list[_Node] = []
        prefix: list[int] = []
        while not out_of_budget():
            system, failures = run_one(config, scripted_chooser(prefix, sequential_chooser))
            record(system, failures)
            report.exhaustive_schedules += 1
            for d in range(len(stack), len(system.choices)):
                last = system.choices[d - 1] if d else None
                before = stack[-1].preemptions + _preempts(stack[-1], stack[-1].chosen) if stack else 0
                stack.append(_Node(system.enabled_log[d], last, before, system.choices[d],
                                   {system.choices[d]}))
            prefix = None
            while stack:
                node = stack[-1]
                alts = [p for p in node.enabled if p not in node.tried
                        and node.preemptions + _preempts(node, p) <= config.preemption_bound]
                if alts:
                    node.chosen = alts[0]
                    node.tried.add(alts[0])
                    prefix = [nd.chosen for nd in stack]
                    break
                stack.pop()
            if prefix is None:
                report.tree_exhausted = True
                break

    for i in range(config.random_schedules):
        if out_of_budget():
            break
        system, failures = run_one(config, random_chooser(config.seed + i))
        record(system, failures)
        report.random_schedules += 1

    report.seconds = time.perf_counter() - t0
    if report.budget_hit and config.raise_on_budget:
        raise BudgetExceeded(report)
    return report
