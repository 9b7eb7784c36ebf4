"""Deterministic step machine: every shared access of the runtime is a yield point.

Each process runs its program of requests inside its own greenlet. The
runtime hook switches back to the scheduler *before* each shared primitive,
so one scheduling decision executes exactly one step of one process. Local
computation between steps is free, matching the step-complexity accounting.

Processes may think between operations: ``think(pid, k)`` gives the number
of global steps process ``pid`` idles before invoking its ``k``-th request.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from greenlet import greenlet

from ..core import UniversalConstruction
from ..objmodel import RequestDescriptor
from .history import INVOKE, RESPOND, HistoryEvent

Chooser = Callable[[list, Optional[int], "StepSystem"], int]


class StepLimitExceeded(RuntimeError):
    pass


class ProcessCrashed(RuntimeError):
    def __init__(self, pid: int, exc: BaseException) -> None:
        super().__init__(f"process {pid} raised {exc!r}")
        self.pid = pid
        self.exc = exc


@dataclass
class StepRecord:
    pid: int
    kind: str
    cost: int


@dataclass
class StepSystem:
    runtime: UniversalConstruction
    programs: dict[int, Sequence[RequestDescriptor]]
    think: Optional[Callable[[int, int], int]] = None
    max_steps: int = 1_000_000
    after_step: Optional[Callable[["StepSystem", StepRecord], None]] = None

    clock: int = field(init=False, default=0)
    history: list[HistoryEvent] = field(init=False, default_factory=list)
    steps: list[StepRecord] = field(init=False, default_factory=list)
    choices: list[int] = field(init=False, default_factory=list)
    enabled_log: list[tuple] = field(init=False, default_factory=list)
    results: dict[int, list] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        self.runtime.hook = self._hook
        self._main = greenlet.getcurrent()
        self._procs = {pid: greenlet(self._body, parent=self._main) for pid in sorted(self.programs)}
        self._poised: dict[int, StepRecord] = {}
        self._sleep_until: dict[int, int] = {}
        self._done: set[int] = set()
        self._started = False

    # -- process side ---------------------------------------------------------

    def _body(self, pid: int) -> None:
        out = self.results.setdefault(pid, [])
        for k, req in enumerate(self.programs[pid]):
            idle = self.think(pid, k) if self.think else 0
            if idle > 0:
                self._sleep_until[pid] = self.clock + idle
                self._main.switch()
            self._event(INVOKE, pid, req.opcode, req.args, req=req)
            ret = self.runtime.apply_op(pid, req)
            out.append(ret)
            self._event(RESPOND, pid, req.opcode, value=ret, req=req)

    def _hook(self, pid: int, kind: str, cost: int) -> None:
        self._poised[pid] = StepRecord(pid, kind, cost)
        self._main.switch()

    def _event(self, kind, pid, opcode, args=(), value=None, req=None) -> None:
        self.history.append(HistoryEvent(kind, pid, opcode, tuple(args), value,
                                         order=len(self.history), time=self.clock, req=req))

    # -- scheduler side -------------------------------------------------------

    def _advance(self, pid: int) -> None:
        """Resume ``pid`` until it is poised at its next step, sleeps, or finishes."""
        self._poised.pop(pid, None)
        self._sleep_until.pop(pid, None)
        g = self._procs[pid]
        try:
            if g.dead:
                return
            g.switch(pid) if not g else g.switch()
        except BaseException as exc:  # noqa: BLE001 - surfaced to the caller
            raise ProcessCrashed(pid, exc) from exc
        if g.dead:
            self._done.add(pid)

    def _wake_sleepers(self) -> None:
        for pid in sorted(self._sleep_until):
            if self._sleep_until.get(pid, self.clock + 1) <= self.clock:
                self._advance(pid)

    def enabled(self) -> list[int]:
        return sorted(self._poised)

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for pid in sorted(self._procs):
            self._advance(pid)
        self._wake_sleepers()

    def finished(self) -> bool:
        return len(self._done) == len(self._procs)

    def step(self, pid: int) -> StepRecord:
        rec = self._poised[pid]
        self.steps.append(rec)
        self.choices.append(pid)
        self.clock += 1
        if self.clock > self.max_steps:
            raise StepLimitExceeded(f"more than {self.max_steps} steps")
        self._advance(pid)
        if self.after_step is not None:
            self.after_step(self, rec)
        self._wake_sleepers()
        return rec

    def run(self, choose: Chooser) -> "StepSystem":
        self.start()
        last: Optional[int] = None
        while True:
            enabled = self.enabled()
            if not enabled:
                if self.finished():
                    return self
                # everybody left is thinking: jump the clock to the next wake-up
                self.clock = min(self._sleep_until.values())
                self._wake_sleepers()
                continue
            self.enabled_log.append(tuple(enabled))
            pid = choose(enabled, last, self)
            self.step(pid)
            last = pid

    def close(self) -> None:
        for g in self._procs.values():
            if not g.dead:
                g.throw()


# -- choosers ------------------------------------------------------------------

def random_chooser(seed: int, switch_prob: float = 1.0) -> Chooser:
    """Uniform choice among poised processes; with ``switch_prob`` < 1 the last
    process keeps running with probability ``1 - switch_prob``."""
    rng = random.Random(seed)

    def choose(enabled, last, system):
        if last in enabled and rng.random() >= switch_prob:
            return last
        return rng.choice(enabled)

    return choose


def sequential_chooser(enabled, last, system):
    return last if last in enabled else enabled[0]


def round_robin_chooser(enabled, last, system):
    if last is None:
        return enabled[0]
    later = [p for p in enabled if p > last]
    return later[0] if later else enabled[0]


def scripted_chooser(prefix: Sequence[int], then: Chooser = sequential_chooser) -> Chooser:
    """Follow ``prefix`` decision by decision, then fall back to ``then``."""

    def choose(enabled, last, system):
        d = len(system.choices)
        if d < len(prefix):
            pid = prefix[d]
            if pid not in enabled:
                raise ValueError(f"schedule picks {pid} at decision {d} but only {enabled} are enabled")
            return pid
        return then(enabled, last, system)

    return choose


def run_schedule(runtime: UniversalConstruction, programs, choose: Chooser, **kwargs) -> StepSystem:
    system = StepSystem(runtime, programs, **kwargs)
    try:
        return system.run(choose)
    finally:
        system.close()
