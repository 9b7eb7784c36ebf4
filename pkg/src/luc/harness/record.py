"""Recording concurrent histories from the runtime.

Thread mode runs one OS thread per process; events are stamped by a shared
atomic counter and merged afterwards. Step mode runs the same programs under
the step machine with a seeded random schedule.
"""

from __future__ import annotations

import itertools
import random
import sys
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..core import UniversalConstruction
from ..objmodel import RequestDescriptor, SequentialObject
from .history import INVOKE, RESPOND, HistoryEvent, validate
from .oracle import PhaseRecorder, PhaseTrace
from .stepper import random_chooser, run_schedule


@dataclass
class Workload:
    make_object: Callable[[], SequentialObject]
    programs: dict[int, Sequence[tuple[str, tuple]]]
    mode: str = "threads"
    seed: int = 0
    switch_interval: float = 1e-6
    # probability of switching process at each step in step mode
    switch_prob: float = 1.0
    runtime_cls: type = UniversalConstruction

    @property
    def n(self) -> int:
        return max(self.programs)


@dataclass
class Recording:
    history: list[HistoryEvent]
    traces: list[PhaseTrace]
    runtime: UniversalConstruction
    results: dict[int, list] = field(default_factory=dict)


def random_programs(obj: SequentialObject, n: int, total_ops: int, rng: random.Random,
                    mix: Optional[dict[str, float]] = None) -> dict[int, list[tuple[str, tuple]]]:
    progs: dict[int, list] = {pid: [] for pid in range(1, n + 1)}
    for k in range(total_ops):
        req = obj.random_request(rng, mix=mix)
        progs[1 + k % n].append((req.opcode, req.args))
    return progs


@contextmanager
def switch_interval(seconds: float):
    old = sys.getswitchinterval()
    sys.setswitchinterval(seconds)
    try:
        yield
    finally:
        sys.setswitchinterval(old)


def record_history(workload: Workload) -> Recording:
    obj = workload.make_object()
    recorder = PhaseRecorder()
    rt = workload.runtime_cls(workload.n, obj, observer=recorder)
    programs = {pid: [RequestDescriptor(op, tuple(args), pid) for op, args in ops]
                for pid, ops in workload.programs.items()}
    if workload.mode == "steps":
        system = run_schedule(rt, programs, random_chooser(workload.seed, workload.switch_prob))
        history, results = system.history, system.results
    elif workload.mode == "threads":
        history, results = _run_threads(rt, programs, workload.switch_interval)
    else:
        raise ValueError(f"unknown mode {workload.mode!r}")
    validate(history)
    return Recording(history, recorder.ordered(), rt, results)


def _run_threads(rt: UniversalConstruction, programs, interval: float):
    ticket = itertools.count()
    logs: dict[int, list[HistoryEvent]] = {pid: [] for pid in programs}
    results: dict[int, list] = {pid: [] for pid in programs}
    start = threading.Barrier(len(programs))
    errors: list[BaseException] = []

    def worker(pid: int) -> None:
        log, out = logs[pid], results[pid]
        try:
            start.wait()
            for req in programs[pid]:
                log.append(HistoryEvent(INVOKE, pid, req.opcode, req.args, order=next(ticket),
                                        time=time.perf_counter_ns(), req=req))
                ret = rt.apply_op(pid, req)
                log.append(HistoryEvent(RESPOND, pid, req.opcode, value=ret, order=next(ticket),
                                        time=time.perf_counter_ns(), req=req))
                out.append(ret)
        except BaseException as exc:  # noqa: BLE001 - re-raised in the caller
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(pid,)) for pid in programs]
    with switch_interval(interval):
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if errors:
        raise errors[0]
    history = sorted((ev for log in logs.values() for ev in log), key=lambda ev: ev.order)
    return history, results
