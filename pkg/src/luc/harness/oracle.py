"""Phase traces and the phase-order replay oracle.

Each successful publication of the agreement record closes a phase and
carries the batch of requests it applied. Ordering batches by phase number,
and requests inside a batch by process id, yields a sequential execution
that must reproduce every recorded return value.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from ..core import Observer
from ..objmodel import RequestDescriptor
from .history import INVOKE, HistoryEvent, operations
from .models import ReferenceModel


@dataclass
class PhaseTrace:
    seq: int
    batch: list[tuple[int, RequestDescriptor, Any]]
    publisher: int


class PhaseRecorder(Observer):
    """Collects one :class:`PhaseTrace` per successful publication."""

    def __init__(self) -> None:
        self.traces: list[PhaseTrace] = []
        self._lock = threading.Lock()

    def published(self, pid, ls, tmp, batch, ok):
        if ok:
            trace = PhaseTrace(tmp.seq, list(batch), pid)
            with self._lock:
                self.traces.append(trace)

    def ordered(self) -> list[PhaseTrace]:
        return sorted(self.traces, key=lambda t: t.seq)


@dataclass
class OracleReport:
    ok: bool
    problems: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def replay_phase_oracle(traces: list[PhaseTrace], model: ReferenceModel,
                        history: Optional[list[HistoryEvent]] = None) -> OracleReport:
    """Replay every batch in phase order against ``model`` and compare returns.

    With ``history`` given, also require that each completed operation was
    applied in exactly one phase and returned that phase's value, and that
    the phase order respects real time: an operation that responded before
    another was invoked comes first. Together these make the phase order a
    linearization witness.
    """
    problems: list[str] = []
    traces = sorted(traces, key=lambda t: t.seq)
    for expected, t in enumerate(traces, 1):
        if t.seq != expected:
            problems.append(f"phase numbers not contiguous: expected {expected}, got {t.seq}")
            break
    state = model.initial
    applied: dict[int, Any] = {}
    position: dict[int, int] = {}
    for t in traces:
        pids = [q for q, _, _ in t.batch]
        if pids != sorted(set(pids)):
            problems.append(f"phase {t.seq}: batch pids not strictly increasing: {pids}")
        for q, req, recorded in t.batch:
            state, ret = model.step(state, req.opcode, tuple(req.args))
            if ret != recorded:
                problems.append(f"phase {t.seq}: pid {q} {req} recorded {recorded!r}, replay gives {ret!r}")
            key = id(req)
            if key in applied:
                problems.append(f"phase {t.seq}: pid {q} {req} applied more than once")
            applied[key] = recorded
            position[key] = len(position)
    if history is not None:
        for op in operations(history):
            if not op.complete or op.req is None:
                continue
            if id(op.req) not in applied:
                problems.append(f"pid {op.pid} {op.req} returned but was never applied")
            elif applied[id(op.req)] != op.value:
                problems.append(f"pid {op.pid} {op.req} returned {op.value!r} "
                                f"but its phase recorded {applied[id(op.req)]!r}")
        problems.extend(_real_time_problems(history, position))
    return OracleReport(not problems, problems)


def _real_time_problems(history: list[HistoryEvent], position: dict[int, int]) -> list[str]:
    problems = []
    latest_done = -1  # largest position among operations that already responded
    floor: dict[int, int] = {}
    for ev in history:
        if ev.req is None:
            continue
        key = id(ev.req)
        if ev.kind == INVOKE:
            floor[key] = latest_done
        elif key in position:
            if position[key] <= floor.get(key, -1):
                problems.append(f"pid {ev.pid} {ev.req} ordered before an operation that "
                                f"finished before it started")
            latest_done = max(latest_done, position[key])
    return problems
