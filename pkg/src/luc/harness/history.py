"""Concurrent histories: events, well-formedness, and the line-oriented file format.

One event per line, global order implicit in line order::

    INV <pid> <opcode> <arg>...
    RES <pid> <value>

Values are written as ``nil``, ``true``, ``false`` or a decimal integer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from ..objmodel import RequestDescriptor

INVOKE = "invoke"
RESPOND = "respond"


class MalformedHistory(ValueError):
    pass


@dataclass
class HistoryEvent:
    kind: str
    pid: int
    opcode: Optional[str] = None
    args: tuple = ()
    value: Any = None
    order: int = 0
    # step-clock timestamp (step mode) or perf_counter_ns (thread mode)
    time: int = 0
    req: Optional[RequestDescriptor] = field(default=None, repr=False, compare=False)


@dataclass
class Operation:
    """An invocation paired with its response (``ret_index`` is None if pending)."""

    index: int
    pid: int
    opcode: str
    args: tuple
    inv_index: int
    ret_index: Optional[int] = None
    value: Any = None
    req: Optional[RequestDescriptor] = None

    @property
    def complete(self) -> bool:
        return self.ret_index is not None


def format_value(v: Any) -> str:
    if v is None:
        return "nil"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, int):
        return str(v)
    raise ValueError(f"value {v!r} has no history encoding")


def parse_value(tok: str) -> Any:
    if tok == "nil":
        return None
    if tok == "true":
        return True
    if tok == "false":
        return False
    return int(tok)


def dumps(history: Iterable[HistoryEvent]) -> str:
    lines = []
    for ev in history:
        if ev.kind == INVOKE:
            lines.append(" ".join(["INV", str(ev.pid), ev.opcode, *map(format_value, ev.args)]))
        else:
            lines.append(f"RES {ev.pid} {format_value(ev.value)}")
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str) -> list[HistoryEvent]:
    events: list[HistoryEvent] = []
    open_ops: dict[int, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        try:
            tag, pid = parts[0], int(parts[1])
            if tag == "INV":
                ev = HistoryEvent(INVOKE, pid, parts[2], tuple(map(parse_value, parts[3:])))
                open_ops[pid] = parts[2]
            elif tag == "RES" and len(parts) == 3:
                ev = HistoryEvent(RESPOND, pid, open_ops.get(pid), value=parse_value(parts[2]))
            else:
                raise ValueError(tag)
        except (IndexError, ValueError) as exc:
            raise MalformedHistory(f"line {lineno}: {line!r}") from exc
        ev.order = len(events)
        events.append(ev)
    validate(events)
    return events


def save(history: Iterable[HistoryEvent], path) -> None:
    Path(path).write_text(dumps(history))


def load(path) -> list[HistoryEvent]:
    return loads(Path(path).read_text())


def validate(history: list[HistoryEvent]) -> None:
    """Raise :class:`MalformedHistory` unless each pid alternates invoke/respond."""
    open_pids: set[int] = set()
    last_order = -1
    for ev in history:
        if ev.order <= last_order:
            raise MalformedHistory(f"event order not increasing at {ev}")
        last_order = ev.order
        if ev.kind == INVOKE:
            if ev.pid in open_pids:
                raise MalformedHistory(f"pid {ev.pid} invoked twice without a response")
            open_pids.add(ev.pid)
        elif ev.kind == RESPOND:
            if ev.pid not in open_pids:
                raise MalformedHistory(f"pid {ev.pid} responded without an invocation")
            open_pids.discard(ev.pid)
        else:
            raise MalformedHistory(f"unknown event kind {ev.kind!r}")


def operations(history: list[HistoryEvent]) -> list[Operation]:
    validate(history)
    ops: list[Operation] = []
    open_op: dict[int, Operation] = {}
    for i, ev in enumerate(history):
        if ev.kind == INVOKE:
            op = Operation(len(ops), ev.pid, ev.opcode, tuple(ev.args), i, req=ev.req)
            ops.append(op)
            open_op[ev.pid] = op
        else:
            op = open_op.pop(ev.pid)
            op.ret_index = i
            op.value = ev.value
    return ops
