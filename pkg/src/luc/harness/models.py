"""Independent reference models of the sample objects.

These share no code with :mod:`luc.objmodel`: each is a pure step function
over a hashable state, which is what the linearizability checker memoizes on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable

from ..objmodel import (
    CounterObject,
    QueueObject,
    SequentialObject,
    SortedSetObject,
    StackObject,
)

Step = Callable[[Hashable, str, tuple], "tuple[Hashable, Any]"]


@dataclass(frozen=True)
class ReferenceModel:
    name: str
    initial: Hashable
    step: Step

    def run(self, ops) -> list:
        state, out = self.initial, []
        for opcode, args in ops:
            state, ret = self.step(state, opcode, tuple(args))
            out.append(ret)
        return out


def _counter(state, opcode, args):
    if opcode != "fetch_inc":
        raise ValueError(opcode)
    return state + 1, state


def _stack(state, opcode, args):
    if opcode == "push":
        return state + (args[0],), True
    if opcode == "pop":
        return (state[:-1], state[-1]) if state else (state, None)
    raise ValueError(opcode)


def _queue(state, opcode, args):
    if opcode == "enqueue":
        return state + (args[0],), True
    if opcode == "dequeue":
        return (state[1:], state[0]) if state else (state, None)
    raise ValueError(opcode)


def _set(state, opcode, args):
    v = args[0]
    if opcode == "insert":
        return state | {v}, v not in state
    if opcode == "remove":
        return state - {v}, v in state
    if opcode == "contains":
        return state, v in state
    raise ValueError(opcode)


def model_for(obj: SequentialObject) -> ReferenceModel:
    if isinstance(obj, CounterObject):
        return ReferenceModel("counter", obj.start, _counter)
    if isinstance(obj, StackObject):
        # the stack object's initial iterable is pushed in order
        return ReferenceModel("stack", tuple(obj.initial), _stack)
    if isinstance(obj, QueueObject):
        return ReferenceModel("queue", tuple(obj.initial), _queue)
    if isinstance(obj, SortedSetObject):
        return ReferenceModel("set", frozenset(obj.initial), _set)
    raise TypeError(f"no reference model for {type(obj).__name__}")
