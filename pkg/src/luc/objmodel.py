"""Sequential objects and the mediated-access contract they are written against.

A sequential object never touches memory directly. Every request runs as
plain Python code against an :class:`AccessContext` that offers three
operations:

``read(x)``
    ``x`` is a root name (``str``) or a handle returned by ``alloc``.
``write(x, value)``
    Same addressing as ``read``.
``alloc()``
    Returns a handle to a fresh variable whose value is ``None``.

Values are ``None`` (nil), ``int`` (``bool`` included), handles, or tuples of
handles. A linked node is two variables, a value cell and a next cell, and
the node itself is referred to by the pair ``(value_handle, next_handle)``.

Object authors must keep ``dispatch`` deterministic: the same request fed the
same sequence of read results must produce the same accesses, the same
written values and the same return value. All state that outlives a request
lives in variables; objects hold no mutable attributes.
"""

from __future__ import annotations

from collections import Counter as _Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

__all__ = [
    "Value",
    "RequestDescriptor",
    "AccessContext",
    "UnknownVariable",
    "SequentialObject",
    "CounterObject",
    "StackObject",
    "QueueObject",
    "SortedSetObject",
    "DirectStore",
    "make_object",
    "OBJECTS",
]

Value = Any


class UnknownVariable(LookupError):
    """A request addressed something that is neither a root nor a live handle."""


@dataclass(frozen=True, slots=True)
class RequestDescriptor:
    opcode: str
    args: tuple = ()
    owner: int = 0

    def __str__(self) -> str:
        return f"{self.opcode}({', '.join(map(str, self.args))})"


class AccessContext(Protocol):
    def read(self, x: Any) -> Value: ...

    def write(self, x: Any, value: Value) -> None: ...

    def alloc(self) -> Any: ...


class SequentialObject:
    """Base class for objects run through the universal construction.

    Subclasses set ``name`` and ``opcodes``, implement ``setup`` (initial
    root values, possibly allocating nodes) and one ``op_<opcode>`` method
    per operation.
    """

    name: str = "object"
    opcodes: tuple[str, ...] = ()

    def setup(self, alloc: Callable[[Value], Any]) -> dict[str, Value]:
        raise NotImplementedError

    def dispatch(self, req: RequestDescriptor, ctx: AccessContext) -> Value:
        try:
            method = getattr(self, "op_" + req.opcode)
        except AttributeError:
            raise ValueError(f"{self.name}: unknown opcode {req.opcode!r}") from None
        return method(ctx, *req.args)

    def worst_case_accesses(self, opcode: str) -> int:
        """Declared bound on mediated accesses (reads, writes, allocs) for ``opcode``."""
        raise NotImplementedError

    @property
    def w(self) -> int:
        return max(self.worst_case_accesses(op) for op in self.opcodes)

    def random_request(self, rng, owner: int = 0, mix: dict[str, float] | None = None) -> RequestDescriptor:
        ops = list(mix) if mix else list(self.opcodes)
        weights = [mix[o] for o in ops] if mix else None
        opcode = rng.choices(ops, weights=weights)[0]
        return RequestDescriptor(opcode, self.random_args(rng, opcode), owner)

    def random_args(self, rng, opcode: str) -> tuple:
        return ()


def _new_node(ctx: AccessContext, value: Value, nxt: Value = None) -> tuple:
    node = (ctx.alloc(), ctx.alloc())
    ctx.write(node[0], value)
    if nxt is not None:
        ctx.write(node[1], nxt)
    return node


class CounterObject(SequentialObject):
    name = "counter"
    opcodes = ("fetch_inc",)

    def __init__(self, start: int = 0) -> None:
        self.start = start

    def setup(self, alloc):
        return {"count": self.start}

    def op_fetch_inc(self, ctx):
        old = ctx.read("count")
        ctx.write("count", old + 1)
        return old

    def worst_case_accesses(self, opcode):
        return 2


class StackObject(SequentialObject):
    name = "stack"
    opcodes = ("push", "pop")

    def __init__(self, initial: Iterable[int] = ()) -> None:
        self.initial = tuple(initial)

    def setup(self, alloc):
        top = None
        for v in self.initial:
            top = (alloc(v), alloc(top))
        return {"top": top}

    def op_push(self, ctx, value):
        node = (ctx.alloc(), ctx.alloc())
        ctx.write(node[0], value)
        ctx.write(node[1], ctx.read("top"))
        ctx.write("top", node)
        return True

    def op_pop(self, ctx):
        top = ctx.read("top")
        if top is None:
            return None
        value = ctx.read(top[0])
        ctx.write("top", ctx.read(top[1]))
        return value

    def worst_case_accesses(self, opcode):
        return {"push": 6, "pop": 4}[opcode]

    def random_args(self, rng, opcode):
        return (rng.randrange(100),) if opcode == "push" else ()


class QueueObject(SequentialObject):
    """Linked FIFO with a dummy head node; ``head`` and ``tail`` are roots."""

    name = "queue"
    opcodes = ("enqueue", "dequeue")

    def __init__(self, initial: Iterable[int] = ()) -> None:
        self.initial = tuple(initial)

    def setup(self, alloc):
        # build back to front so each node can be created with its successor
        nxt = None
        tail = None
        for v in reversed(self.initial):
            nxt = (alloc(v), alloc(nxt))
            tail = tail or nxt
        dummy = (alloc(None), alloc(nxt))
        return {"head": dummy, "tail": tail or dummy}

    def op_enqueue(self, ctx, value):
        node = _new_node(ctx, value)
        tail = ctx.read("tail")
        ctx.write(tail[1], node)
        ctx.write("tail", node)
        return True

    def op_dequeue(self, ctx):
        head = ctx.read("head")
        first = ctx.read(head[1])
        if first is None:
            return None
        value = ctx.read(first[0])
        ctx.write("head", first)
        return value

    def worst_case_accesses(self, opcode):
        return {"enqueue": 6, "dequeue": 4}[opcode]

    def random_args(self, rng, opcode):
        return (rng.randrange(100),) if opcode == "enqueue" else ()


class SortedSetObject(SequentialObject):
    """Sorted singly linked list with a sentinel; keys live in ``range(key_range)``.

    The traversal length, and so ``w``, grows with the number of stored keys.
    """

    name = "set"
    opcodes = ("insert", "remove", "contains")

    def __init__(self, key_range: int = 16, initial: Iterable[int] = ()) -> None:
        self.key_range = key_range
        self.initial = tuple(sorted(set(initial)))

    def setup(self, alloc):
        nxt = None
        for v in reversed(self.initial):
            nxt = (alloc(v), alloc(nxt))
        return {"setHead": (alloc(None), alloc(nxt))}

    def _find(self, ctx, value):
        prev = ctx.read("setHead")
        cur = ctx.read(prev[1])
        while cur is not None:
            key = ctx.read(cur[0])
            if key >= value:
                return prev, cur, key
            prev = cur
            cur = ctx.read(cur[1])
        return prev, None, None

    def op_insert(self, ctx, value):
        prev, cur, key = self._find(ctx, value)
        if key == value:
            return False
        ctx.write(prev[1], _new_node(ctx, value, cur))
        return True

    def op_remove(self, ctx, value):
        prev, cur, key = self._find(ctx, value)
        if key != value:
            return False
        ctx.write(prev[1], ctx.read(cur[1]))
        return True

    def op_contains(self, ctx, value):
        return self._find(ctx, value)[2] == value

    def worst_case_accesses(self, opcode):
        walk = 2 + 2 * self.key_range
        return walk + {"insert": 5, "remove": 2, "contains": 0}[opcode]

    def random_args(self, rng, opcode):
        return (rng.randrange(self.key_range),)


OBJECTS: dict[str, type[SequentialObject]] = {
    "counter": CounterObject,
    "stack": StackObject,
    "queue": QueueObject,
    "set": SortedSetObject,
}


def make_object(name: str, **kwargs) -> SequentialObject:
    try:
        return OBJECTS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown object {name!r}; choose from {sorted(OBJECTS)}") from None


class _Var:
    __slots__ = ("value",)

    def __init__(self, value: Value = None) -> None:
        self.value = value


@dataclass
class DirectStore:
    """Runs requests sequentially against plain memory, counting accesses.

    This is the object's own code with no concurrency control; the lock
    baseline wraps it in a mutex and the tests use it as a sequential model.
    """

    obj: SequentialObject
    roots: dict = field(init=False)
    accesses: _Counter = field(init=False, default_factory=_Counter)

    def __post_init__(self) -> None:
        self.roots = {k: _Var(v) for k, v in self.obj.setup(_Var).items()}

    def _var(self, x) -> _Var:
        if isinstance(x, _Var):
            return x
        if isinstance(x, str) and x in self.roots:
            return self.roots[x]
        raise UnknownVariable(x)

    def read(self, x):
        self.accesses["read"] += 1
        return self._var(x).value

    def write(self, x, value):
        self.accesses["write"] += 1
        self._var(x).value = value

    def alloc(self):
        self.accesses["alloc"] += 1
        return _Var()

    def apply(self, req: RequestDescriptor) -> Value:
        return self.obj.dispatch(req, self)
