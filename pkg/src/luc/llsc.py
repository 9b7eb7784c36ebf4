"""LL/SC/VL registers emulated over a single-reference compare-and-swap.

Every register holds one reference to an immutable :class:`Snapshot`
``(payload, tag)``. ``ll`` is a single reference load, ``sc`` is a CAS of
that reference against the snapshot the caller loaded, and ``vl`` compares
tags. Tags grow by exactly one per successful ``sc`` and are never reused on
a cell, so a stale snapshot can never validate.

Reclamation: a snapshot is freed only once nothing references it, which is
exactly CPython's reference-counting rule. No process can therefore hold a
snapshot whose memory was recycled, and reference identity is ABA-safe.

CPython offers no user-level CAS instruction; each cell carries a private
lock held for the constant-time compare-and-set only. It models the atomicity
of the hardware primitive and is never held across a shared step.
"""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Generic, Iterator, TypeVar

V = TypeVar("V")

__all__ = [
    "Snapshot",
    "VersionedCell",
    "AtomicRef",
    "AtomicWord",
    "ll",
    "sc",
    "vl",
    "cas_word",
    "primitive_counts",
]


@dataclass(frozen=True, slots=True)
class Snapshot(Generic[V]):
    """An immutable record installed in a :class:`VersionedCell`."""

    payload: V
    tag: int


class VersionedCell(Generic[V]):
    """An LL/SC register: one swappable reference to an immutable record."""

    __slots__ = ("_current", "_lock", "__weakref__")

    def __init__(self, payload: V) -> None:
        self._current: Snapshot[V] = Snapshot(payload, 0)
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        cur = self._current
        return f"<{type(self).__name__} tag={cur.tag} payload={cur.payload!r}>"

    def peek(self) -> Snapshot[V]:
        """Uncounted read for probes and debugging; not part of the algorithm."""
        return self._current


class AtomicRef:
    """A single-word CAS location holding a reference (or ``None``)."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value: Any = None) -> None:
        self._value = value
        self._lock = threading.Lock()

    def load(self) -> Any:
        _count("read")
        return self._value

    def store(self, value: Any) -> None:
        _count("write")
        self._value = value

    def cas(self, expected: Any, new: Any) -> bool:
        _count("cas")
        with self._lock:
            if self._value is not expected:
                return False
            self._value = new
            return True


class AtomicWord:
    """A machine word supporting atomic load and fetch-and-add."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value: int = 0) -> None:
        self._value = value
        self._lock = threading.Lock()

    def load(self) -> int:
        _count("read")
        return self._value

    def fetch_add(self, delta: int) -> int:
        _count("fad")
        with self._lock:
            old = self._value
            self._value = old + delta
            return old


def ll(cell: VersionedCell[V]) -> Snapshot[V]:
    _count("ll")
    return cell._current


def vl(cell: VersionedCell[V], snap: Snapshot[V]) -> bool:
    _count("vl")
    return cell._current.tag == snap.tag


def sc(cell: VersionedCell[V], snap: Snapshot[V], payload: V) -> bool:
    """Install ``payload`` iff no successful ``sc`` hit ``cell`` since ``snap`` was loaded."""
    _count("sc")
    with cell._lock:
        if cell._current is not snap:
            return False
        cell._current = Snapshot(payload, snap.tag + 1)
        return True


def cas_word(ref: AtomicRef, expected: Any, new: Any) -> bool:
    return ref.cas(expected, new)


# Primitive-side access counting, used to cross-check the call-site hook.
_tls = threading.local()
_active_counters = 0
_active_lock = threading.Lock()


def _count(kind: str) -> None:
    if _active_counters:
        counts = getattr(_tls, "counts", None)
        if counts is not None:
            counts[kind] += 1


@contextmanager
def primitive_counts() -> Iterator[Counter]:
    """Count primitive invocations made by the *current thread* inside the block."""
    global _active_counters
    counts: Counter = Counter()
    prev = getattr(_tls, "counts", None)
    _tls.counts = counts
    with _active_lock:
        _active_counters += 1
    try:
        yield counts
    finally:
        _tls.counts = prev
        with _active_lock:
            _active_counters -= 1
