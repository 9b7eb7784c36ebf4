"""The L-UC wait-free universal construction.

A process announces its request, flips its bit in the toggle register and
then runs ``_attempt`` twice. Each attempt makes two passes over the same
steps: load-link the agreement record ``S``, read the toggles, simulate every
pending request of the current batch against a private directory, validate
``S``, write the directory back to the shared items, and try to publish a new
``S`` whose ``applied``/``papplied`` vectors announce the next batch.

Every shared access is preceded by a call to ``hook(pid, kind, cost)`` when a
hook is installed. The step scheduler in :mod:`luc.harness.stepper` uses it
as a yield point and the benchmark uses it to count accesses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Optional

from . import llsc
from .llsc import AtomicRef, AtomicWord, Snapshot, VersionedCell
from .objmodel import RequestDescriptor, SequentialObject, UnknownVariable, Value

__all__ = [
    "UniversalConstruction",
    "ItemRecord",
    "Item",
    "StateRecord",
    "NewVarNode",
    "ToggleRegister",
    "ObsoleteBatch",
    "InvariantViolation",
    "Observer",
    "pending_set",
    "WORD_BITS",
]

WORD_BITS = 64

Hook = Callable[[int, str, int], None]


class ObsoleteBatch(Exception):
    """Raised inside a simulation once an item shows a later phase than ours."""


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class ItemRecord:
    val: tuple
    toggle: int
    seq: int

    @property
    def current(self) -> Value:
        return self.val[self.toggle]


_FRESH = ItemRecord((None, None), 0, 0)


class Item(VersionedCell[ItemRecord]):
    """A shared variable of the simulated object. Instances double as handles."""

    __slots__ = ("uid",)

    def __init__(self, value: Value = None, uid: int = 0) -> None:
        super().__init__(_FRESH if value is None else ItemRecord((value, None), 0, 0))
        self.uid = uid

    def __repr__(self) -> str:
        return f"<Item #{self.uid}>"


class NewVarNode:
    __slots__ = ("item", "next")

    def __init__(self, item: Optional[Item]) -> None:
        self.item = item
        self.next = AtomicRef(None)


@dataclass(frozen=True, slots=True)
class StateRecord:
    applied: int
    papplied: int
    seq: int
    var_list: NewVarNode
    rvals: tuple

    def pending(self) -> int:
        return self.applied ^ self.papplied


def pending_set(ls: Snapshot[StateRecord] | StateRecord) -> set[int]:
    st = ls.payload if isinstance(ls, Snapshot) else ls
    mask = st.applied ^ st.papplied
    return {q for q in range(1, mask.bit_length() + 1) if mask >> (q - 1) & 1}


class ToggleRegister:
    """n single-writer bits packed in fetch-and-add words; process i owns bit i-1."""

    def __init__(self, n: int, word_bits: int = WORD_BITS) -> None:
        self.n = n
        self.word_bits = word_bits
        self.words = [AtomicWord(0) for _ in range(-(-n // word_bits))]

    def locate(self, pid: int) -> tuple[int, int]:
        return divmod(pid - 1, self.word_bits)

    def add(self, pid: int, sign: int) -> None:
        w, b = self.locate(pid)
        self.words[w].fetch_add(sign << b)

    def snapshot(self) -> int:
        """Uncounted read of all bits; for probes only."""
        out = 0
        for k, word in enumerate(self.words):
            out |= word._value << (k * self.word_bits)
        return out


class Observer:
    """No-op base for runtime event listeners used by the harness probes."""

    def announced(self, pid, req): pass
    def toggled(self, pid, count): pass
    def attempt_begin(self, pid): pass
    def attempt_end(self, pid): pass
    def iteration_begin(self, pid, ls): pass
    def access(self, pid, event): pass
    def flush_begin(self, pid, ls): pass
    def item_sc(self, pid, item, snap, new, ok): pass
    def published(self, pid, ls, tmp, batch, ok): pass


@dataclass(slots=True)
class DirectoryEntry:
    name: Any
    item: Item
    snap: Snapshot[ItemRecord]
    value: Value


class AttemptContext:
    """Per-iteration scratch state; also the access context handed to requests."""

    __slots__ = ("rt", "pid", "prealloc", "directory", "ls", "lact", "ltop",
                 "tmp_seq", "rvals", "batch")

    def __init__(self, rt: "UniversalConstruction", pid: int) -> None:
        self.rt = rt
        self.pid = pid
        self.prealloc = NewVarNode(rt.new_item())

    def reset(self, ls: Snapshot[StateRecord], lact: int) -> None:
        st = ls.payload
        self.directory: dict[Item, DirectoryEntry] = {}
        self.ls = ls
        self.lact = lact
        self.ltop = st.var_list
        self.tmp_seq = st.seq + 1
        self.rvals = list(st.rvals)
        self.batch: list = []

    def _resolve(self, x) -> Item:
        if isinstance(x, Item):
            return x
        if isinstance(x, str):
            item = self.rt.roots.get(x)
            if item is not None:
                return item
        raise UnknownVariable(x)

    def read(self, x) -> Value:
        item = self._resolve(x)
        entry = self.directory.get(item)
        if entry is None:
            entry = self.rt._load(self, x, item, "ll_item")
        return entry.value

    def write(self, x, value: Value) -> None:
        item = self._resolve(x)
        entry = self.directory.get(item)
        if entry is None:
            entry = self.rt._load(self, x, item, "ll_item")
        entry.value = value

    def alloc(self) -> Item:
        return self.rt._alloc(self)


class UniversalConstruction:
    """Wait-free linearizable wrapper around a deterministic sequential object.

    Process ids run from 1 to ``n``; each id may have at most one
    outstanding :meth:`apply_op`.
    """

    def __init__(self, n: int, obj: SequentialObject, *, hook: Optional[Hook] = None,
                 observer: Optional[Observer] = None, word_bits: int = WORD_BITS) -> None:
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.obj = obj
        self.hook = hook
        self.observer = observer
        self._uids = itertools.count(1)
        self.roots: dict[str, Item] = {
            name: self.new_item(v) for name, v in obj.setup(self.new_item).items()
        }
        self.toggles = ToggleRegister(n, word_bits)
        # slot 0 unused so that announce[pid] lines up with process ids
        self.announce = [AtomicRef(None) for _ in range(n + 1)]
        self.S: VersionedCell[StateRecord] = VersionedCell(
            StateRecord(0, 0, 0, NewVarNode(None), (None,) * n))
        # local toggle_i of each process: the sign of its next fetch-and-add
        self._next_sign = [1] * (n + 1)
        self._fad_count = [0] * (n + 1)
        # the agreement record is read word by word: rvals, two bit vectors, seq, list
        self.state_words = n + 2 * len(self.toggles.words) + 2

    def new_item(self, value: Value = None) -> Item:
        return Item(value, next(self._uids))

    # -- shared-step plumbing -------------------------------------------------

    def _step(self, pid: int, kind: str, cost: int = 1) -> None:
        hook = self.hook
        if hook is not None:
            hook(pid, kind, cost)

    def _read_toggles(self, pid: int) -> int:
        out = 0
        bits = self.toggles.word_bits
        for k, word in enumerate(self.toggles.words):
            self._step(pid, "read_toggles")
            out |= word.load() << (k * bits)
        return out

    # -- public API -----------------------------------------------------------

    def apply_op(self, pid: int, req: RequestDescriptor) -> Value:
        if not 1 <= pid <= self.n:
            raise ValueError(f"pid {pid} outside 1..{self.n}")
        obs = self.observer
        self._step(pid, "announce")
        self.announce[pid].store(req)
        if obs:
            obs.announced(pid, req)
        sign = self._next_sign[pid]
        self._next_sign[pid] = -sign
        self._step(pid, "fad")
        self.toggles.add(pid, sign)
        self._fad_count[pid] += 1
        if obs:
            obs.toggled(pid, self._fad_count[pid])
        ctx = AttemptContext(self, pid)
        self._attempt(ctx)
        self._attempt(ctx)
        self._step(pid, "read_rvals")
        return llsc.ll(self.S).payload.rvals[pid - 1]

    def current_state(self) -> StateRecord:
        return self.S.peek().payload

    def snapshot_value(self, root: str) -> Value:
        """Current value of a root variable (uncounted, for tests and probes)."""
        return self.roots[root].peek().payload.current

    # -- Attempt --------------------------------------------------------------

    def _attempt(self, ctx: AttemptContext) -> None:
        obs = self.observer
        if obs:
            obs.attempt_begin(ctx.pid)
        for _ in range(2):
            self._iteration(ctx)
        if obs:
            obs.attempt_end(ctx.pid)

    def _iteration(self, ctx: AttemptContext) -> bool:
        pid = ctx.pid
        obs = self.observer
        self._step(pid, "ll_S", self.state_words)
        ls = llsc.ll(self.S)
        lact = self._read_toggles(pid)
        ctx.reset(ls, lact)
        if obs:
            obs.iteration_begin(pid, ls)
        st = ls.payload
        pending = st.applied ^ st.papplied
        try:
            q = 1
            while pending:
                if pending & 1:
                    self.simulate_request(q, ctx)
                pending >>= 1
                q += 1
        except ObsoleteBatch:
            self._step(pid, "vl_S")
            if llsc.vl(self.S, ls):
                raise InvariantViolation("item from a later phase while S is unchanged")
            return False
        self._step(pid, "vl_S")
        if not llsc.vl(self.S, ls):
            return False
        if obs:
            obs.flush_begin(pid, ls)
        self.flush_directory(ctx)
        return self.publish_state(ctx)

    def simulate_request(self, q: int, ctx: AttemptContext) -> None:
        self._step(ctx.pid, "read_announce")
        req = self.announce[q].load()
        ret = self.obj.dispatch(req, ctx)
        ctx.rvals[q - 1] = ret
        ctx.batch.append((q, req, ret))

    def _load(self, ctx: AttemptContext, name, item: Item, kind: str) -> DirectoryEntry:
        self._step(ctx.pid, kind)
        snap = llsc.ll(item)
        value = self._read_slot(snap.payload, ctx.tmp_seq)
        entry = DirectoryEntry(name, item, snap, value)
        ctx.directory[item] = entry
        if self.observer:
            self.observer.access(ctx.pid, ("read", item.uid, value))
        return entry

    def _read_slot(self, rec: ItemRecord, tmp_seq: int) -> Value:
        if tmp_seq == rec.seq:
            # a peer already wrote this phase's value; we need the one before it
            return rec.val[1 - rec.toggle]
        if tmp_seq > rec.seq:
            return rec.val[rec.toggle]
        raise ObsoleteBatch

    def _alloc(self, ctx: AttemptContext) -> Item:
        pid = ctx.pid
        self._step(pid, "cas_list")
        if ctx.ltop.next.cas(None, ctx.prealloc):
            node = ctx.prealloc
            ctx.prealloc = NewVarNode(self.new_item())
        else:
            self._step(pid, "read_list")
            node = ctx.ltop.next.load()
        ctx.ltop = node
        item = node.item
        if self.observer:
            self.observer.access(pid, ("alloc", item.uid))
        self._load(ctx, item, item, "ll_new_item")
        return item

    def flush_directory(self, ctx: AttemptContext) -> None:
        pid = ctx.pid
        tmp_seq = ctx.tmp_seq
        obs = self.observer
        for entry in ctx.directory.values():
            item = entry.item
            self._step(pid, "flush_read")
            rec = llsc.ll(item).payload
            if obs:
                obs.access(pid, ("write", item.uid, entry.value))
            if rec.seq > tmp_seq:
                break
            if rec.seq == tmp_seq:
                continue
            new = self._next_record(rec, entry.value, tmp_seq)
            self._step(pid, "sc_item")
            ok = llsc.sc(item, entry.snap, new)
            if obs:
                obs.item_sc(pid, item, entry.snap, new, ok)

    @staticmethod
    def _next_record(rec: ItemRecord, value: Value, seq: int) -> ItemRecord:
        if rec.toggle == 0:
            return ItemRecord((rec.val[0], value), 1, seq)
        return ItemRecord((value, rec.val[1]), 0, seq)

    def publish_state(self, ctx: AttemptContext) -> bool:
        st = ctx.ls.payload
        tmp = StateRecord(
            applied=ctx.lact,
            papplied=st.applied,
            seq=ctx.tmp_seq,
            var_list=NewVarNode(None),
            rvals=tuple(ctx.rvals),
        )
        self._step(ctx.pid, "sc_S")
        ok = llsc.sc(self.S, ctx.ls, tmp)
        if self.observer:
            self.observer.published(ctx.pid, ctx.ls, tmp, ctx.batch, ok)
        return ok
