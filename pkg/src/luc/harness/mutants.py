"""Deliberately broken runtimes used as negative controls.

Each class removes one safeguard from the construction. The harness must
flag both; if it does not, its checks are vacuous.
"""

from __future__ import annotations

from .. import llsc
from ..core import ItemRecord, ObsoleteBatch, UniversalConstruction


class NoSeqGuardRuntime(UniversalConstruction):
    """Write-back ignores the item's phase stamp and always attempts the SC."""

    def flush_directory(self, ctx) -> None:
        pid, obs = ctx.pid, self.observer
        for entry in ctx.directory.values():
            item = entry.item
            self._step(pid, "flush_read")
            rec = llsc.ll(item).payload
            if obs:
                obs.access(pid, ("write", item.uid, entry.value))
            new = self._next_record(rec, entry.value, ctx.tmp_seq)
            self._step(pid, "sc_item")
            ok = llsc.sc(item, entry.snap, new)
            if obs:
                obs.item_sc(pid, item, entry.snap, new, ok)


class NoOldSlotRuntime(UniversalConstruction):
    """Reads always return the current slot, even for an item already written this phase."""

    def _read_slot(self, rec: ItemRecord, tmp_seq: int):
        if tmp_seq < rec.seq:
            raise ObsoleteBatch
        return rec.val[rec.toggle]


MUTANTS = {"no-seq-guard": NoSeqGuardRuntime, "no-old-slot": NoOldSlotRuntime}
