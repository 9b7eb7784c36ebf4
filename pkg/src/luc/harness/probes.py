"""Invariant probes evaluated while a step-machine schedule runs.

The observer callbacks fire right after the shared step they describe and
before the process yields again, so in step mode every probe sees the
configuration produced by exactly that step.

Probes:

``toggle_parity``
    After a process's j-th fetch-and-add its toggle bit equals j mod 2, and
    the bit never moves between that process's own additions.
``no_pending_at_announce``
    When a process announces, its applied and papplied bits in S agree.
``phase_counter``
    Each successful publication advances S.seq by exactly one.
``item_stamp``
    A successful item SC in phase l raises the item's stamp from below l
    to exactly l (= S.seq + 1 at that instant), at most once per item and phase.
``two_publications``
    At least two successful publications fall inside every attempt.
``applied_after_attempt``
    Just after a process's j-th attempt, its applied bit is ceil(j/2) mod 2.
``write_set_determinism``
    Iterations that load-linked the same S and reached the write-back
    performed the same allocations, reads and write-backs, in the same order,
    up to the end of that phase (one sequence is a prefix of the other).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..core import UniversalConstruction
from .oracle import PhaseRecorder


@dataclass
class _IterationLog:
    pid: int
    tag: int
    events: list = field(default_factory=list)
    reached_flush: bool = False


class ProbeObserver(PhaseRecorder):
    def __init__(self) -> None:
        super().__init__()
        self.rt: UniversalConstruction | None = None
        self.violations: list[str] = []
        self.publications = 0
        self._last_seq = 0
        self._attempt_start: dict[int, int] = {}
        self._attempts: dict[int, int] = defaultdict(int)
        self._iter: dict[int, _IterationLog] = {}
        self._logs: list[_IterationLog] = []
        self._item_phases: set[tuple[int, int]] = set()

    def bind(self, rt: UniversalConstruction) -> "ProbeObserver":
        self.rt = rt
        rt.observer = self
        return self

    def _fail(self, probe: str, msg: str) -> None:
        self.violations.append(f"{probe}: {msg}")

    def _S(self):
        return self.rt.S.peek()

    # -- per-step --------------------------------------------------------------

    def check_step(self, system=None, rec=None) -> None:
        bits = self.rt.toggles.snapshot()
        counts = self.rt._fad_count
        for pid in range(1, self.rt.n + 1):
            if (bits >> (pid - 1)) & 1 != counts[pid] % 2:
                self._fail("toggle_parity", f"pid {pid} bit={(bits >> (pid - 1)) & 1} "
                                            f"after {counts[pid]} additions")

    # -- observer callbacks ----------------------------------------------------

    def announced(self, pid, req):
        st = self._S().payload
        if (st.applied ^ st.papplied) >> (pid - 1) & 1:
            self._fail("no_pending_at_announce", f"pid {pid} still pending when announcing {req}")

    def toggled(self, pid, count):
        bit = (self.rt.toggles.snapshot() >> (pid - 1)) & 1
        if bit != count % 2:
            self._fail("toggle_parity", f"pid {pid} bit={bit} after addition #{count}")

    def attempt_begin(self, pid):
        self._attempt_start[pid] = self.publications

    def attempt_end(self, pid):
        self._attempts[pid] += 1
        j = self._attempts[pid]
        seen = self.publications - self._attempt_start.pop(pid)
        if seen < 2:
            self._fail("two_publications", f"pid {pid} attempt #{j} overlapped {seen} publications")
        bit = self._S().payload.applied >> (pid - 1) & 1
        if bit != ((j + 1) // 2) % 2:
            self._fail("applied_after_attempt", f"pid {pid} attempt #{j}: applied bit {bit}")

    def iteration_begin(self, pid, ls):
        log = _IterationLog(pid, ls.tag)
        self._iter[pid] = log
        self._logs.append(log)

    def access(self, pid, event):
        log = self._iter[pid]
        # only steps taken before the phase closes are comparable
        if self._S().tag == log.tag:
            log.events.append(event)

    def flush_begin(self, pid, ls):
        self._iter[pid].reached_flush = True

    def item_sc(self, pid, item, snap, new, ok):
        if not ok:
            return
        s_seq = self._S().payload.seq
        if new.seq != s_seq + 1:
            self._fail("item_stamp", f"item #{item.uid} stamped {new.seq} while S.seq={s_seq}")
        if snap.payload.seq >= new.seq:
            self._fail("item_stamp", f"item #{item.uid} stamp {snap.payload.seq} -> {new.seq}")
        key = (item.uid, new.seq)
        if key in self._item_phases:
            self._fail("item_stamp", f"item #{item.uid} written twice in phase {new.seq}")
        self._item_phases.add(key)

    def published(self, pid, ls, tmp, batch, ok):
        super().published(pid, ls, tmp, batch, ok)
        if not ok:
            return
        self.publications += 1
        if tmp.seq != ls.payload.seq + 1 or tmp.seq != self._last_seq + 1:
            self._fail("phase_counter", f"published seq {tmp.seq} after {self._last_seq}")
        self._last_seq = tmp.seq

    # -- end of run --------------------------------------------------------------

    def finish(self) -> list[str]:
        groups: dict[int, list[_IterationLog]] = defaultdict(list)
        for log in self._logs:
            if log.reached_flush:
                groups[log.tag].append(log)
        for tag, logs in groups.items():
            longest = max(logs, key=lambda g: len(g.events))
            for log in logs:
                if longest.events[: len(log.events)] != log.events:
                    self._fail("write_set_determinism",
                               f"S tag {tag}: pid {log.pid} {log.events} vs pid {longest.pid} {longest.events}")
                    break
        return self.violations
