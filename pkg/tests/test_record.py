from __future__ import annotations

import random
import sys

import pytest

from luc.harness.history import operations
from luc.harness.record import Workload, random_programs, record_history, switch_interval
from luc.objmodel import CounterObject, StackObject


def test_random_programs_round_robin():
    progs = random_programs(StackObject(), 3, 10, random.Random(0))
    assert [len(progs[p]) for p in (1, 2, 3)] == [4, 3, 3]


@pytest.mark.parametrize("mode", ["threads", "steps"])
def test_recording_is_complete(mode):
    progs = random_programs(CounterObject(), 4, 200, random.Random(1))
    rec = record_history(Workload(CounterObject, progs, mode=mode, seed=1))
    ops = operations(rec.history)
    assert len(ops) == 200 and all(op.complete for op in ops)
    assert sorted(op.value for op in ops) == list(range(200))
    assert [t.seq for t in rec.traces] == list(range(1, len(rec.traces) + 1))


def test_step_mode_is_reproducible():
    progs = random_programs(StackObject(), 3, 12, random.Random(2))
    a = record_history(Workload(StackObject, progs, mode="steps", seed=9))
    b = record_history(Workload(StackObject, progs, mode="steps", seed=9))
    assert [(e.kind, e.pid, e.value, e.time) for e in a.history] == \
           [(e.kind, e.pid, e.value, e.time) for e in b.history]


def test_unknown_mode():
    with pytest.raises(ValueError):
        record_history(Workload(CounterObject, {1: []}, mode="processes"))


def test_switch_interval_restored():
    before = sys.getswitchinterval()
    with switch_interval(1e-5):
        assert sys.getswitchinterval() == pytest.approx(1e-5)
    assert sys.getswitchinterval() == before
