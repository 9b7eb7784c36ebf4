from __future__ import annotations

import pytest

from luc.harness.explore import PROBES, BudgetExceeded, ExploreConfig, explore_schedules, run_one
from luc.harness.mutants import NoOldSlotRuntime, NoSeqGuardRuntime
from luc.harness.stepper import scripted_chooser, sequential_chooser
from luc.objmodel import CounterObject, QueueObject

COUNTER_PROGS = {1: [("fetch_inc", ())], 2: [("fetch_inc", ())]}
QUEUE_PROGS = {1: [("enqueue", (3,))], 2: [("dequeue", ())]}


def _queue():
    return QueueObject([1, 2])


def test_counter_bound_two_exhaustive_and_clean():
    report = explore_schedules(ExploreConfig(CounterObject, COUNTER_PROGS, preemption_bound=2))
    assert report.ok
    assert report.tree_exhausted
    assert report.schedules == 1084


def test_full_enumeration_small_bound_counts():
    # zero preemptions: each process runs to completion in turn, one order per first choice
    report = explore_schedules(ExploreConfig(CounterObject, COUNTER_PROGS, preemption_bound=0))
    assert report.schedules == 2 and report.ok


def test_queue_bound_one_clean():
    report = explore_schedules(ExploreConfig(_queue, QUEUE_PROGS, preemption_bound=1, random_schedules=50))
    assert report.ok, report.lines()
    assert report.random_schedules == 50


def test_report_lines_have_every_probe():
    report = explore_schedules(ExploreConfig(CounterObject, COUNTER_PROGS, preemption_bound=0))
    lines = report.lines()
    assert [ln.split()[0] for ln in lines[:-1]] == list(PROBES)
    assert all(ln.endswith("PASS") for ln in lines[:-1])
    assert lines[-1].startswith("coverage:")


def test_budget():
    cfg = ExploreConfig(CounterObject, COUNTER_PROGS, preemption_bound=2, budget=10)
    report = explore_schedules(cfg)
    assert report.schedules == 10 and report.budget_hit and not report.tree_exhausted
    cfg.raise_on_budget = True
    with pytest.raises(BudgetExceeded):
        explore_schedules(cfg)


def test_no_seq_guard_mutant_is_caught():
    report = explore_schedules(ExploreConfig(CounterObject, COUNTER_PROGS, preemption_bound=2,
                                             runtime_cls=NoSeqGuardRuntime))
    assert not report.ok
    assert report.failures_by_probe["item_stamp"] > 0
    cx = report.counterexamples[0]
    # the recorded schedule reproduces the failure
    _, failures = run_one(ExploreConfig(CounterObject, COUNTER_PROGS, runtime_cls=NoSeqGuardRuntime),
                          scripted_chooser(cx.schedule, sequential_chooser))
    assert failures


def test_no_old_slot_mutant_is_caught():
    report = explore_schedules(ExploreConfig(_queue, QUEUE_PROGS, preemption_bound=2,
                                             runtime_cls=NoOldSlotRuntime, stop_at_first=True))
    assert not report.ok
    assert {"exactly_once", "linearizable"} & set(report.failures_by_probe)
    assert "counterexample=" in "\n".join(report.lines())
