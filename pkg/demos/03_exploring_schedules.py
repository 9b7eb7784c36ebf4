"""
Exploring schedules
===================

Two processes, one operation each, on a queue holding [1, 2]. The explorer
enumerates every schedule with a bounded number of preemptions and runs the
invariant probes, the phase-order oracle and the linearizability checker on
each one.

Then the same exploration runs against two broken variants, to show that
the probes are not vacuous.
"""

from luc import QueueObject
from luc.harness.explore import ExploreConfig, explore_schedules
from luc.harness.mutants import NoOldSlotRuntime, NoSeqGuardRuntime


def queue():
    return QueueObject([1, 2])


programs = {1: [("enqueue", (3,))], 2: [("dequeue", ())]}

report = explore_schedules(ExploreConfig(queue, programs, preemption_bound=2))
print("\n".join(report.lines()))

# without the phase-stamp guard, a late helper overwrites an item twice in one phase
# without the old-value slot, a helper re-reads a value its peer already wrote
for cls in (NoSeqGuardRuntime, NoOldSlotRuntime):
    bad = explore_schedules(ExploreConfig(queue, programs, preemption_bound=2, runtime_cls=cls))
    print(f"\n{cls.__name__}: {bad.schedules} schedules, failures {dict(bad.failures_by_probe)}")
    cx = bad.counterexamples[0]
    print("first counterexample schedule:", cx.schedule_string())
    print("  ", cx.failures[0])
