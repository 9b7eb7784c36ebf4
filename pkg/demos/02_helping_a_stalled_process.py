"""
Helping a stalled process
=========================

Run the construction on the step machine, where every shared access is a
scheduling decision. Process 1 announces a request and then stops for good.
Process 2 keeps going and finishes process 1's request as part of its own
batch.
"""

from luc import CounterObject, RequestDescriptor, UniversalConstruction
from luc.harness.oracle import PhaseRecorder
from luc.harness.stepper import StepSystem

recorder = PhaseRecorder()
rt = UniversalConstruction(2, CounterObject(), observer=recorder)
inc = RequestDescriptor("fetch_inc")
system = StepSystem(rt, {1: [inc], 2: [inc]})
system.start()

# process 1: store the request, flip its toggle bit, then stall
for _ in range(2):
    rec = system.step(1)
    print("p1", rec.kind)

# process 2 runs alone to completion
while 2 in system.enabled():
    system.step(2)
system.close()

print("p2 returned", system.results[2], "after", sum(1 for s in system.steps if s.pid == 2), "steps")
print("counter is now", rt.snapshot_value("count"))
for trace in recorder.ordered():
    batch = [(q, str(req), ret) for q, req, ret in trace.batch]
    if batch:
        print(f"phase {trace.seq} published by p{trace.publisher}: {batch}")
