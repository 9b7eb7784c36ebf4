"""
Wrapping a sequential object
============================

A sequential object is plain Python written against read/write/alloc.
The runtime turns it into a wait-free concurrent object for n processes.
"""

import threading

from luc import QueueObject, RequestDescriptor, UniversalConstruction

# a FIFO queue that starts with two elements, shared by four processes
rt = UniversalConstruction(4, QueueObject([1, 2]))
print("enqueue(5):", rt.apply_op(1, RequestDescriptor("enqueue", (5,))))
print("dequeues:", [rt.apply_op(2, RequestDescriptor("dequeue")) for _ in range(4)])

# every published agreement record closes one phase
print("phases so far:", rt.current_state().seq)

# now the same from real threads; each pid is used by one thread at a time
rt = UniversalConstruction(4, QueueObject())
taken = []


def producer_consumer(pid):
    for k in range(200):
        rt.apply_op(pid, RequestDescriptor("enqueue", (pid * 1000 + k,)))
        got = rt.apply_op(pid, RequestDescriptor("dequeue"))
        taken.append(got)


threads = [threading.Thread(target=producer_consumer, args=(p,)) for p in range(1, 5)]
for t in threads:
    t.start()
for t in threads:
    t.join()

# every dequeue found something, and nothing came out twice
print("dequeued:", len(taken), "distinct:", len(set(taken)), "none:", taken.count(None))

# and what came out is exactly what went in
assert set(taken) == {p * 1000 + k for p in range(1, 5) for k in range(200)}
print("every enqueued value was dequeued exactly once")
