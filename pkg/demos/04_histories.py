"""
Recording and checking histories
================================

Record a history from real threads, write it in the line format, read it
back, and check it two ways: the linearizability search, and replaying the
phases in the order they were published.
"""

import random
import tempfile
from pathlib import Path

from luc import SortedSetObject
from luc.harness.checker import check_linearizable
from luc.harness.history import dumps, load, loads, save
from luc.harness.models import model_for
from luc.harness.oracle import replay_phase_oracle
from luc.harness.record import Workload, random_programs, record_history


def make_set():
    return SortedSetObject(key_range=4, initial=[2])


programs = random_programs(make_set(), 3, 8, random.Random(11))
rec = record_history(Workload(make_set, programs, mode="steps", seed=11))
print(dumps(rec.history))

path = Path(tempfile.mkdtemp()) / "set.hist"
save(rec.history, path)
again = load(path)

model = model_for(make_set())
result = check_linearizable(again, model)
print("linearizable:", result.linearizable)
print("witness:", [f"p{op.pid}.{op.opcode}{op.args}->{op.value}" for op in result.witness])

oracle = replay_phase_oracle(rec.traces, model, rec.history)
print("phase order replays every return:", oracle.ok, f"({len(rec.traces)} phases)")

# a hand-written history that no order can explain: both inserts of 3 succeed
forged = loads("""\
INV 1 insert 3
INV 2 insert 3
RES 1 true
RES 2 true
""")
print("forged history linearizable:", check_linearizable(forged, model_for(SortedSetObject(4))).linearizable)
