"""
Accesses per operation
======================

Count shared-memory accesses per operation on the step machine, fit the
constants of C1*n + C2*k*w + C3 as an upper envelope, and look at how the
worst case moves with n (at k = 1) and with k*w.
"""

import collections

import numpy as np

from luc.bench import BenchConfig, affine_fit, emit_csv, fit_step_bound, run_bench

# one process: every operation costs the same
solo = run_bench(BenchConfig(object="counter", threads=1, ops=1000, count_steps=True))
print("n=1 histogram:", dict(solo.histogram))

# heavy think time keeps operations apart, so k stays at 1 and only n moves
rows = []
for n in (1, 2, 4, 8):
    r = run_bench(BenchConfig(object="counter", threads=n, ops=200, mode="steps", think="exp:3000", seed=n))
    rows.append((n, max(s.accesses for s in r.samples if s.measured_k == 1)))
a, b, r2 = affine_fit(*zip(*rows))
print("n-sweep (n, max):", rows, f"-> {a:.1f} + {b:.2f} n, R2={r2:.3f}")

# fixed n=8, shorter think times raise k
by_k = collections.defaultdict(list)
results = []
for think in ("exp:20000", "exp:1200", "exp:400", "exp:120", "0"):
    r = run_bench(BenchConfig(object="set", threads=8, ops=60, mode="steps", think=think,
                              mix={"insert": 0.5, "remove": 0.5},
                              object_args={"key_range": 16, "initial": range(0, 16, 2)}))
    results.append(r)
    for s in r.samples:
        by_k[s.measured_k].append(s.accesses)
w = results[0].w_bound
for k in sorted(by_k):
    v = np.array(by_k[k])
    print(f"k={k} kw={k * w:4d} ops={len(v):5d} mean={v.mean():6.1f} max={v.max()}")

c1, c2, c3 = fit_step_bound(results)
print(f"envelope: accesses <= {c1:.2f} n + {c2:.2f} k w + {c3:.2f}")

emit_csv(results[-1], "step_bound_k8.csv")
print("wrote step_bound_k8.csv")
