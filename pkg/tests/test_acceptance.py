"""Acceptance criteria, each run at its stated scale and tolerance.

Every test prints one ``CRITERION <n> ... PASS|FAIL`` line (visible in the
``pytest -v`` log even with output capture on) before asserting.
"""

from __future__ import annotations

import collections
import itertools
import random
import threading
import time

import pytest

from luc import llsc
from luc.bench import BenchConfig, affine_fit, bound_violations, fit_step_bound, run_bench
from luc.core import UniversalConstruction
from luc.harness.checker import check_linearizable
from luc.harness.explore import ExploreConfig, explore_schedules
from luc.harness.models import model_for
from luc.harness.mutants import NoOldSlotRuntime, NoSeqGuardRuntime
from luc.harness.oracle import replay_phase_oracle
from luc.harness.record import Workload, random_programs, record_history, switch_interval
from luc.objmodel import CounterObject, QueueObject, RequestDescriptor, SortedSetObject, StackObject


@pytest.fixture
def report(capsys):
    def emit(line: str) -> None:
        with capsys.disabled():
            print(f"\n{line}", flush=True)
    return emit


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# -- 1: exactly-once and agreement ---------------------------------------------------------

TOTAL_OPS_C1 = 100_000
SEEDS_C1 = 20
NS_C1 = (1, 2, 4, 8)


def _counter_workload(n: int, ops: int, seed: int) -> tuple[bool, str]:
    rng = random.Random(seed)
    # uneven split of the operations over the processes
    cuts = sorted(rng.randrange(ops + 1) for _ in range(n - 1))
    shares = [b - a for a, b in zip([0, *cuts], [*cuts, ops])]
    rt = UniversalConstruction(n, CounterObject())
    out: list[list[int]] = [[] for _ in range(n)]
    barrier = threading.Barrier(n)

    def worker(i: int) -> None:
        barrier.wait()
        req = RequestDescriptor("fetch_inc", (), i + 1)
        out[i].extend(rt.apply_op(i + 1, req) for _ in range(shares[i]))

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(n)]
    with switch_interval(rng.choice([1e-6, 1e-5, 1e-4])):
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    returns = sorted(v for vals in out for v in vals)
    ok = rt.snapshot_value("count") == ops and returns == list(range(ops))
    return ok, f"n={n} seed={seed} final={rt.snapshot_value('count')} ops={ops}"


def test_criterion_1_exactly_once_counter(report):
    per_workload = TOTAL_OPS_C1 // (len(NS_C1) * SEEDS_C1)
    t0 = time.perf_counter()
    failures = []
    for n, seed in itertools.product(NS_C1, range(SEEDS_C1)):
        ok, detail = _counter_workload(n, per_workload, seed)
        if not ok:
            failures.append(detail)
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    report(f"CRITERION 1 exactly-once: {len(NS_C1) * SEEDS_C1} workloads, "
           f"{per_workload * len(NS_C1) * SEEDS_C1} ops, {len(failures)} bad, {elapsed:.1f}s (<30s) {_status(ok)}")
    assert not failures, failures[:3]
    assert elapsed < 30


# -- 2: linearizability of small recorded histories -----------------------------------------

HISTORIES_C2 = 1000
MAX_EVENTS_C2 = 20


def _c2_factory(name: str, rng: random.Random):
    if name == "counter":
        start = rng.randrange(3)
        return lambda: CounterObject(start)
    initial = [rng.randrange(5) for _ in range(rng.randrange(3))]
    if name == "stack":
        return lambda: StackObject(initial)
    if name == "queue":
        return lambda: QueueObject(initial)
    return lambda: SortedSetObject(key_range=4, initial=initial)


def _c2_history(name: str, i: int, runtime_cls=UniversalConstruction):
    """The i-th randomized small history; every fourth one uses real threads."""
    rng = random.Random(f"{name}-{i}")
    factory = _c2_factory(name, rng)
    n = rng.randint(2, 4)
    ops = rng.randint(1, MAX_EVENTS_C2 // 2)
    programs = random_programs(factory(), n, ops, rng)
    mode = "threads" if i % 4 == 0 else "steps"
    rec = record_history(Workload(factory, programs, mode=mode, seed=i,
                                  switch_prob=rng.choice([1.0, 0.5, 0.1]), runtime_cls=runtime_cls))
    return rec, model_for(factory())


def _c2_check(rec, model) -> list[str]:
    problems = []
    if len(rec.history) > MAX_EVENTS_C2:
        problems.append(f"history has {len(rec.history)} events")
    if not check_linearizable(rec.history, model):
        problems.append("not linearizable")
    oracle = replay_phase_oracle(rec.traces, model, rec.history)
    problems.extend(oracle.problems)
    return problems


def test_criterion_2_linearizability_small_histories(report):
    t0 = time.perf_counter()
    bad = collections.Counter()
    for name in ("counter", "stack", "queue", "set"):
        for i in range(HISTORIES_C2):
            rec, model = _c2_history(name, i)
            if _c2_check(rec, model):
                bad[name] += 1
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    report(f"CRITERION 2 linearizability: 4 x {HISTORIES_C2} histories (<= {MAX_EVENTS_C2} events), "
           f"failures {dict(bad) or 0}, {elapsed:.1f}s (<300s) {_status(ok)}")
    assert not bad
    assert elapsed < 300


# -- 3: exhaustive interleaving probes ----------------------------------------------------------

C3_CASES = [
    # (label, factory, programs, preemption bound)
    ("counter inc|inc", CounterObject, {1: [("fetch_inc", ())], 2: [("fetch_inc", ())]}, 4),
    ("queue[1,2] enq|deq", lambda: QueueObject([1, 2]), {1: [("enqueue", (3,))], 2: [("dequeue", ())]}, 3),
    ("queue[1,2] deq|deq", lambda: QueueObject([1, 2]), {1: [("dequeue", ())], 2: [("dequeue", ())]}, 3),
    ("queue[1,2] enq|enq", lambda: QueueObject([1, 2]), {1: [("enqueue", (3,))], 2: [("enqueue", (4,))]}, 3),
]
RANDOM_SCHEDULES_C3 = 500
BUDGET_C3 = 1_000_000


def _c3_explore(factory, programs, bound, runtime_cls=UniversalConstruction, stop_at_first=False):
    return explore_schedules(ExploreConfig(factory, programs, preemption_bound=bound,
                                           random_schedules=RANDOM_SCHEDULES_C3, budget=BUDGET_C3,
                                           runtime_cls=runtime_cls, stop_at_first=stop_at_first))


def test_criterion_3_exhaustive_probes(report):
    t0 = time.perf_counter()
    total, bad = 0, []
    for label, factory, programs, bound in C3_CASES:
        r = _c3_explore(factory, programs, bound)
        total += r.schedules
        if not r.ok or not r.tree_exhausted:
            bad.append((label, dict(r.failures_by_probe), r.tree_exhausted))
        for line in r.lines():
            report(f"  [{label}] {line}")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 600
    report(f"CRITERION 3 interleaving probes: {total} schedules over {len(C3_CASES)} programs, "
           f"counterexamples {bad or 0}, {elapsed:.1f}s (<600s) {_status(ok)}")
    assert not bad
    assert elapsed < 600


# -- 4: step bound ------------------------------------------------------------------------------

def _grid(seed0: int) -> list:
    out = []
    objects = ("counter", "stack", "queue", "set")
    for i, (obj, n, think) in enumerate(itertools.product(objects, (1, 2, 4, 8), ("exp:2000", "exp:200", "0"))):
        out.append(run_bench(BenchConfig(object=obj, threads=n, ops=60, mode="steps", think=think,
                                         seed=seed0 + i, object_args={"key_range": 8} if obj == "set" else {})))
    return out


def _n_sweep():
    xs, ys = [], []
    for n in (1, 2, 4, 8):
        r = run_bench(BenchConfig(object="counter", threads=n, ops=200, mode="steps", think="exp:3000", seed=n))
        solo = [s.accesses for s in r.samples if s.measured_k == 1]
        xs.append(n)
        ys.append(max(solo))
    return xs, ys


KW_THINKS = ("exp:20000", "exp:3000", "exp:1200", "exp:700", "exp:400", "exp:250", "exp:120", "0")


def _kw_sweep():
    by_k = collections.defaultdict(list)
    w = None
    for seed, think in itertools.product(range(3), KW_THINKS):
        r = run_bench(BenchConfig(object="set", threads=8, ops=60, mode="steps", think=think, seed=seed,
                                  mix={"insert": 0.5, "remove": 0.5},
                                  object_args={"key_range": 16, "initial": range(0, 16, 2)}))
        w = r.w_bound
        for s in r.samples:
            by_k[s.measured_k].append(s.accesses)
    ks = sorted(by_k)
    return ks, [k * w for k in ks], [max(by_k[k]) for k in ks]


def test_criterion_4_step_bound(report):
    t0 = time.perf_counter()
    calibration = _grid(1000)
    c = fit_step_bound(calibration)
    fresh = _grid(2000)
    fresh += [run_bench(BenchConfig(object=o, threads=n, ops=300, seed=7,
                                    object_args={"key_range": 8} if o == "set" else {}))
              for o in ("counter", "stack", "queue", "set") for n in (2, 4, 8)]
    violations = bound_violations(fresh, c, slack=1.25)
    n_ops = sum(len(r.samples) for r in fresh)
    worst = max(s.accesses / (c[0] * r.config.threads + c[1] * s.measured_k * r.w_bound + c[2])
                for r in fresh for s in r.samples)
    bound_ok = not violations
    report(f"CRITERION 4a step bound: C1={c[0]:.2f} C2={c[1]:.2f} C3={c[2]:.2f}; fresh run {n_ops} ops, "
           f"worst ratio {worst:.2f} (<=1.25), {len(violations)} violations {_status(bound_ok)}")

    xs, ys = _n_sweep()
    _, slope_n, r2_n = affine_fit(xs, ys)
    n_ok = r2_n >= 0.9 and slope_n > 0
    report(f"CRITERION 4b n-sweep (counter, k=1): n={xs} max={ys} slope={slope_n:.2f} R2={r2_n:.3f} (>=0.9) "
           f"{_status(n_ok)}")

    ks, kws, maxima = _kw_sweep()
    _, slope_kw, r2_kw = affine_fit(kws, maxima)
    half = len(ks) // 2
    lo = affine_fit(kws[:half], maxima[:half])[1]
    hi = affine_fit(kws[half:], maxima[half:])[1]
    stable = lo > 0 and hi > 0 and max(lo, hi) / min(lo, hi) <= 2
    kw_ok = r2_kw >= 0.9 and stable
    report(f"CRITERION 4c kw-sweep (set, n=8): k={ks} max={maxima} slope={slope_kw:.2f} R2={r2_kw:.3f} (>=0.9), "
           f"half slopes {lo:.2f}/{hi:.2f} (within 2x) {_status(kw_ok)}")
    elapsed = time.perf_counter() - t0
    time_ok = elapsed < 300
    report(f"CRITERION 4 step bound overall: {elapsed:.1f}s (<300s) "
           f"{_status(bound_ok and n_ok and kw_ok and time_ok)}")
    assert bound_ok, violations[:5]
    assert n_ok and kw_ok and time_ok


# -- 5: negative controls -------------------------------------------------------------------------

def _mutant_detected(runtime_cls) -> list[str]:
    found = []
    for label, factory, programs, _ in C3_CASES:
        r = _c3_explore(factory, programs, 2, runtime_cls=runtime_cls, stop_at_first=True)
        if not r.ok:
            found.append(f"probes[{label}]: {','.join(sorted(r.failures_by_probe))}")
            break
    for name in ("counter", "stack", "queue", "set"):
        for i in range(HISTORIES_C2):
            rec, model = _c2_history(name, i, runtime_cls)
            if _c2_check(rec, model):
                found.append(f"histories[{name} #{i}]")
                break
    return found


@pytest.mark.parametrize("label,runtime_cls", [("no flush seq guard", NoSeqGuardRuntime),
                                                ("no old-value slot", NoOldSlotRuntime)])
def test_criterion_5_negative_controls(report, label, runtime_cls):
    found = _mutant_detected(runtime_cls)
    report(f"CRITERION 5 negative control '{label}': detected by {found or 'nothing'} {_status(bool(found))}")
    assert found


# -- 6: LL/SC unit properties under real concurrency -------------------------------------------------

TRIALS_C6 = 10_000
THREADS_C6 = 4


def _run_trials(body) -> int:
    """Run ``body(trial, worker)`` for every trial on persistent threads; returns violations."""
    violations = [0]
    state: dict = {}
    start = threading.Barrier(THREADS_C6 + 1)
    done = threading.Barrier(THREADS_C6 + 1)

    def worker(w: int) -> None:
        for trial in range(TRIALS_C6):
            start.wait()
            body(trial, w, state)
            done.wait()

    threads = [threading.Thread(target=worker, args=(w,)) for w in range(THREADS_C6)]
    for t in threads:
        t.start()
    for trial in range(TRIALS_C6):
        state.clear()
        state.update(setup=True)
        body(trial, None, state)  # coordinator prepares the trial
        start.wait()
        done.wait()
        if not state["check"]():
            violations[0] += 1
    for t in threads:
        t.join()
    return violations[0]


def _exactly_one_winner(trial, w, state):
    if w is None:
        cell = llsc.VersionedCell(0)
        snap = llsc.ll(cell)
        wins = []
        state.update(cell=cell, snap=snap, wins=wins,
                     check=lambda: len(wins) == 1 and cell.peek().payload == wins[0] and cell.peek().tag == 1)
        return
    if llsc.sc(state["cell"], state["snap"], w):
        state["wins"].append(w)


def _tag_monotonicity(trial, w, state):
    if w is None:
        cell = llsc.VersionedCell(0)
        seen: list[list[int]] = [[] for _ in range(THREADS_C6)]
        successes = [0] * THREADS_C6

        def check():
            mono = all(a <= b for tags in seen for a, b in zip(tags, tags[1:]))
            return mono and cell.peek().tag == sum(successes) == cell.peek().payload
        state.update(cell=cell, seen=seen, successes=successes, check=check)
        return
    cell = state["cell"]
    for _ in range(3):
        snap = llsc.ll(cell)
        state["seen"][w].append(snap.tag)
        if llsc.sc(cell, snap, snap.payload + 1):
            state["successes"][w] += 1


def _vl_semantics(trial, w, state):
    if w is None:
        cell = llsc.VersionedCell(0)
        snap = llsc.ll(cell)
        results = []
        writers = random.Random(trial).sample(range(THREADS_C6), random.Random(trial).randrange(THREADS_C6))
        state.update(cell=cell, snap=snap, results=results, writers=set(writers),
                     check=lambda: all(ok == (changed == 0) for ok, changed in results)
                     and (cell.peek().tag > 0) == bool(writers))
        return
    cell, snap = state["cell"], state["snap"]
    if w in state["writers"]:
        llsc.sc(cell, llsc.ll(cell), w)
    # vl on the coordinator's snapshot is true iff no sc has succeeded yet
    tag_before = cell.peek().tag
    ok = llsc.vl(cell, snap)
    tag_after = cell.peek().tag
    if tag_before == tag_after:
        state["results"].append((ok, tag_after))


def test_criterion_6_llsc_properties(report):
    t0 = time.perf_counter()
    counts = {}
    with switch_interval(1e-6):
        for name, body in (("exactly-one-winner", _exactly_one_winner),
                           ("tag-monotonicity", _tag_monotonicity),
                           ("vl-semantics", _vl_semantics)):
            counts[name] = _run_trials(body)
    elapsed = time.perf_counter() - t0
    ok = not any(counts.values()) and elapsed < 30
    report(f"CRITERION 6 LL/SC: {TRIALS_C6} concurrent trials x 3 properties, violations {counts}, "
           f"{elapsed:.1f}s (<30s) {_status(ok)}")
    assert not any(counts.values())
    assert elapsed < 30
