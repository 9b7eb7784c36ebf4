"""Shared-access and throughput measurements for L-UC and two baselines.

Variants:

``luc``
    The wait-free universal construction.
``lock``
    The sequential object behind one test-and-set spinlock.
``casretry``
    Lock-free CAS-retry loops for the counter and a Treiber stack; the queue
    and set have no lock-free counterpart here and use the lock variant.

In ``threads`` mode each process is an OS thread and think time is in
microseconds. In ``steps`` mode the processes run on the step machine under
a seeded random schedule, and think time is counted in global steps; this is
the mode used for the scaling checks because contention there does not
depend on the interpreter's thread switching.

An access is one shared-memory word. Loading the agreement record costs its
size in words, since with indirection it is copied; every other primitive
costs one.
"""

from __future__ import annotations

import bisect
import csv
import math
import random
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import llsc
from .core import UniversalConstruction
from .harness.record import switch_interval
from .harness.stepper import StepSystem, random_chooser
from .objmodel import (
    CounterObject,
    RequestDescriptor,
    SequentialObject,
    StackObject,
    UnknownVariable,
    make_object,
)

VARIANTS = ("luc", "lock", "casretry")
CSV_FIELDS = ("variant", "object", "n", "measured_k", "w_bound", "accesses", "latency_ns")


class ConfigError(ValueError):
    pass


# -- baselines -------------------------------------------------------------------

class _Var:
    __slots__ = ("value",)

    def __init__(self, value=None):
        self.value = value


class LockRuntime:
    """Coarse-grained baseline: a spinlock around direct sequential execution."""

    def __init__(self, n: int, obj: SequentialObject, hook=None) -> None:
        self.n = n
        self.obj = obj
        self.hook = hook
        self.roots = {k: _Var(v) for k, v in obj.setup(_Var).items()}
        self._lock = threading.Lock()
        self._pid = 0

    def _step(self, kind: str) -> None:
        if self.hook is not None:
            self.hook(self._pid, kind, 1)

    def _var(self, x) -> _Var:
        if isinstance(x, _Var):
            return x
        try:
            return self.roots[x]
        except (KeyError, TypeError):
            raise UnknownVariable(x) from None

    def read(self, x):
        self._step("read")
        return self._var(x).value

    def write(self, x, value):
        self._step("write")
        self._var(x).value = value

    def alloc(self):
        self._step("alloc")
        return _Var()

    def apply_op(self, pid: int, req: RequestDescriptor):
        hook = self.hook
        while True:
            if hook is not None:
                hook(pid, "lock_try", 1)
            if self._lock.acquire(blocking=False):
                break
            time.sleep(0)
        try:
            self._pid = pid
            return self.obj.dispatch(req, self)
        finally:
            if hook is not None:
                hook(pid, "unlock", 1)
            self._lock.release()

    def snapshot_value(self, root: str):
        return self.roots[root].value


class CasRetryRuntime:
    """Lock-free CAS-retry counter and Treiber stack over LL/SC cells."""

    def __init__(self, n: int, obj: SequentialObject, hook=None) -> None:
        if not isinstance(obj, (CounterObject, StackObject)):
            raise ConfigError("casretry supports counter and stack only")
        self.n = n
        self.obj = obj
        self.hook = hook
        if isinstance(obj, CounterObject):
            self.cell = llsc.VersionedCell(obj.start)
        else:
            top = None
            for v in obj.initial:
                top = (v, top)
            self.cell = llsc.VersionedCell(top)

    def _step(self, pid, kind):
        if self.hook is not None:
            self.hook(pid, kind, 1)

    def apply_op(self, pid: int, req: RequestDescriptor):
        op = req.opcode
        while True:
            self._step(pid, "ll")
            snap = llsc.ll(self.cell)
            cur = snap.payload
            if op == "fetch_inc":
                new, ret = cur + 1, cur
            elif op == "push":
                new, ret = (req.args[0], cur), True
            elif op == "pop":
                if cur is None:
                    return None
                new, ret = cur[1], cur[0]
            else:
                raise ConfigError(f"casretry cannot run {op!r}")
            self._step(pid, "sc")
            if llsc.sc(self.cell, snap, new):
                return ret

    def snapshot_value(self, root: str):
        return self.cell.peek().payload


def make_runtime(variant: str, n: int, obj: SequentialObject):
    if variant == "luc":
        return UniversalConstruction(n, obj)
    if variant == "lock":
        return LockRuntime(n, obj)
    if variant == "casretry":
        if isinstance(obj, (CounterObject, StackObject)):
            return CasRetryRuntime(n, obj)
        return LockRuntime(n, obj)
    raise ConfigError(f"unknown variant {variant!r}")


# -- configuration ---------------------------------------------------------------

def parse_think(text: str) -> Callable[[random.Random], float]:
    """``0`` | ``const:X`` | ``exp:MEAN`` | ``uniform:LO:HI``."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            value = float(parts[0])
            return lambda rng: value
        kind, *nums = parts
        nums = [float(x) for x in nums]
        if kind == "const" and len(nums) == 1:
            return lambda rng: nums[0]
        if kind == "exp" and len(nums) == 1:
            return lambda rng: rng.expovariate(1.0 / nums[0]) if nums[0] > 0 else 0.0
        if kind == "uniform" and len(nums) == 2:
            return lambda rng: rng.uniform(nums[0], nums[1])
    except ValueError:
        pass
    raise ConfigError(f"bad think-time distribution {text!r}")


def parse_mix(text: Optional[str]) -> Optional[dict[str, float]]:
    if not text:
        return None
    mix = {}
    for part in text.split(","):
        try:
            op, weight = part.split("=")
            mix[op.strip()] = float(weight)
        except ValueError:
            raise ConfigError(f"bad mix entry {part!r}") from None
    return mix


@dataclass
class BenchConfig:
    object: str = "counter"
    threads: int = 1
    ops: int = 1000
    mix: Optional[dict[str, float]] = None
    think: str = "0"
    variant: str = "luc"
    seed: int = 0
    count_steps: bool = True
    mode: str = "threads"
    object_args: dict = field(default_factory=dict)

    def validate(self) -> SequentialObject:
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.ops < 0:
            raise ConfigError("ops must be >= 0")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.mode not in ("threads", "steps"):
            raise ConfigError("mode must be threads or steps")
        try:
            obj = make_object(self.object, **self.object_args)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        if self.mix is not None:
            unknown = set(self.mix) - set(obj.opcodes)
            if unknown:
                raise ConfigError(f"{self.object} has no opcodes {sorted(unknown)}")
            if any(w < 0 for w in self.mix.values()) or not math.isclose(sum(self.mix.values()), 1.0):
                raise ConfigError("mix weights must be non-negative and sum to 1")
        parse_think(self.think)
        return obj


# -- results ---------------------------------------------------------------------

@dataclass
class OpSample:
    pid: int
    opcode: str
    start: int
    end: int
    accesses: int
    latency_ns: int
    measured_k: int = 0


@dataclass
class BenchResult:
    config: BenchConfig
    w_bound: int
    samples: list[OpSample]
    wall_seconds: float
    total_counted: int = 0

    @property
    def histogram(self) -> Counter:
        return Counter(s.accesses for s in self.samples)

    @property
    def max_accesses(self) -> int:
        return max((s.accesses for s in self.samples), default=0)

    @property
    def mean_accesses(self) -> float:
        return float(np.mean([s.accesses for s in self.samples])) if self.samples else 0.0

    @property
    def throughput(self) -> float:
        return len(self.samples) / self.wall_seconds if self.wall_seconds > 0 else float("inf")

    def rows(self) -> list[tuple]:
        c = self.config
        return [(c.variant, c.object, c.threads, s.measured_k, self.w_bound, s.accesses, s.latency_ns)
                for s in self.samples]

    def fitted_constants(self) -> tuple[float, float, float]:
        return fit_step_bound([self])

    def summary(self) -> str:
        ks = [s.measured_k for s in self.samples]
        c1, c2, c3 = self.fitted_constants()
        return (f"{self.config.variant} {self.config.object} n={self.config.threads} "
                f"ops={len(self.samples)} max={self.max_accesses} mean={self.mean_accesses:.1f} "
                f"k_max={max(ks, default=0)} throughput={self.throughput:.0f}/s "
                f"fit: C1={c1:.2f} C2={c2:.2f} C3={c3:.2f}")


def interval_contention(samples: Sequence[OpSample]) -> None:
    """Set ``measured_k``: how many processes had an operation open during each op."""
    by_pid: dict[int, list[OpSample]] = {}
    for s in sorted(samples, key=lambda s: s.start):
        by_pid.setdefault(s.pid, []).append(s)
    starts = {pid: [s.start for s in ops] for pid, ops in by_pid.items()}
    for s in samples:
        k = 0
        for pid, ops in by_pid.items():
            # latest op of pid starting before s ends; overlap iff it ends after s starts
            i = bisect.bisect_left(starts[pid], s.end) - 1
            if i >= 0 and ops[i].end > s.start:
                k += 1
        s.measured_k = max(k, 1)


def run_bench(config: BenchConfig) -> BenchResult:
    obj = config.validate()
    rt = make_runtime(config.variant, config.threads, obj)
    rng = random.Random(config.seed)
    per_pid = {pid: [obj.random_request(rng, pid, config.mix) for _ in range(config.ops)]
               for pid in range(1, config.threads + 1)}
    think = parse_think(config.think)
    think_rng = random.Random(config.seed + 1)
    if config.mode == "steps":
        samples, wall, total = _run_steps(rt, per_pid, think, think_rng, config.seed)
    else:
        samples, wall, total = _run_threads(rt, per_pid, think, config.seed, config.count_steps)
    interval_contention(samples)
    return BenchResult(config, obj.w, samples, wall, total)


def _run_threads(rt, per_pid, think, seed, count_steps):
    counters = {pid: [0] for pid in per_pid}
    if count_steps:
        def hook(pid, kind, cost):
            counters[pid][0] += cost
        rt.hook = hook
    samples: list[OpSample] = []
    barrier = threading.Barrier(len(per_pid))
    errors: list[BaseException] = []

    def worker(pid):
        rng = random.Random(seed * 1000 + pid)
        box = counters[pid]
        out = []
        try:
            barrier.wait()
            for req in per_pid[pid]:
                pause = think(rng)
                if pause > 0:
                    time.sleep(pause * 1e-6)
                before = box[0]
                t0 = time.perf_counter_ns()
                rt.apply_op(pid, req)
                t1 = time.perf_counter_ns()
                out.append(OpSample(pid, req.opcode, t0, t1, box[0] - before, t1 - t0))
        except BaseException as exc:  # noqa: BLE001 - re-raised below
            errors.append(exc)
        samples.extend(out)

    threads = [threading.Thread(target=worker, args=(pid,)) for pid in per_pid]
    t0 = time.perf_counter()
    with switch_interval(1e-5):
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    wall = time.perf_counter() - t0
    if errors:
        raise errors[0]
    return samples, wall, sum(c[0] for c in counters.values())


def _run_steps(rt, per_pid, think, think_rng, seed):
    def think_steps(pid, k):
        return int(round(think(think_rng)))

    step_clock: list[int] = []
    system = StepSystem(rt, per_pid, think=think_steps, max_steps=10**9,
                        after_step=lambda sys_, rec: step_clock.append(sys_.clock))
    t0 = time.perf_counter()
    try:
        system.run(random_chooser(seed))
    finally:
        system.close()
    wall = time.perf_counter() - t0
    # cumulative access cost per pid, indexed by clock
    cum: dict[int, list[int]] = {pid: [0] for pid in per_pid}
    clocks: dict[int, list[int]] = {pid: [0] for pid in per_pid}
    for t, rec in zip(step_clock, system.steps):
        cum[rec.pid].append(cum[rec.pid][-1] + rec.cost)
        clocks[rec.pid].append(t)
    samples = []
    open_inv = {}
    for ev in system.history:
        if ev.kind == "invoke":
            open_inv[ev.pid] = ev
            continue
        inv = open_inv.pop(ev.pid)
        cs, cc = clocks[ev.pid], cum[ev.pid]
        lo = bisect.bisect_right(cs, inv.time) - 1
        hi = bisect.bisect_right(cs, ev.time) - 1
        samples.append(OpSample(ev.pid, ev.opcode, inv.time, ev.time, cc[hi] - cc[lo], 0))
    total = sum(rec.cost for rec in system.steps)
    return samples, wall, total


# -- fitting -----------------------------------------------------------------------

def _design(results: Sequence[BenchResult]):
    rows, ys = [], []
    for r in results:
        for s in r.samples:
            rows.append((r.config.threads, s.measured_k * r.w_bound, 1.0))
            ys.append(s.accesses)
    return np.asarray(rows, dtype=float), np.asarray(ys, dtype=float)


def fit_step_bound(results: Sequence[BenchResult]) -> tuple[float, float, float]:
    """Smallest non-negative ``(C1, C2, C3)`` with ``C1*n + C2*k*w + C3`` above every sample.

    Solved as a linear program minimising the summed bound over the samples.
    """
    from scipy.optimize import linprog

    X, y = _design(results)
    if len(y) == 0:
        return 0.0, 0.0, 0.0
    # collapse duplicate design points to their maximum
    keyed: dict[tuple, float] = {}
    for row, v in zip(map(tuple, X), y):
        keyed[row] = max(v, keyed.get(row, -np.inf))
    X = np.asarray(list(keyed), dtype=float)
    y = np.asarray(list(keyed.values()), dtype=float)
    res = linprog(c=X.sum(axis=0), A_ub=-X, b_ub=-y, bounds=[(0, None)] * 3, method="highs")
    if not res.success:
        raise RuntimeError(f"bound fit failed: {res.message}")
    return tuple(float(v) for v in res.x)


def bound_violations(results: Sequence[BenchResult], constants, slack: float = 1.25) -> list[OpSample]:
    c1, c2, c3 = constants
    bad = []
    for r in results:
        for s in r.samples:
            if s.accesses > (c1 * r.config.threads + c2 * s.measured_k * r.w_bound + c3) * slack:
                bad.append(s)
    return bad


def affine_fit(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = a + b x``; returns ``(a, b, r_squared)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


# -- CSV -----------------------------------------------------------------------------

def emit_csv(result: BenchResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        writer.writerows(result.rows())


def read_csv(path) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"unexpected header {header}")
        return [(v, o, int(n), int(k), int(w), int(a), int(lat)) for v, o, n, k, w, a, lat in reader]


def cross_count(config: BenchConfig) -> tuple[Counter, Counter]:
    """Run single-threaded with both counters on; returns (call-site, primitive) totals.

    Call-site kinds are mapped onto the primitive that serves them so the two
    tallies are directly comparable.
    """
    obj = config.validate()
    rt = make_runtime(config.variant, config.threads, obj)
    site: Counter = Counter()
    kind_map = {
        "ll_S": "ll", "ll_item": "ll", "ll_new_item": "ll", "flush_read": "ll", "read_rvals": "ll",
        "sc_item": "sc", "sc_S": "sc", "vl_S": "vl", "cas_list": "cas", "fad": "fad",
        "read_list": "read", "read_toggles": "read", "read_announce": "read", "announce": "write",
        "ll": "ll", "sc": "sc",
    }

    def hook(pid, kind, cost):
        site[kind_map.get(kind, kind)] += 1

    rt.hook = hook
    rng = random.Random(config.seed)
    with llsc.primitive_counts() as prim:
        for k in range(config.ops * config.threads):
            pid = 1 + k % config.threads
            rt.apply_op(pid, obj.random_request(rng, pid, config.mix))
    return site, Counter(prim)
