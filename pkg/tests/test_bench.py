from __future__ import annotations

import random

import numpy as np
import pytest

from luc.bench import (
    BenchConfig,
    BenchResult,
    CasRetryRuntime,
    ConfigError,
    LockRuntime,
    OpSample,
    affine_fit,
    bound_violations,
    cross_count,
    emit_csv,
    fit_step_bound,
    interval_contention,
    parse_mix,
    parse_think,
    read_csv,
    run_bench,
)
from luc.harness.checker import check_linearizable
from luc.harness.models import model_for
from luc.harness.record import random_programs
from luc.harness.stepper import random_chooser, run_schedule
from luc.objmodel import CounterObject, QueueObject, RequestDescriptor, SortedSetObject, StackObject


def test_single_process_cost_is_constant():
    small = run_bench(BenchConfig(object="counter", threads=1, ops=100, count_steps=True))
    large = run_bench(BenchConfig(object="counter", threads=1, ops=10_000, count_steps=True))
    assert small.max_accesses == large.max_accesses
    assert set(large.histogram) == {large.max_accesses}
    assert all(s.measured_k == 1 for s in large.samples)


@pytest.mark.parametrize("variant", ["luc", "lock", "casretry"])
@pytest.mark.parametrize("mode", ["threads", "steps"])
def test_histogram_total_matches_counter(variant, mode):
    r = run_bench(BenchConfig(object="stack", threads=3, ops=100, variant=variant, mode=mode,
                              count_steps=True, think="exp:5"))
    assert len(r.samples) == 300
    assert sum(a * c for a, c in r.histogram.items()) == r.total_counted


@pytest.mark.parametrize("obj", ["counter", "stack", "queue", "set"])
def test_cross_count_agrees(obj):
    site, prim = cross_count(BenchConfig(object=obj, threads=3, ops=40))
    assert site == prim
    assert site["fad"] == 120


def test_cross_count_casretry():
    site, prim = cross_count(BenchConfig(object="counter", threads=2, ops=30, variant="casretry"))
    assert site == prim == {"ll": 60, "sc": 60}


def test_config_errors():
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(threads=0))
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(object="stack", mix={"push": 0.7, "pop": 0.7}))
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(object="stack", mix={"dequeue": 1.0}))
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(variant="rcu"))
    with pytest.raises(ConfigError):
        run_bench(BenchConfig(object="tree"))
    with pytest.raises(ConfigError):
        parse_mix("push")
    with pytest.raises(ConfigError):
        parse_think("gamma:1")


def test_think_distributions():
    rng = random.Random(0)
    assert parse_think("0")(rng) == 0
    assert parse_think("const:3")(rng) == 3
    assert 2 <= parse_think("uniform:2:4")(rng) <= 4
    draws = [parse_think("exp:10")(rng) for _ in range(4000)]
    assert 9 < np.mean(draws) < 11
    assert parse_mix("push=0.25, pop=0.75") == {"push": 0.25, "pop": 0.75}


def test_interval_contention():
    samples = [OpSample(1, "x", 0, 10, 0, 0), OpSample(2, "x", 5, 6, 0, 0),
               OpSample(3, "x", 10, 12, 0, 0), OpSample(1, "x", 20, 30, 0, 0)]
    interval_contention(samples)
    # touching endpoints do not overlap
    assert [s.measured_k for s in samples] == [2, 2, 1, 1]


def test_lp_fit_is_an_upper_envelope():
    cfg = BenchConfig(object="queue", threads=4, ops=100, mode="steps", think="exp:30")
    results = [run_bench(cfg)]
    c = fit_step_bound(results)
    assert all(v >= 0 for v in c)
    assert bound_violations(results, c, slack=1.0 + 1e-9) == []


def test_affine_fit_exact_line():
    a, b, r2 = affine_fit([1, 2, 4, 8], [5, 7, 11, 19])
    assert (round(a, 6), round(b, 6), round(r2, 6)) == (3, 2, 1)


def test_csv_round_trip(tmp_path):
    r = run_bench(BenchConfig(object="counter", threads=2, ops=3, count_steps=True))
    path = tmp_path / "out.csv"
    emit_csv(r, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "variant,object,n,measured_k,w_bound,accesses,latency_ns"
    assert len(lines) == 7
    assert read_csv(path) == r.rows()


def test_csv_empty_result(tmp_path):
    r = BenchResult(BenchConfig(), 2, [], 0.0)
    emit_csv(r, tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "variant,object,n,measured_k,w_bound,accesses,latency_ns\n"


def test_csv_io_error_surfaces(tmp_path):
    r = BenchResult(BenchConfig(), 2, [], 0.0)
    with pytest.raises(OSError):
        emit_csv(r, tmp_path / "missing" / "x.csv")


@pytest.mark.parametrize("cls,make", [
    (LockRuntime, lambda: QueueObject([1, 2])),
    (LockRuntime, lambda: SortedSetObject(4)),
    (CasRetryRuntime, CounterObject),
    (CasRetryRuntime, lambda: StackObject([1])),
])
def test_baselines_are_linearizable(cls, make):
    obj = make()
    model = model_for(obj)
    for seed in range(40):
        programs = {p: [RequestDescriptor(op, a, p) for op, a in ops]
                    for p, ops in random_programs(obj, 3, 8, random.Random(seed)).items()}
        system = run_schedule(cls(3, make()), programs, random_chooser(seed))
        assert check_linearizable(system.history, model)


def test_casretry_refuses_queue_directly():
    with pytest.raises(ConfigError):
        CasRetryRuntime(2, QueueObject())
