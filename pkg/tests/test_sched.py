import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fatqram.schedule import compile_pipeline
from fatqram.sched import (
    QramServer, QueryRequest, ScheduleEntry, SyntheticWorkload, brute_force_optimal,
    fifo_schedule, schedule_in_order, synthetic_bench, total_latency, utilization_series,
)
from fatqram.topology import Arch, TreeSpec

arrivals = st.one_of(st.integers(0, 80).map(float), st.floats(0, 80, allow_nan=False))
request_lists = st.lists(arrivals, min_size=1, max_size=6).map(
    lambda ts: [QueryRequest(i, t) for i, t in enumerate(ts)]
)
servers = st.builds(QramServer, st.sampled_from(list(Arch)), st.integers(1, 5))


def test_server_parameters():
    ft = QramServer("fat-tree", 4)
    assert (ft.initiation_interval, ft.parallelism, ft.query_duration) == (10, 4, 39)
    bb = QramServer("bb", 3)
    assert (bb.initiation_interval, bb.parallelism, bb.query_duration) == (25, 1, 25)


def test_single_and_double_bb():
    bb = QramServer("bb", 3)
    [e] = fifo_schedule([QueryRequest(0, 0)], bb)
    assert e.latency == 25
    es = fifo_schedule([QueryRequest(0, 0), QueryRequest(1, 0)], bb)
    assert [e.latency for e in es] == [25, 50]
    assert total_latency(es) == 75
    assert total_latency([]) == 0


@pytest.mark.parametrize("n", range(1, 7))
def test_burst_makespan_matches_pipeline(n):
    es = fifo_schedule([QueryRequest(i, 0) for i in range(n)], QramServer("fat-tree", n))
    assert max(e.finish for e in es) == 10 * (n - 1) + 10 * n - 1 == len(compile_pipeline(TreeSpec(n), n))


def test_ties_broken_by_id():
    es = fifo_schedule([QueryRequest(5, 1.0), QueryRequest(2, 1.0)], QramServer("bb", 1))
    assert [e.id for e in es] == [2, 5]


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        fifo_schedule([QueryRequest(1, 0), QueryRequest(1, 3)], QramServer("bb", 1))
    with pytest.raises(ValueError):
        QueryRequest(0, -1)


@settings(max_examples=200, deadline=None)
@given(request_lists, servers)
def test_schedule_invariants(reqs, server):
    es = fifo_schedule(reqs, server)
    starts = [e.start for e in es]
    assert starts == sorted(starts)
    for a, b in zip(es, es[1:]):
        assert b.start - a.start >= server.initiation_interval - 1e-9
    for e in es:
        assert e.start >= e.arrival
        assert e.latency == pytest.approx(e.start + server.query_duration - e.arrival)
    # in-flight bound at every start instant
    for e in es:
        live = sum(1 for o in es if o.start <= e.start < o.finish)
        assert live <= server.parallelism
    if server.arch is Arch.FAT_TREE:
        anchor = min(r.arrival for r in reqs)
        for e in es:
            assert (e.start - anchor) / 10 == pytest.approx(round((e.start - anchor) / 10))


@settings(max_examples=200, deadline=None)
@given(request_lists, servers)
def test_fifo_equals_brute_force(reqs, server):
    best, order = brute_force_optimal(reqs, server)
    assert total_latency(fifo_schedule(reqs, server)) == best
    by_id = {r.id: r for r in reqs}
    assert total_latency(schedule_in_order([by_id[i] for i in order], server)) == best


@settings(max_examples=100, deadline=None)
@given(request_lists, servers, st.data())
def test_exchange_step(reqs, server, data):
    # swapping an adjacent out-of-order pair never makes things worse
    order = data.draw(st.permutations(reqs))
    base = total_latency(schedule_in_order(order, server))
    for x in range(len(order) - 1):
        if order[x].arrival > order[x + 1].arrival:
            swapped = list(order)
            swapped[x], swapped[x + 1] = swapped[x + 1], swapped[x]
            assert total_latency(schedule_in_order(swapped, server)) <= base + 1e-9


def test_adversarial_ids():
    reqs = [QueryRequest(0, 30), QueryRequest(1, 0), QueryRequest(2, 12)]
    server = QramServer("fat-tree", 3)
    assert total_latency(fifo_schedule(reqs, server)) == brute_force_optimal(reqs, server)[0]


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_optimal([QueryRequest(i, 0) for i in range(9)], QramServer("bb", 1))
    assert brute_force_optimal([], QramServer("bb", 1)) == (0.0, [])


def test_bench_bb_examples():
    bb = QramServer("bb", 3)
    r = synthetic_bench(SyntheticWorkload(1, 10, 0), bb)
    assert r.makespan == 250 and r.utilization == 1
    r = synthetic_bench(SyntheticWorkload(1, 10, 25), bb)
    assert r.utilization == pytest.approx(0.5)


def test_bench_fat_tree_growth():
    ft, bb = QramServer("fat-tree", 10), QramServer("bb", 10)
    f = [synthetic_bench(SyntheticWorkload(p), ft).makespan for p in range(1, 11)]
    b = [synthetic_bench(SyntheticWorkload(p), bb).makespan for p in range(1, 11)]
    assert all(y - x == 10 for x, y in zip(f, f[1:]))
    assert all(y - x >= bb.query_duration for x, y in zip(b, b[1:]))
    # with p = m and no processing, utilization tends to T / interval-grid period
    us = [synthetic_bench(SyntheticWorkload(10, rounds), ft).utilization for rounds in (10, 100, 1000)]
    assert us == sorted(us) and us[-1] > 0.98


def test_bench_grants_respect_dependency():
    r = synthetic_bench(SyntheticWorkload(2, 4, d=7), QramServer("bb", 2))
    for g in r.grants:
        for a, b in zip(g, g[1:]):
            assert b >= a + 17 + 7


def test_workload_validation():
    with pytest.raises(ValueError):
        SyntheticWorkload(0)
    with pytest.raises(ValueError):
        SyntheticWorkload(1, d=-1)


def test_series_grid():
    rows = utilization_series([0, 1, 2], [1, 8, 16], N=256, rounds=3)
    assert len(rows) == 2 * 3 * 3
    assert all(0 <= r["utilization"] <= 1 for r in rows)
    with pytest.raises(ValueError):
        utilization_series([-1], [1])
