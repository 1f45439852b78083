"""FIFO query scheduling, an exhaustive optimality oracle and a workload benchmark.

Time is measured in circuit layers.  A server admits a new query no sooner
than one initiation interval after the previous start and only while fewer
than ``m`` queries are in flight.  Fat-Tree starts are additionally snapped
to the 10-layer pipeline grid, whose clock starts at the earliest arrival.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .topology import Arch

MAX_BRUTE_FORCE = 8


@dataclass(frozen=True)
class QueryRequest:
    id: int | str
    arrival: float

    def __post_init__(self):
        if not math.isfinite(self.arrival) or self.arrival < 0:
            raise ValueError(f"arrival must be finite and >= 0, got {self.arrival}")


@dataclass(frozen=True)
class ScheduleEntry:
    id: int | str
    arrival: float
    start: float
    finish: float

    @property
    def latency(self) -> float:
        return self.finish - self.arrival

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "arrival": self.arrival,
            "start": self.start,
            "finish": self.finish,
            "latency": self.latency,
        }


@dataclass(frozen=True)
class QramServer:
    arch: Arch
    n: int
    initiation_interval: float = field(init=False)
    parallelism: int = field(init=False)
    query_duration: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "arch", Arch(self.arch))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.arch is Arch.FAT_TREE:
            T, interval, m = 10 * self.n - 1, 10, self.n
        else:
            T = 8 * self.n + 1
            interval, m = T, 1
        object.__setattr__(self, "query_duration", float(T))
        object.__setattr__(self, "initiation_interval", float(interval))
        object.__setattr__(self, "parallelism", m)

    @property
    def gridded(self) -> bool:
        return self.arch is Arch.FAT_TREE


def _validate(requests: Sequence[QueryRequest]) -> None:
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("request ids must be unique")


class _Admission:
    """Incremental greedy-earliest admission shared by every scheduler here."""

    def __init__(
        self, server: QramServer, duration: float | None = None, anchor: float | None = None
    ):
        self.server = server
        self.duration = server.query_duration if duration is None else duration
        self.anchor = anchor
        self.last_start: float | None = None
        self.finishes: list[float] = []  # min-heap of in-flight finish times

    def _snap(self, t: float) -> float:
        if not self.server.gridded or self.anchor is None:
            return t
        step = self.server.initiation_interval
        k = math.ceil((t - self.anchor) / step - 1e-12)
        return self.anchor + k * step

    def admit(self, arrival: float) -> tuple[float, float]:
        s = self.server
        t = arrival
        if self.last_start is not None:
            t = max(t, self.last_start + s.initiation_interval)
        while True:
            t = self._snap(t)
            while self.finishes and self.finishes[0] <= t:
                heapq.heappop(self.finishes)
            if len(self.finishes) < s.parallelism:
                break
            t = self.finishes[0]
        if self.anchor is None:
            self.anchor = t
        self.last_start = t
        finish = t + self.duration
        heapq.heappush(self.finishes, finish)
        return t, finish


def schedule_in_order(requests: Sequence[QueryRequest], server: QramServer) -> list[ScheduleEntry]:
    """Greedy-earliest schedule serving ``requests`` in the given order.

    The pipeline clock starts at the earliest arrival of the instance, so
    the start grid is the same whatever order is tried (and coincides with
    the first FIFO start).
    """
    anchor = min((r.arrival for r in requests), default=None)
    adm = _Admission(server, anchor=anchor)
    out = []
    for r in requests:
        start, finish = adm.admit(r.arrival)
        out.append(ScheduleEntry(r.id, r.arrival, start, finish))
    return out


def _fifo_key(r: QueryRequest):
    return (r.arrival, str(type(r.id)), r.id)


def fifo_schedule(requests: Sequence[QueryRequest], server: QramServer) -> list[ScheduleEntry]:
    """Serve requests by arrival time, ties broken by id."""
    _validate(requests)
    return schedule_in_order(sorted(requests, key=_fifo_key), server)


def total_latency(entries: Iterable[ScheduleEntry]) -> float:
    """Sum of ``finish - arrival``, exactly rounded so service order cannot
    perturb the last bit."""
    terms = []
    for e in entries:
        terms += (e.finish, -e.arrival)
    return math.fsum(terms)


def brute_force_optimal(
    requests: Sequence[QueryRequest], server: QramServer
) -> tuple[float, list]:
    """Minimum total latency over every service order, plus an argmin order of ids."""
    if len(requests) > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE} requests, got {len(requests)}")
    _validate(requests)
    if not requests:
        return 0.0, []
    best, best_order = math.inf, None
    for perm in itertools.permutations(requests):
        tot = total_latency(schedule_in_order(perm, server))
        if tot < best:
            best, best_order = tot, [r.id for r in perm]
    return best, best_order


@dataclass(frozen=True)
class SyntheticWorkload:
    p: int
    rounds: int = 10
    d: float = 0.0
    t1: float | None = None  # defaults to the server's query duration

    def __post_init__(self):
        if self.p < 1 or self.rounds < 1 or self.d < 0:
            raise ValueError("need p >= 1, rounds >= 1 and d >= 0")


@dataclass
class BenchResult:
    makespan: float
    utilization: float
    completion: list[float]
    grants: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "utilization": self.utilization,
            "completion": self.completion,
        }


def synthetic_bench(workload: SyntheticWorkload, server: QramServer) -> BenchResult:
    """Event-driven run of ``p`` algorithms alternating queries and processing.

    Each algorithm issues its next query ``d`` layers after the previous one
    returns; outstanding requests are granted FIFO.  An algorithm completes
    after its final processing phase.
    """
    T = server.query_duration if workload.t1 is None else float(workload.t1)
    if T <= 0:
        raise ValueError("query duration must be positive")
    adm = _Admission(server, T, anchor=0.0)

    # min-heap of (request time, algorithm id, round)
    events = [(0.0, a, 0) for a in range(workload.p)]
    heapq.heapify(events)
    grants: list[list[float]] = [[] for _ in range(workload.p)]
    completion = [0.0] * workload.p
    busy = 0.0
    while events:
        t, a, rnd = heapq.heappop(events)
        start, finish = adm.admit(t)
        grants[a].append(start)
        busy += T
        done = finish + workload.d
        if rnd + 1 < workload.rounds:
            heapq.heappush(events, (done, a, rnd + 1))
        else:
            completion[a] = done
    makespan = max(completion)
    util = busy / (server.parallelism * makespan) if makespan > 0 else 0.0
    return BenchResult(makespan, util, completion, grants)


def utilization_series(
    d_over_t1: Sequence[float],
    p_range: Sequence[int],
    archs: Sequence[Arch | str] = (Arch.BB, Arch.FAT_TREE),
    N: int = 1024,
    rounds: int = 10,
) -> list[dict]:
    """The makespan/utilization grid over processing ratios and algorithm counts."""
    n = N.bit_length() - 1
    if N < 2 or 2**n != N:
        raise ValueError("N must be a power of two >= 2")
    rows = []
    for arch in archs:
        server = QramServer(Arch(arch), n)
        for ratio in d_over_t1:
            if ratio < 0:
                raise ValueError("d/t1 ratios must be >= 0")
            for p in p_range:
                wl = SyntheticWorkload(p=p, rounds=rounds, d=ratio * server.query_duration)
                r = synthetic_bench(wl, server)
                rows.append(
                    {
                        "arch": server.arch.value,
                        "N": N,
                        "d_over_t1": ratio,
                        "p": p,
                        "makespan": r.makespan,
                        "utilization": r.utilization,
                    }
                )
    return rows
