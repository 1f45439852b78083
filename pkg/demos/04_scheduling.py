"""FIFO service of bursty query traffic and the processing/query trade-off.

Run: python3 demos/04_scheduling.py
"""

import random

from fatqram.sched import (
    QramServer, QueryRequest, SyntheticWorkload, brute_force_optimal, fifo_schedule,
    synthetic_bench, total_latency,
)

rng = random.Random(4)
reqs = [QueryRequest(i, round(rng.uniform(0, 60), 1)) for i in range(6)]
for arch in ("bb", "fat-tree"):
    server = QramServer(arch, 4)
    es = fifo_schedule(reqs, server)
    best, _ = brute_force_optimal(reqs, server)
    print(f"{arch:>8}: FIFO total latency {total_latency(es):7.1f} layers, exhaustive optimum {best:7.1f}")
    for e in es:
        print(f"          id {e.id}: arrives {e.arrival:5.1f}, starts {e.start:5.1f}, latency {e.latency:5.1f}")

print("\nMakespan of p algorithms, 10 query rounds each, N=1024, d = t1:")
bb, ft = QramServer("bb", 10), QramServer("fat-tree", 10)
for p in (1, 2, 4, 8, 10, 16):
    rb = synthetic_bench(SyntheticWorkload(p, 10, bb.query_duration), bb)
    rf = synthetic_bench(SyntheticWorkload(p, 10, ft.query_duration), ft)
    print(f"  p={p:2d}: BB {rb.makespan:7.0f} (util {rb.utilization:.2f})   "
          f"Fat-Tree {rf.makespan:7.0f} (util {rf.utilization:.2f})")
