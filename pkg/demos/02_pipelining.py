"""Pipeline several queries through a Fat-Tree and compare with Bucket-Brigade.

Run: python3 demos/02_pipelining.py
"""

import numpy as np

from fatqram import TreeSpec, build_topology, check_conflicts, compile_pipeline, makespan, simulate
from fatqram.statesim import ClassicalMemory, QueryInput, joint_fidelity
from fatqram.topology import router_count

n = 3
spec = TreeSpec(n)
topo = build_topology(spec)
print(f"Fat-Tree, n={n}: {router_count(spec)} routers (BB would need {2**n - 1}).")

for q in range(1, n + 1):
    plan = compile_pipeline(spec, q)
    lat = makespan(plan)
    print(f"  {q} quer{'y' if q == 1 else 'ies'}: {len(plan):2d} layers, {lat.weighted_layers:6.3f} weighted, "
          f"conflicts={len(check_conflicts(plan, topo))}")
print(f"  sequential BB for {n} queries would need {n * (8 * n + 1)} layers\n")

rng = np.random.default_rng(3)
memory = ClassicalMemory(rng.integers(0, 2, 2**n).tolist())
inputs = [QueryInput.random(rng, 2**n) for _ in range(n)]
final = simulate(compile_pipeline(spec, n), topo, inputs, memory)
print(f"{n} random queries in flight together: joint fidelity {joint_fidelity(final, inputs, memory):.12f}")
print(f"sparse state held {len(final)} basis rows")
