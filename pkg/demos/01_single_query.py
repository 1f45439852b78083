"""Route one superposed query through a three-level Bucket-Brigade tree.

Run: python3 demos/01_single_query.py
"""

from fatqram import ClassicalMemory, QueryInput, TreeSpec, build_topology, compile_single_query, simulate, verify_query
from fatqram.schedule import render_trace, weighted_latency
from fatqram.statesim import extract_output
from fatqram.topology import Arch

spec = TreeSpec(3, Arch.BB)
topo = build_topology(spec)
plan = compile_single_query(spec)
print(f"A {spec.capacity}-cell BB tree has {len(topo.routers)} routers;")
print(f"one query takes {len(plan)} layers, {weighted_latency(plan, 0).weighted_layers} weighted.\n")

# the memory holds an arbitrary bit string; the query asks for three cells at once
memory = ClassicalMemory([0, 1, 1, 0, 1, 0, 0, 1])
query = QueryInput([(1, 0.6), (4, 0.48j), (7, -0.64)])
final = simulate(plan, topo, [query], memory)

print("address  bus  amplitude")
for addr, bus, amp in extract_output(final, 0):
    print(f"{addr:7d}  {bus:3d}  {amp:.3f}")
print(f"\nfidelity against sum_i a_i|i>|x_i>: {verify_query(final, 0, query, memory):.12f}")

# the first few columns of the layer trace show the address qubits descending
print("\n" + "\n".join(line[:80] for line in render_trace(plan).splitlines()[:6]))
