"""Resource tables, fidelity bounds and distillation at a glance.

Run: python3 demos/03_costs_and_noise.py
"""

from fatqram.costmodel import all_reports
from fatqram.noise import NoiseParams, distilled_fidelity, fidelity_ratio_series, infidelity_table, qec_cost, QecParams

N = 1024
print(f"Capacity N={N}, tau=1us\n")
print(f"{'arch':>11} {'qubits':>8} {'par':>4} {'amortized':>10} {'bandwidth/s':>12}")
for r in all_reports(N):
    print(f"{r.arch:>11} {r.qubits:8.0f} {r.parallelism:4d} {r.amortized:10.4f} {r.bandwidth:12.4g}")

print("\nLinearized infidelity with eps=(0.002, 0.002, 0.001):")
for row in fidelity_ratio_series([4, 8, 10], NoiseParams(0.002, 0.002, 0.001)):
    print(f"  n={row['n']:2d}: Fat-Tree {row['fat_tree']:.3f}, BB {row['bb']:.3f}, ratio {row['ratio']:.2f}")

print("\nFitted infidelity 5 n^2 eps0:", {k: v[1e-4] for k, v in infidelity_table([8, 32, 1024], [1e-4]).items()})

# equal qubit budget: the Fat-Tree's extra parallelism buys two more copies
ft, bb = distilled_fidelity(0.84, 4), distilled_fidelity(0.872, 2)
print(f"\nDistilled fidelity: Fat-Tree 4 copies of F=0.84 -> {ft:.5f}; BB 2 copies of F=0.872 -> {bb:.5f}")

c = qec_cost("noisy_fattree_pipelined", QecParams(m=3, d=3, D=2), 9)
print(f"[[3,1,3]]-encoded pipeline at n=9: parallelism {c.logical_parallelism}, latency {c.logical_latency}")
