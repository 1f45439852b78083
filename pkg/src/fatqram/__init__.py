"""Fat-Tree QRAM modeling toolkit.

Submodules: ``topology`` (router graphs), ``schedule`` (layer plans),
``statesim`` (sparse qutrit simulation), ``costmodel`` (closed-form
resources), ``noise`` (fidelity and QEC arithmetic), ``sched`` (FIFO
scheduling and workload benchmark) and ``cli``.
"""

from .topology import Arch, TreeSpec, build_topology, assign_planes, router_count
from .schedule import Kind, TimingModel, compile_single_query, compile_pipeline, check_conflicts, weighted_latency, makespan, render_trace
from .statesim import QueryInput, ClassicalMemory, SparseState, simulate, verify_query, joint_fidelity
from .costmodel import CostArch, ArchParams, cost_report, emit_table_csv, parallel_alg_depth
from .noise import NoiseParams, GateCounts, QecParams, gate_counts, fidelity_lower_bound, infidelity_table, distilled_fidelity, qec_cost, infidelity_vs_generic
from .sched import QueryRequest, ScheduleEntry, QramServer, SyntheticWorkload, fifo_schedule, total_latency, brute_force_optimal, synthetic_bench, utilization_series

__version__ = "0.1.0"
