"""Command-line entry point: ``fatqram <subcommand> [options]``.

Every subcommand prints to stdout in ``--format json`` (and, where it makes
sense, ``csv`` or ``text``); diagnostics go to stderr.  Exit status is 0 on
success and 1 on any error, including usage errors.  Output is a pure
function of the arguments and ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import costmodel, noise, sched
from .schedule import TimingModel, compile_pipeline, compile_single_query, makespan, render_trace, weighted_latency
from .statesim import ClassicalMemory, QueryInput, SimulationError, UncomputationError, init_state, joint_fidelity, run, verify_query, extract_output
from .topology import Arch, TreeSpec, assign_planes, build_topology


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise CliError(message)


def load_schema(name: str) -> dict:
    text = resources.files("fatqram.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def _read_json(path: str, schema: str):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: invalid JSON ({e})") from e
    try:
        jsonschema.validate(doc, load_schema(schema))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise CliError(f"{path}: {where}: {e.message}") from e
    return doc


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _dump_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: costmodel._fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _power_of_two(text: str) -> int:
    try:
        N = int(text)
        costmodel.log2_exact(N)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a power of two >= 2")
    return N


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return v


def _spec(args) -> TreeSpec:
    return TreeSpec(args.n, Arch(args.arch))


# ---------------------------------------------------------------- subcommands


def cmd_topo(args) -> str:
    topo = build_topology(_spec(args))
    pa = assign_planes(topo)
    doc = topo.to_dict(pa.planes)
    doc["planes_acyclic"] = pa.ok
    if args.format == "json":
        return _dump_json(doc)
    if args.format == "csv":
        rows = [{"level": r.level, "node": r.node, "copy": r.copy} for r in topo.routers]
        return _dump_csv(rows, ["level", "node", "copy"])
    return (
        f"{doc['arch']} n={doc['n']} capacity={doc['capacity']} "
        f"routers={doc['router_count']} wires={len(doc['wires'])} planes_acyclic={pa.ok}\n"
    )


def _plan(args):
    spec = _spec(args)
    if spec.arch is Arch.BB:
        if args.queries != 1:
            raise CliError("a Bucket-Brigade tree serves one query at a time")
        return spec, compile_single_query(spec)
    return spec, compile_pipeline(spec, args.queries)


def _timing(args) -> TimingModel:
    return TimingModel(args.tau, args.fast_fraction)


def cmd_trace(args) -> str:
    spec, plan = _plan(args)
    if args.format == "text":
        return render_trace(plan)
    timing = _timing(args)
    total = makespan(plan, timing)
    doc = plan.to_dict()
    doc["makespan"] = {
        "layers": total.layers,
        "weighted-layers": total.weighted_layers,
        "us": total.wall_time_us,
    }
    doc["per_query"] = [
        {"query": q, "weighted-layers": weighted_latency(plan, q, timing).weighted_layers}
        for q in plan.queries
    ]
    return _dump_json(doc)


def _queries_from_args(args, N: int, rng) -> list[QueryInput]:
    if args.queries_file:
        doc = _read_json(args.queries_file, "queries")
        out = []
        for i, q in enumerate(doc["queries"]):
            terms = [(t["address"], complex(t["re"], t.get("im", 0.0))) for t in q["amplitudes"]]
            for a, _ in terms:
                if a >= N:
                    raise CliError(f"query {i}: address {a} outside capacity {N}")
            try:
                out.append(QueryInput(terms))
            except ValueError as e:
                raise CliError(f"query {i}: {e}") from e
        return out
    if args.uniform:
        return [QueryInput.uniform(range(N)) for _ in range(args.random_queries)]
    return [QueryInput.random(rng, N) for _ in range(args.random_queries)]


def cmd_simulate(args) -> str:
    rng = np.random.default_rng(args.seed)
    if args.memory:
        bits = _read_json(args.memory, "memory")["bits"]
        N = len(bits)
        if args.n is None:
            if N < 2 or N & (N - 1):
                raise CliError(f"memory length {N} is not a power of two >= 2")
            args.n = N.bit_length() - 1
        if N != 2**args.n:
            raise CliError(f"memory has {N} cells but n={args.n} needs {2**args.n}")
        memory = ClassicalMemory(bits)
    else:
        if args.n is None:
            raise CliError("--n is required without --memory")
        memory = ClassicalMemory(rng.integers(0, 2, size=2**args.n).tolist())
    N = 2**args.n
    inputs = _queries_from_args(args, N, rng)
    if not inputs:
        raise CliError("no queries given")
    args.queries = len(inputs)
    spec, plan = _plan(args)
    topo = build_topology(spec)
    final = run(plan, init_state(topo, inputs), memory)
    try:
        results = []
        for q, qi in enumerate(inputs):
            out = extract_output(final, q)
            results.append(
                {
                    "query": q,
                    "fidelity": verify_query(final, q, qi, memory),
                    "output": [
                        {"address": a, "bus": b, "re": c.real, "im": c.imag} for a, b, c in out
                    ],
                }
            )
        restored = True
        joint = joint_fidelity(final, inputs, memory)
    except UncomputationError as e:
        raise CliError(f"routers not restored to W: {e}") from e
    doc = {
        "arch": spec.arch.value,
        "n": spec.n,
        "memory": list(memory.bits),
        "queries": results,
        "joint_fidelity": joint,
        "routers_restored": restored,
        "layers": len(plan),
    }
    if args.format == "json":
        return _dump_json(doc)
    lines = [f"{r['query']}: fidelity={r['fidelity']:.12f}" for r in results]
    lines.append(f"joint_fidelity={joint:.12f} routers_restored={restored}")
    return "\n".join(lines) + "\n"


def cmd_cost(args) -> str:
    timing = _timing(args)
    if args.depth:
        rows = []
        for N in args.N:
            for alg in costmodel.Algorithm:
                seq = costmodel.parallel_alg_depth(alg, N, fat_tree=False, k=args.k, d=args.d)
                par = costmodel.parallel_alg_depth(alg, N, fat_tree=True, k=args.k, d=args.d)
                rows.append({"algorithm": alg.value, "N": N, "sequential": seq, "fat_tree": par, "ratio": seq / par})
        cols = ["algorithm", "N", "sequential", "fat_tree", "ratio"]
        return _dump_json(rows) if args.format == "json" else _dump_csv(rows, cols)
    archs = list(costmodel.CostArch) if args.all or not args.arch else [costmodel.CostArch(a) for a in args.arch]
    reports = [costmodel.cost_report(costmodel.ArchParams(a, N, timing)) for N in args.N for a in archs]
    if args.format == "csv":
        return costmodel.emit_table_csv(reports)
    rows = [r.__dict__ | {"units": {"latency": "weighted-layers", "swap_budget": "us"}} for r in reports]
    if args.format == "json":
        return _dump_json(rows)
    return "".join(
        f"{r.arch:>11} N={r.N}: t1={r.t1:g} weighted-layers, amortized={r.amortized:g} weighted-layers, "
        f"bandwidth={r.bandwidth:.6g} qubit/s\n"
        for r in reports
    )


def cmd_noise(args) -> str:
    if args.kind == "table":
        tab = noise.infidelity_table(args.N, args.eps0, args.c)
        rows = [{"N": N, "eps0": e, "infidelity": v, "c": args.c} for N, r in tab.items() for e, v in r.items()]
        cols = ["N", "eps0", "infidelity", "c"]
    elif args.kind == "bound":
        params = noise.NoiseParams(*args.eps)
        rows = []
        for n in args.n:
            for arch in (Arch.BB, Arch.FAT_TREE):
                g = noise.gate_counts(arch, n, args.mode)
                try:
                    b = noise.fidelity_lower_bound(g, params)
                except noise.VacuousBoundError as e:
                    raise CliError(f"{arch.value} n={n}: {e}") from e
                rows.append({"arch": arch.value, "n": n, "g0": g.g0, "g1": g.g1, "g2": g.g2,
                             "exact": b.exact, "linearized": b.linearized})
        cols = ["arch", "n", "g0", "g1", "g2", "exact", "linearized"]
    elif args.kind == "generic":
        rows = noise.infidelity_vs_generic(args.n, args.eps0[0], args.d)
        cols = ["n", "d", "qram", "generic", "ratio"]
    else:
        qec = noise.QecParams(args.m, args.d, args.D)
        rows = []
        for n in args.n:
            for scheme in ("encoded_bb", "noisy_fattree_pipelined"):
                c = noise.qec_cost(scheme, qec, n)
                rows.append({"scheme": scheme, "n": n, "m": qec.m, "d": qec.d, "D": qec.D} | c.__dict__)
        cols = ["scheme", "n", "m", "d", "D", "physical_qubits", "logical_parallelism", "logical_latency"]
    if args.format == "json":
        return _dump_json(rows)
    return _dump_csv(rows, cols)


def cmd_distill(args) -> str:
    rows = [{"F": args.F, "k": k, "model": args.model,
             "fidelity": noise.distilled_fidelity(args.F, k, args.model)} for k in args.k]
    if args.format == "json":
        return _dump_json(rows)
    if args.format == "csv":
        return _dump_csv(rows, ["F", "k", "model", "fidelity"])
    return "".join(f"{r['fidelity']:.5f}\n" for r in rows)


def _requests(args, rng) -> list[sched.QueryRequest]:
    if args.requests:
        doc = _read_json(args.requests, "requests")
        reqs = [sched.QueryRequest(r["id"], float(r["arrival"])) for r in doc["requests"]]
    else:
        arrivals = rng.uniform(0, args.horizon, size=args.random)
        reqs = [sched.QueryRequest(i, float(a)) for i, a in enumerate(arrivals)]
    return reqs


def cmd_schedule(args) -> str:
    rng = np.random.default_rng(args.seed)
    server = sched.QramServer(Arch(args.arch), args.n)
    reqs = _requests(args, rng)
    entries = sched.fifo_schedule(reqs, server)
    doc = {
        "server": {
            "arch": server.arch.value,
            "n": server.n,
            "initiation_interval": server.initiation_interval,
            "parallelism": server.parallelism,
            "query_duration": server.query_duration,
        },
        "entries": [e.to_dict() for e in entries],
        "total_latency": sched.total_latency(entries),
        "units": "layers",
    }
    if args.brute_force:
        best, order = sched.brute_force_optimal(reqs, server)
        doc["brute_force"] = {"total_latency": best, "order": order}
    if args.format == "json":
        return _dump_json(doc)
    return _dump_csv(doc["entries"], ["id", "arrival", "start", "finish", "latency"])


def cmd_bench(args) -> str:
    rows = sched.utilization_series(args.ratios, args.p, args.arch, N=args.N, rounds=args.rounds)
    if args.format == "json":
        return _dump_json(rows)
    return _dump_csv(rows, ["arch", "N", "d_over_t1", "p", "makespan", "utilization"])


# --------------------------------------------------------------------- parser


def _add_tree(p, n_required=True):
    p.add_argument("--arch", choices=[a.value for a in Arch], default=Arch.FAT_TREE.value)
    if n_required:
        p.add_argument("--n", type=int, required=True, help="address width log2 N")
    else:
        p.add_argument("--n", type=int, help="address width (default: from --memory)")


def _add_timing(p):
    p.add_argument("--tau", type=float, default=1.0, help="standard layer time in us")
    p.add_argument("--fast-fraction", type=float, default=0.125)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fatqram", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, formats, default, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--format", choices=formats, default=default)
        p.set_defaults(func=fn)
        return p

    p = add("topo", cmd_topo, ["json", "csv", "text"], "json", "router graph and plane map")
    _add_tree(p)

    p = add("trace", cmd_trace, ["text", "json"], "text", "layer-by-layer pipeline diagram")
    _add_tree(p)
    p.add_argument("--queries", type=_positive_int, default=1)
    _add_timing(p)

    p = add("simulate", cmd_simulate, ["json", "text"], "json", "simulate queries and verify fidelity")
    _add_tree(p, n_required=False)
    p.add_argument("--queries", dest="queries_file", help="query JSON file")
    p.add_argument("--memory", help="memory JSON file (default: random from --seed)")
    p.add_argument("--random-queries", type=_positive_int, default=1,
                   help="number of generated queries when no --queries file")
    p.add_argument("--uniform", action="store_true", help="generated queries are uniform superpositions")
    p.add_argument("--seed", type=int, default=0)

    p = add("cost", cmd_cost, ["json", "csv", "text"], "json", "space/latency/bandwidth table")
    p.add_argument("--arch", action="append", choices=[a.value for a in costmodel.CostArch])
    p.add_argument("--all", action="store_true", help="all five architectures (default)")
    p.add_argument("--N", type=_power_of_two, action="append", required=True)
    p.add_argument("--depth", action="store_true", help="parallel-algorithm depth models instead")
    p.add_argument("--k", type=int, default=2, help="k for k-sum")
    p.add_argument("--d", type=int, default=30, help="polynomial degree for QSP")
    _add_timing(p)

    p = add("noise", cmd_noise, ["json", "csv"], "json", "fidelity bounds, infidelity tables, QEC costs")
    p.add_argument("--kind", choices=["bound", "table", "generic", "qec"], default="bound")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--N", type=_power_of_two, nargs="+", default=[8, 32, 128, 1024])
    p.add_argument("--eps", type=float, nargs=3, default=[0.002, 0.002, 0.001], metavar=("E0", "E1", "E2"))
    p.add_argument("--eps0", type=float, nargs="+", default=[1e-3, 1e-4, 1e-5])
    p.add_argument("--c", type=float, default=noise.INFIDELITY_COEFFICIENT)
    p.add_argument("--mode", choices=["closed_form", "paper_bound", "schedule_exact"], default="closed_form")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--D", type=int, default=1)

    p = add("distill", cmd_distill, ["json", "csv", "text"], "json", "virtual-distillation fidelity")
    p.add_argument("--F", type=float, required=True)
    p.add_argument("--k", type=_positive_int, nargs="+", required=True)
    p.add_argument("--model", default="rank1-orthogonal")

    p = add("schedule", cmd_schedule, ["json", "csv"], "json", "FIFO schedule of query requests")
    _add_tree(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--requests", help="request JSON file")
    src.add_argument("--random", type=_positive_int, help="generate this many random requests")
    p.add_argument("--horizon", type=float, default=100.0, help="arrival window for --random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--brute-force", action="store_true", help="also report the exhaustive optimum")

    p = add("bench", cmd_bench, ["csv", "json"], "csv", "synthetic workload makespan/utilization grid")
    p.add_argument("--N", type=_power_of_two, default=1024)
    p.add_argument("--rounds", type=_positive_int, default=10)
    p.add_argument("--ratios", type=float, nargs="+", default=[0.0, 0.5, 1.0, 1.5, 2.0])
    p.add_argument("--p", type=_positive_int, nargs="+", default=list(range(1, 17)))
    p.add_argument("--arch", nargs="+", choices=[a.value for a in Arch],
                   default=[Arch.BB.value, Arch.FAT_TREE.value])
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, KeyError, SimulationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
