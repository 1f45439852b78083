"""Layered instruction streams for BB and Fat-Tree queries.

Every instruction addresses a whole tree level at once (all nodes ``j`` of
level ``i`` in one copy ``k``), since a superposed query may occupy any
branch.  A Fat-Tree plan runs on a global grid of 10 layers: a 4-layer gate
step, a fast local-swap layer, another gate step and a second swap layer.
"""

from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .topology import Arch, External, Port, PortKind, Topology, TreeSpec

PIPELINE_INTERVAL = 10


class Kind(str, enum.Enum):
    LOAD = "LOAD"
    TRANSPORT = "TRANSPORT"
    ROUTE = "ROUTE"
    STORE = "STORE"
    CLASSICAL_GATES = "CLASSICAL_GATES"
    UNLOAD = "UNLOAD"
    UNTRANSPORT = "UNTRANSPORT"
    UNROUTE = "UNROUTE"
    UNSTORE = "UNSTORE"
    SWAP_I = "SWAP_I"
    SWAP_II = "SWAP_II"


INVERSE = {
    Kind.LOAD: Kind.UNLOAD,
    Kind.TRANSPORT: Kind.UNTRANSPORT,
    Kind.ROUTE: Kind.UNROUTE,
    Kind.STORE: Kind.UNSTORE,
}
INVERSE.update({v: k for k, v in list(INVERSE.items())})
INVERSE.update({k: k for k in (Kind.CLASSICAL_GATES, Kind.SWAP_I, Kind.SWAP_II)})

MNEMONIC = {
    Kind.LOAD: "L",
    Kind.TRANSPORT: "T",
    Kind.ROUTE: "R",
    Kind.STORE: "S",
    Kind.UNLOAD: "L'",
    Kind.UNTRANSPORT: "T'",
    Kind.UNROUTE: "R'",
    Kind.UNSTORE: "S'",
    Kind.CLASSICAL_GATES: "CG",
    Kind.SWAP_I: "SI",
    Kind.SWAP_II: "SII",
}

_KIND_ORDER = {k: i for i, k in enumerate(Kind)}


class Weight(str, enum.Enum):
    STANDARD = "standard"
    FAST = "fast"


@dataclass(frozen=True)
class Instruction:
    """One elementary operation applied to every node of ``level``.

    ``qubit`` names the external qubit of ``query`` being moved (``n`` is
    the bus); for LOAD/UNLOAD it is the external slot.  SWAP instructions
    exchange copies ``copy`` and ``copy + 1`` and carry no query.  The
    CLASSICAL_GATES instruction records the query it serves.
    """

    kind: Kind
    level: int
    copy: int
    query: int | None = None
    qubit: int | None = None

    def inverse(self) -> "Instruction":
        return replace(self, kind=INVERSE[self.kind])

    def sort_key(self):
        return (
            _KIND_ORDER[self.kind],
            self.level,
            self.copy,
            -1 if self.query is None else self.query,
            -1 if self.qubit is None else self.qubit,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "level": self.level,
            "copy": self.copy,
            "query": self.query,
            "qubit": self.qubit,
        }


@dataclass(frozen=True)
class Layer:
    instructions: tuple[Instruction, ...]
    weight: Weight = Weight.STANDARD


@dataclass(frozen=True)
class LayerPlan:
    spec: TreeSpec
    layers: tuple[Layer, ...]
    spans: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def queries(self) -> list[int]:
        return sorted(self.spans)

    def to_dict(self) -> dict:
        return {
            "arch": self.spec.arch.value,
            "n": self.spec.n,
            "layers": [
                {"weight": layer.weight.value, "instructions": [i.to_dict() for i in layer.instructions]}
                for layer in self.layers
            ],
            "spans": {str(q): list(s) for q, s in sorted(self.spans.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class TimingModel:
    standard_layer_time: float = 1.0  # microseconds
    fast_layer_fraction: float = 0.125

    def __post_init__(self):
        if not 0 < self.fast_layer_fraction <= 1:
            raise ValueError("fast_layer_fraction must lie in (0, 1]")
        if self.standard_layer_time <= 0:
            raise ValueError("standard_layer_time must be positive")


@dataclass(frozen=True)
class QueryCounters:
    """Address-loading progress of one query."""

    loaded: int = 0
    s: int = 0
    k: int = 0
    retrieved: bool = False


Group = list[Instruction]


def load_layer(c: QueryCounters, n: int, query: int = 0) -> tuple[list[Group], QueryCounters]:
    """One gate step of address loading: four parallel sub-layers."""
    if c.retrieved:
        raise ValueError("query already past data retrieval")
    if not 0 <= c.s < n:
        raise ValueError(f"store depth s={c.s} outside [0, {n - 1}]")
    loaded, s, k = c.loaded, c.s, c.k
    groups: list[Group] = [[], [], [], []]

    def transport(g):
        for i in range(max(1, loaded - n), s + 1):
            g.append(Instruction(Kind.TRANSPORT, i, k, query, loaded - i))
        if loaded <= n:
            g.append(Instruction(Kind.LOAD, 0, k, query, loaded))

    def route(g, top):
        for i in range(max(0, loaded - n - 1), top + 1):
            g.append(Instruction(Kind.ROUTE, i, k, query, loaded - 1 - i))

    transport(groups[0])
    loaded += 1
    route(groups[1], s - 1)
    groups[1].append(Instruction(Kind.STORE, s, k, query, s))
    transport(groups[2])
    loaded += 1
    route(groups[3], s)
    return groups, QueryCounters(loaded, s + 1, k)


def unload_layer(c: QueryCounters, n: int, query: int = 0) -> tuple[list[Group], QueryCounters]:
    """One gate step of address unloading; valid only after data retrieval."""
    if not c.retrieved:
        raise ValueError("unload requested before the data-retrieval layer")
    if not 1 <= c.s <= n:
        raise ValueError(f"nothing to unload at depth s={c.s}")
    loaded, k = c.loaded, c.k
    s = c.s - 1
    groups: list[Group] = [[], [], [], []]

    def unroute(g, top):
        for i in range(max(0, loaded - n - 1), top + 1):
            g.append(Instruction(Kind.UNROUTE, i, k, query, loaded - 1 - i))

    def untransport(g):
        for i in range(max(1, loaded - n), s + 1):
            g.append(Instruction(Kind.UNTRANSPORT, i, k, query, loaded - i))
        if loaded <= n:
            g.append(Instruction(Kind.UNLOAD, 0, k, query, loaded))

    unroute(groups[0], s)
    loaded -= 1
    untransport(groups[1])
    unroute(groups[2], s - 1)
    groups[2].append(Instruction(Kind.UNSTORE, s, k, query, s))
    loaded -= 1
    untransport(groups[3])
    return groups, QueryCounters(loaded, s, k, retrieved=True)


def _swap_instructions(n: int, parity: int) -> list[Instruction]:
    kind = Kind.SWAP_I if parity == 0 else Kind.SWAP_II
    return [
        Instruction(kind, i, k)
        for k in range(parity, n - 1, 2)
        for i in range(0, k + 1)
    ]


def _finish(spec: TreeSpec, raw: list[tuple[list[Instruction], Weight]]) -> LayerPlan:
    layers = []
    spans: dict[int, list[int]] = {}
    for idx, (instrs, weight) in enumerate(raw):
        instrs = sorted(instrs, key=Instruction.sort_key)
        layers.append(Layer(tuple(instrs), weight))
        for ins in instrs:
            if ins.query is None:
                continue
            span = spans.setdefault(ins.query, [idx, idx])
            span[1] = idx
    return LayerPlan(spec, tuple(layers), {q: (a, b) for q, (a, b) in spans.items()})


def _compile_bb(spec: TreeSpec) -> LayerPlan:
    n = spec.n
    k = n - 1
    raw: list[tuple[list[Instruction], Weight]] = []
    c = QueryCounters(k=k)
    for _ in range(n):
        groups, c = load_layer(c, n)
        raw.extend((g, Weight.STANDARD) for g in groups)
    raw.append(([Instruction(Kind.CLASSICAL_GATES, n - 1, k, 0, n)], Weight.FAST))
    c = replace(c, retrieved=True)
    for _ in range(n):
        groups, c = unload_layer(c, n)
        raw.extend((g, Weight.STANDARD) for g in groups)
    return _finish(spec, raw)


def compile_single_query(spec: TreeSpec) -> LayerPlan:
    if spec.arch is Arch.BB:
        return _compile_bb(spec)
    return compile_pipeline(spec, 1)


def compile_pipeline(
    spec: TreeSpec, query_count: int, start_layers: Sequence[int] | None = None
) -> LayerPlan:
    """Pipeline Fat-Tree queries on the shared 10-layer grid.

    Query ``q`` starts its first gate step at ``start_layers[q]`` (default
    ``10 q``).  Within a query the local step sequence is: load step ``s`` in
    copy ``s``, swap, ..., load step ``n - 1``, the data-retrieval slot, then
    the unload steps in copies ``n - 1`` down to ``0`` separated by swaps.
    Swap layers act globally over every node, so one swap moves a loading
    query up and an unloading query down at the same time.
    """
    if spec.arch is not Arch.FAT_TREE:
        raise ValueError("pipelining requires a Fat-Tree spec")
    n = spec.n
    if query_count < 1:
        raise ValueError("query_count must be >= 1")
    if start_layers is None:
        if query_count > n:
            raise ValueError(f"{query_count} queries exceed the query parallelism {n}")
        start_layers = [PIPELINE_INTERVAL * q for q in range(query_count)]
    start_layers = list(start_layers)
    if len(start_layers) != query_count:
        raise ValueError("need one start layer per query")
    if len(set(start_layers)) != len(start_layers):
        raise ValueError(f"start layers collide: {start_layers}")
    for L in start_layers:
        if L < 0 or L % PIPELINE_INTERVAL:
            raise ValueError(f"start layer {L} is off the {PIPELINE_INTERVAL}-layer initiation grid")

    # macro step t: even -> 4-layer gate step, odd -> 1 swap layer
    starts = [2 * (L // 5) for L in start_layers]
    end = max(starts) + 4 * n - 1
    counters = [QueryCounters() for _ in starts]
    raw: list[tuple[list[Instruction], Weight]] = []
    for t in range(end):
        if t % 2 == 0:
            block: list[Group] = [[], [], [], []]
            for q, t0 in enumerate(starts):
                tau = t - t0
                if not 0 <= tau <= 4 * n - 2:
                    continue
                c = counters[q]
                if tau < 2 * n:
                    groups, c = load_layer(replace(c, k=tau // 2), n, q)
                else:
                    groups, c = unload_layer(replace(c, k=n - 1 - (tau - 2 * n) // 2), n, q)
                counters[q] = c
                for g, extra in zip(block, groups):
                    g.extend(extra)
            raw.extend((g, Weight.STANDARD) for g in block)
        else:
            layer = _swap_instructions(n, 0 if t % 4 == 1 else 1)
            for q, t0 in enumerate(starts):
                if t - t0 == 2 * n - 1:
                    layer.append(Instruction(Kind.CLASSICAL_GATES, n - 1, n - 1, q, n))
                    counters[q] = replace(counters[q], retrieved=True)
            raw.append((layer, Weight.FAST))
    return _finish(spec, raw)


class UnknownCoordinateError(ValueError):
    pass


def touched_qudits(ins: Instruction, n: int) -> list:
    """Qudits read or written by ``ins`` across every node of its level."""
    i, k = ins.level, ins.copy
    kind = ins.kind
    out: list = []
    if kind in (Kind.LOAD, Kind.UNLOAD):
        out.append(Port(0, 0, k, PortKind.IN))
        out.append(External(ins.query, ins.qubit))
    elif kind in (Kind.TRANSPORT, Kind.UNTRANSPORT):
        for j in range(2**i):
            side = PortKind.OUTL if j % 2 == 0 else PortKind.OUTR
            out.append(Port(i - 1, j // 2, k, side))
            out.append(Port(i, j, k, PortKind.IN))
    elif kind in (Kind.ROUTE, Kind.UNROUTE):
        for j in range(2**i):
            out.extend(Port(i, j, k, p) for p in PortKind)
    elif kind in (Kind.STORE, Kind.UNSTORE):
        for j in range(2**i):
            out.append(Port(i, j, k, PortKind.IN))
            out.append(Port(i, j, k, PortKind.ROUTER))
    elif kind in (Kind.SWAP_I, Kind.SWAP_II):
        for j in range(2**i):
            for kk in (k, k + 1):
                out.extend(Port(i, j, kk, p) for p in PortKind)
    elif kind is Kind.CLASSICAL_GATES:
        for j in range(2 ** (n - 1)):
            out.append(Port(n - 1, j, n - 1, PortKind.OUTL))
            out.append(Port(n - 1, j, n - 1, PortKind.OUTR))
    return out


def validate_instruction(ins: Instruction, topology: Topology) -> None:
    n = topology.n
    from .topology import RouterCoord

    def need(level, copy):
        if not (0 <= level < n and topology.has_router(RouterCoord(level, 0, copy))):
            raise UnknownCoordinateError(f"{ins}: no router at level {level}, copy {copy}")

    kind = ins.kind
    if kind in (Kind.SWAP_I, Kind.SWAP_II):
        need(ins.level, ins.copy)
        need(ins.level, ins.copy + 1)
        if (ins.copy % 2 == 0) != (kind is Kind.SWAP_I):
            raise UnknownCoordinateError(f"{ins}: {kind.value} acts on the wrong copy parity")
        return
    need(ins.level, ins.copy)
    if kind in (Kind.TRANSPORT, Kind.UNTRANSPORT):
        if ins.level < 1:
            raise UnknownCoordinateError(f"{ins}: transport needs a parent level")
        need(ins.level - 1, ins.copy)
    if kind in (Kind.LOAD, Kind.UNLOAD) and ins.level != 0:
        raise UnknownCoordinateError(f"{ins}: loading only happens at the root")
    if kind in (Kind.LOAD, Kind.UNLOAD) and not (ins.query is not None and 0 <= (ins.qubit or 0) <= n):
        raise UnknownCoordinateError(f"{ins}: bad external slot")


def check_conflicts(plan: LayerPlan, topology: Topology) -> list[tuple[int, object, tuple[Instruction, Instruction]]]:
    """Report every qudit touched by two instructions of the same layer."""
    conflicts = []
    n = topology.n
    for idx, layer in enumerate(plan.layers):
        owner: dict = {}
        for ins in layer.instructions:
            validate_instruction(ins, topology)
            for q in touched_qudits(ins, n):
                if q in owner:
                    conflicts.append((idx, q, (owner[q], ins)))
                else:
                    owner[q] = ins
    return conflicts


@dataclass(frozen=True)
class Latency:
    standard_layers: int
    fast_layers: int
    weighted_layers: float
    wall_time_us: float

    @property
    def layers(self) -> int:
        return self.standard_layers + self.fast_layers


def _weigh(layers: Iterable[Layer], timing: TimingModel) -> Latency:
    std = fast = 0
    for layer in layers:
        if layer.weight is Weight.FAST:
            fast += 1
        else:
            std += 1
    w = std + timing.fast_layer_fraction * fast
    return Latency(std, fast, w, w * timing.standard_layer_time)


def weighted_latency(plan: LayerPlan, query: int, timing: TimingModel = TimingModel()) -> Latency:
    if query not in plan.spans:
        raise KeyError(f"query {query} not in plan")
    a, b = plan.spans[query]
    return _weigh(plan.layers[a : b + 1], timing)


def makespan(plan: LayerPlan, timing: TimingModel = TimingModel()) -> Latency:
    """Weighted length of the whole plan."""
    return _weigh(plan.layers, timing)


def _label(ins: Instruction, n: int) -> str:
    if ins.query is None:
        return MNEMONIC[ins.kind]
    if ins.kind is Kind.CLASSICAL_GATES:
        return f"{ins.query}:CG"
    q = "B" if ins.qubit == n else str(ins.qubit + 1)
    return f"{ins.query}:{MNEMONIC[ins.kind]}{q}"


def render_trace(plan: LayerPlan) -> str:
    """Text pipeline diagram: one row per (level, copy, port), one column per layer.

    Rows aggregate the nodes of a level because every instruction acts on
    all of them.  Cells read ``<query>:<op><qubit>`` with qubits numbered
    from 1 and ``B`` for the bus; ``S1`` stores the first address qubit.
    Fast layers are marked ``*`` in the header.
    """
    spec = plan.spec
    n = spec.n
    rows: list[tuple[int, int, PortKind]] = [
        (i, k, p) for i in range(n) for k in spec.copies_at(i) for p in PortKind
    ]
    grid: dict[tuple, dict[int, str]] = defaultdict(dict)
    for idx, layer in enumerate(plan.layers):
        for ins in layer.instructions:
            label = _label(ins, n)
            for q in touched_qudits(ins, n):
                if isinstance(q, Port):
                    grid[(q.level, q.copy, q.kind)].setdefault(idx, label)
    width = max([4] + [len(v) for cells in grid.values() for v in cells.values()]) + 1
    head = "qudit".ljust(14) + "".join(
        (f"{idx + 1}" + ("*" if layer.weight is Weight.FAST else "")).rjust(width)
        for idx, layer in enumerate(plan.layers)
    )
    lines = [head]
    if not plan.layers:
        return head + "\n"
    for key in rows:
        i, k, p = key
        name = f"L{i} k{k} {p.name.lower()}"
        cells = grid.get(key, {})
        lines.append(
            name.ljust(14) + "".join(cells.get(idx, ".").rjust(width) for idx in range(len(plan.layers)))
        )
    return "\n".join(lines) + "\n"


def trace_columns(text: str) -> int:
    """Number of layer columns in a rendered trace."""
    return len(text.splitlines()[0].split()) - 1
