"""Exact sparse simulation over three-level qudits.

Each qudit is ``W`` (vacant), ``ZERO`` or ``ONE``.  Every QRAM instruction
permutes basis strings, so a state is stored as a matrix of basis rows
(one int8 column per qudit) plus a vector of complex amplitudes; layers
rewrite the rows in place and never touch the amplitudes.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .schedule import Instruction, Kind, LayerPlan, touched_qudits
from .topology import Arch, External, Port, PortKind, Topology


class Level(enum.IntEnum):
    W = 0
    ZERO = 1
    ONE = 2


class SimulationError(RuntimeError):
    pass


class UncomputationError(SimulationError):
    pass


@dataclass(frozen=True)
class QueryInput:
    terms: tuple[tuple[int, complex], ...]

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple((int(a), complex(c)) for a, c in terms))
        addrs = [a for a, _ in self.terms]
        if len(set(addrs)) != len(addrs):
            raise ValueError("query addresses must be distinct")
        norm = sum(abs(c) ** 2 for _, c in self.terms)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"query input not normalized (sum |a|^2 = {norm!r})")

    @classmethod
    def basis(cls, address: int) -> "QueryInput":
        return cls([(address, 1.0)])

    @classmethod
    def uniform(cls, addresses: Sequence[int]) -> "QueryInput":
        a = 1 / math.sqrt(len(addresses))
        return cls([(x, a) for x in addresses])

    @classmethod
    def random(cls, rng: np.random.Generator, N: int, size: int | None = None) -> "QueryInput":
        size = N if size is None else size
        addrs = rng.choice(N, size=size, replace=False)
        amps = rng.normal(size=size) + 1j * rng.normal(size=size)
        amps /= np.linalg.norm(amps)
        return cls(zip(addrs.tolist(), amps.tolist()))


@dataclass(frozen=True)
class ClassicalMemory:
    bits: tuple[int, ...]

    def __init__(self, bits):
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("memory bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def check(self, N: int) -> None:
        if len(self.bits) != N:
            raise ValueError(f"memory has {len(self.bits)} cells, expected {N}")


@dataclass
class SparseState:
    n: int
    qudits: tuple
    basis: np.ndarray  # (rows, qudits) int8 levels
    amps: np.ndarray  # (rows,) complex128
    prune: float = 0.0
    index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {q: c for c, q in enumerate(self.qudits)}

    def copy(self) -> "SparseState":
        return SparseState(self.n, self.qudits, self.basis.copy(), self.amps.copy(), self.prune, self.index)

    def __len__(self) -> int:
        return len(self.amps)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    @property
    def query_count(self) -> int:
        return len({q.query for q in self.qudits if isinstance(q, External)})

    def amplitudes(self) -> dict[tuple[int, ...], complex]:
        return {tuple(row.tolist()): complex(a) for row, a in zip(self.basis, self.amps)}

    def canonical(self) -> "SparseState":
        order = np.lexsort(self.basis.T[::-1]) if len(self) else np.arange(0)
        return SparseState(self.n, self.qudits, self.basis[order], self.amps[order], self.prune, self.index)

    def to_dict(self) -> dict:
        c = self.canonical()
        return {
            "n": self.n,
            "qudits": [str(q) for q in self.qudits],
            "amplitudes": [
                {"basis": "".join("W01"[v] for v in row), "re": float(a.real), "im": float(a.imag)}
                for row, a in zip(c.basis.tolist(), c.amps)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def same_as(self, other: "SparseState", atol: float = 0.0) -> bool:
        a, b = self.canonical(), other.canonical()
        return (
            a.basis.shape == b.basis.shape
            and np.array_equal(a.basis, b.basis)
            and np.allclose(a.amps, b.amps, rtol=0, atol=atol)
        )

    def router_columns(self) -> np.ndarray:
        return np.array([c for q, c in self.index.items() if isinstance(q, Port)], dtype=np.intp)


def address_levels(address: int, n: int) -> list[Level]:
    """Per-slot levels of an address, most significant bit in slot 0."""
    return [Level.ONE if (address >> (n - 1 - b)) & 1 else Level.ZERO for b in range(n)]


def init_state(topology: Topology, queries: Sequence[QueryInput], prune: float = 0.0) -> SparseState:
    n, N = topology.n, topology.spec.capacity
    limit = n if topology.spec.arch is Arch.FAT_TREE else 1
    if len(queries) > limit:
        raise ValueError(f"{len(queries)} queries exceed the parallelism {limit}")
    ports = list(topology.ports())
    ext = [External(q, s) for q in range(len(queries)) for s in range(n + 1)]
    qudits = tuple(ports + ext)
    for qi in queries:
        if not isinstance(qi, QueryInput):
            raise TypeError("queries must be QueryInput objects")
        for a, _ in qi.terms:
            if not 0 <= a < N:
                raise ValueError(f"address {a} outside [0, {N})")
    rows, amps = [], []
    for combo in itertools.product(*(q.terms for q in queries)):
        row = [Level.W] * len(ports)
        amp = 1.0 + 0j
        for addr, a in combo:
            row.extend(address_levels(addr, n))
            row.append(Level.ZERO)
            amp *= a
        rows.append(row)
        amps.append(amp)
    basis = np.array(rows, dtype=np.int8).reshape(len(rows), len(qudits))
    return SparseState(n, qudits, basis, np.array(amps, dtype=np.complex128), prune)


def _cols(state: SparseState, ports) -> np.ndarray:
    try:
        return np.array([state.index[p] for p in ports], dtype=np.intp)
    except KeyError as e:
        raise SimulationError(f"qudit {e.args[0]} not present in state") from None


def _exchange(b: np.ndarray, a_cols: np.ndarray, b_cols: np.ndarray) -> None:
    tmp = b[:, a_cols].copy()
    b[:, a_cols] = b[:, b_cols]
    b[:, b_cols] = tmp


def _level_ports(i: int, k: int, kind: PortKind) -> list[Port]:
    return [Port(i, j, k, kind) for j in range(2**i)]


def apply_instruction(state: SparseState, ins: Instruction, memory: ClassicalMemory) -> SparseState:
    """Apply one instruction in place and return the state."""
    b = state.basis
    n = state.n
    i, k = ins.level, ins.copy
    kind = ins.kind
    if kind in (Kind.LOAD, Kind.UNLOAD):
        root = _cols(state, [Port(0, 0, k, PortKind.IN)])
        slot = _cols(state, [External(ins.query, ins.qubit)])
        if kind is Kind.LOAD and np.any(b[:, root] != Level.W):
            raise SimulationError(f"LOAD into occupied root input of copy {k}")
        _exchange(b, root, slot)
    elif kind in (Kind.TRANSPORT, Kind.UNTRANSPORT):
        if i < 1:
            raise SimulationError(f"{ins}: transport needs a parent level")
        src = _cols(
            state,
            [Port(i - 1, j // 2, k, PortKind.OUTL if j % 2 == 0 else PortKind.OUTR) for j in range(2**i)],
        )
        _exchange(b, src, _cols(state, _level_ports(i, k, PortKind.IN)))
    elif kind in (Kind.ROUTE, Kind.UNROUTE):
        cin = _cols(state, _level_ports(i, k, PortKind.IN))
        cr = _cols(state, _level_ports(i, k, PortKind.ROUTER))
        cl = _cols(state, _level_ports(i, k, PortKind.OUTL))
        crr = _cols(state, _level_ports(i, k, PortKind.OUTR))
        r = b[:, cr]
        vin, vl, vr = b[:, cin], b[:, cl], b[:, crr]
        left = r == Level.ZERO
        right = r == Level.ONE
        b[:, cin] = np.where(left, vl, np.where(right, vr, vin))
        b[:, cl] = np.where(left, vin, vl)
        b[:, crr] = np.where(right, vin, vr)
    elif kind in (Kind.STORE, Kind.UNSTORE):
        _exchange(
            b,
            _cols(state, _level_ports(i, k, PortKind.IN)),
            _cols(state, _level_ports(i, k, PortKind.ROUTER)),
        )
    elif kind in (Kind.SWAP_I, Kind.SWAP_II):
        for p in PortKind:
            _exchange(b, _cols(state, _level_ports(i, k, p)), _cols(state, _level_ports(i, k + 1, p)))
    elif kind is Kind.CLASSICAL_GATES:
        leaves = []
        for j in range(2 ** (n - 1)):
            leaves += [Port(n - 1, j, n - 1, PortKind.OUTL), Port(n - 1, j, n - 1, PortKind.OUTR)]
        memory.check(2**n)
        cols = _cols(state, leaves)
        flip = np.array(memory.bits, dtype=bool)[None, :]
        v = b[:, cols]
        active = (v != Level.W) & flip
        b[:, cols] = np.where(active, np.int8(Level.ZERO + Level.ONE) - v, v)
    else:
        raise SimulationError(f"unknown instruction kind {kind}")
    return state


def run(plan: LayerPlan, state: SparseState, memory: ClassicalMemory, check: bool = True) -> SparseState:
    """Execute every layer of ``plan`` on a copy of ``state``."""
    out = state.copy()
    memory.check(2**state.n)
    for idx, layer in enumerate(plan.layers):
        if check:
            seen: set = set()
            for ins in layer.instructions:
                t = touched_qudits(ins, state.n)
                if seen.intersection(t):
                    raise SimulationError(f"layer {idx}: conflicting instructions")
                seen.update(t)
        for ins in layer.instructions:
            try:
                apply_instruction(out, ins, memory)
            except SimulationError as e:
                raise SimulationError(f"layer {idx}: {e}") from e
        if out.prune > 0:
            keep = np.abs(out.amps) >= out.prune
            out.basis, out.amps = out.basis[keep], out.amps[keep]
    return out


def _check_uncomputed(state: SparseState) -> None:
    cols = state.router_columns()
    bad = np.argwhere(state.basis[:, cols] != Level.W)
    if len(bad):
        port = state.qudits[cols[bad[0][1]]]
        raise UncomputationError(f"uncomputation failed: router port {port} left at {Level(state.basis[bad[0][0], cols[bad[0][1]]]).name}")


def _register(state: SparseState, query: int) -> np.ndarray:
    cols = [state.index.get(External(query, s)) for s in range(state.n + 1)]
    if any(c is None for c in cols):
        raise KeyError(f"query {query} not in state")
    return np.array(cols, dtype=np.intp)


def _decode(row: Sequence[int], n: int) -> tuple[int, int]:
    if any(v == Level.W for v in row):
        raise UncomputationError("external register holds a vacant (W) slot")
    addr = 0
    for v in row[:n]:
        addr = (addr << 1) | (v == Level.ONE)
    return addr, int(row[n] == Level.ONE)


def _branches(state: SparseState, query: int) -> dict[tuple, dict[tuple[int, int], complex]]:
    """Group amplitudes by the configuration of every other register."""
    mine = _register(state, query)
    others = np.array(
        [c for q, c in state.index.items() if isinstance(q, External) and q.query != query], dtype=np.intp
    )
    groups: dict[tuple, dict[tuple[int, int], complex]] = defaultdict(dict)
    for row, amp in zip(state.basis, state.amps):
        key = tuple(row[others].tolist())
        groups[key][_decode(row[mine].tolist(), state.n)] = complex(amp)
    return groups


def extract_output(state: SparseState, query: int) -> list[tuple[int, int, complex]]:
    """Terms ``(address, bus, amplitude)`` of one query's register.

    With several queries in the state the register's conditional state on
    the heaviest configuration of the other registers is returned,
    normalized; its global phase is not meaningful.
    """
    _check_uncomputed(state)
    groups = _branches(state, query)
    best = max(groups.values(), key=lambda g: sum(abs(a) ** 2 for a in g.values()))
    norm = math.sqrt(sum(abs(a) ** 2 for a in best.values()))
    if len(groups) == 1:
        norm = 1.0
    return sorted((a, bus, amp / norm) for (a, bus), amp in best.items())


def ideal_output(qi: QueryInput, memory: ClassicalMemory) -> dict[tuple[int, int], complex]:
    """Direct construction of sum_i alpha_i |i>|x_i>."""
    return {(a, memory.bits[a]): c for a, c in qi.terms}


def verify_query(state: SparseState, query: int, qi: QueryInput, memory: ClassicalMemory) -> float:
    """Fidelity <psi|rho|psi> of the query's reduced state against the ideal output."""
    _check_uncomputed(state)
    ideal = ideal_output(qi, memory)
    f = 0.0
    for branch in _branches(state, query).values():
        overlap = sum(ideal.get(key, 0).conjugate() * amp for key, amp in branch.items())
        f += abs(overlap) ** 2
    return float(f)


def joint_fidelity(state: SparseState, inputs: Sequence[QueryInput], memory: ClassicalMemory) -> float:
    """Overlap squared between the full state and the product of ideal outputs."""
    _check_uncomputed(state)
    ideals = [ideal_output(q, memory) for q in inputs]
    regs = [_register(state, q) for q in range(len(inputs))]
    overlap = 0j
    for row, amp in zip(state.basis, state.amps):
        target = 1 + 0j
        for ideal, cols in zip(ideals, regs):
            target *= ideal.get(_decode(row[cols].tolist(), state.n), 0)
            if target == 0:
                break
        overlap += target.conjugate() * amp
    return float(abs(overlap) ** 2)


def simulate(plan: LayerPlan, topology: Topology, inputs: Sequence[QueryInput], memory: ClassicalMemory) -> SparseState:
    """Initialise, run, and return the final state."""
    return run(plan, init_state(topology, inputs), memory)
