"""Router graphs for Bucket-Brigade and Fat-Tree QRAM.

Routers are indexed by ``(level, node, copy)``.  Copy ``k`` is the
sub-component QRAM of address width ``k + 1``: it owns one router in every
node at levels ``0..k``.  A node at level ``i`` therefore holds the copies
``k = i, ..., n - 1`` (``n - i`` routers).  A BB tree is the ``k = n - 1``
slice, so both architectures share one coordinate system.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterator


class Arch(str, enum.Enum):
    BB = "bb"
    FAT_TREE = "fat-tree"


class PortKind(enum.IntEnum):
    IN = 0
    ROUTER = 1
    OUTL = 2
    OUTR = 3


@dataclass(frozen=True)
class TreeSpec:
    n: int
    arch: Arch = Arch.FAT_TREE

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int):
            raise TypeError(f"address width must be an int, got {self.n!r}")
        if self.n < 1:
            raise ValueError(f"address width n must be >= 1, got {self.n}")
        object.__setattr__(self, "arch", Arch(self.arch))

    @property
    def capacity(self) -> int:
        return 2**self.n

    def copies_at(self, level: int) -> range:
        """Router copies present in every node of ``level``."""
        if self.arch is Arch.BB:
            return range(self.n - 1, self.n)
        return range(level, self.n)


@dataclass(frozen=True, order=True)
class RouterCoord:
    level: int
    node: int
    copy: int


@dataclass(frozen=True, order=True)
class Port:
    """A qudit belonging to a router."""

    level: int
    node: int
    copy: int
    kind: PortKind

    @property
    def router(self) -> RouterCoord:
        return RouterCoord(self.level, self.node, self.copy)

    def __str__(self) -> str:
        return f"({self.level},{self.node},{self.copy}).{self.kind.name.lower()}"


@dataclass(frozen=True, order=True)
class External:
    """Qudit of a query's external register; slot ``n`` is the bus."""

    query: int
    slot: int

    def __str__(self) -> str:
        return f"q{self.query}[{self.slot}]"


@dataclass(frozen=True, order=True)
class Escape:
    """The external interface feeding the root input of one copy."""

    copy: int

    def __str__(self) -> str:
        return f"escape[{self.copy}]"


QuditId = Port | External


def is_terminal(coord: RouterCoord) -> bool:
    """True when the copy ends at this level (no child router to feed)."""
    return coord.copy == coord.level


@dataclass(frozen=True)
class Topology:
    spec: TreeSpec
    routers: tuple[RouterCoord, ...]
    wires: tuple[tuple[Port | Escape, Port], ...]
    _router_set: frozenset = field(default=frozenset(), repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def has_router(self, coord: RouterCoord) -> bool:
        return coord in self._router_set

    def ports(self) -> Iterator[Port]:
        """All router qudits in canonical order.

        Terminal routers keep their output ports: the query in copy ``k``
        routes a qubit out of level ``k`` just before the local swap that
        carries it into copy ``k + 1``.  At the leaf level these ports are
        the cells read by the classical gates.
        """
        for r in self.routers:
            for kind in PortKind:
                yield Port(r.level, r.node, r.copy, kind)

    def leaf_ports(self) -> list[Port]:
        """Leaf wires in memory order: cell ``2j`` is OUTL of leaf router ``j``."""
        n = self.n
        out = []
        for j in range(2 ** (n - 1)):
            out.append(Port(n - 1, j, n - 1, PortKind.OUTL))
            out.append(Port(n - 1, j, n - 1, PortKind.OUTR))
        return out

    def outgoing(self, coord: RouterCoord) -> list[tuple[Port | Escape, Port]]:
        return [w for w in self.wires if isinstance(w[0], Port) and w[0].router == coord]

    def to_dict(self, planes: dict[tuple[int, int], int] | None = None) -> dict:
        doc = {
            "arch": self.spec.arch.value,
            "n": self.n,
            "capacity": self.spec.capacity,
            "router_count": len(self.routers),
            "nodes": [
                {"level": i, "node": j, "copies": list(self.spec.copies_at(i))}
                for i in range(self.n)
                for j in range(2**i)
            ],
            "routers": [[r.level, r.node, r.copy] for r in self.routers],
            "wires": [[str(a), str(b)] for a, b in self.wires],
        }
        if planes is not None:
            doc["planes"] = [
                {"level": i, "node": j, "plane": p} for (i, j), p in sorted(planes.items())
            ]
        return doc

    def to_json(self, planes=None) -> str:
        return json.dumps(self.to_dict(planes), indent=2, sort_keys=True)


def build_topology(spec: TreeSpec) -> Topology:
    n = spec.n
    routers = tuple(
        RouterCoord(i, j, k)
        for i in range(n)
        for j in range(2**i)
        for k in spec.copies_at(i)
    )
    wires: list[tuple[Port | Escape, Port]] = []
    for k in spec.copies_at(0):
        wires.append((Escape(k), Port(0, 0, k, PortKind.IN)))
    for r in routers:
        if r.level == n - 1 or is_terminal(r):
            continue
        for side, kind in ((0, PortKind.OUTL), (1, PortKind.OUTR)):
            child = Port(r.level + 1, 2 * r.node + side, r.copy, PortKind.IN)
            wires.append((Port(r.level, r.node, r.copy, kind), child))
    return Topology(spec, routers, tuple(wires), frozenset(routers))


def router_count(spec: TreeSpec) -> int:
    """Closed-form router count: ``2N - 2 - n`` (Fat-Tree) or ``N - 1`` (BB)."""
    if spec.arch is Arch.BB:
        return spec.capacity - 1
    return 2 * spec.capacity - 2 - spec.n


@dataclass
class PlaneAssignment:
    planes: dict[tuple[int, int], int]
    wire_planes: dict[tuple[Port | Escape, Port], int]
    acyclic: dict[int, bool]

    @property
    def ok(self) -> bool:
        return all(self.acyclic.values())


def assign_planes(topology: Topology) -> PlaneAssignment:
    """Two-plane layout: left children flip plane, right children keep it.

    Nodes cover levels ``0..n``; level ``n`` holds the memory cells.  A wire
    is drawn in the plane of the node it enters, and each plane's wire
    subgraph is checked for cycles with a union-find over qudits.
    """
    n = topology.n
    planes = {(0, 0): 0}
    for i in range(n):
        for j in range(2**i):
            p = planes[(i, j)]
            planes[(i + 1, 2 * j)] = 1 - p
            planes[(i + 1, 2 * j + 1)] = p

    wire_planes = {}
    for w in topology.wires:
        dst = w[1]
        wire_planes[w] = planes[(dst.level, dst.node)]

    acyclic = {}
    for plane in (0, 1):
        parent: dict = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for w, p in wire_planes.items():
            if p != plane:
                continue
            a, b = find(w[0]), find(w[1])
            if a == b:
                ok = False
                break
            parent[a] = b
        acyclic[plane] = ok
    return PlaneAssignment(planes, wire_planes, acyclic)
