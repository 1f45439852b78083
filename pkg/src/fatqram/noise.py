"""Fidelity bounds, virtual distillation and QEC cost arithmetic."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .costmodel import log2_exact
from .schedule import Kind, Weight, compile_single_query
from .topology import Arch, TreeSpec


class VacuousBoundError(ValueError):
    """The product bound gives 2 * prod - 1 <= 0."""


@dataclass(frozen=True)
class NoiseParams:
    eps0: float  # CSWAP (route)
    eps1: float  # inter-node SWAP
    eps2: float = 0.0  # intra-node local SWAP

    def __post_init__(self):
        for name in ("eps0", "eps1", "eps2"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.eps0, self.eps1, self.eps2)


@dataclass(frozen=True)
class GateCounts:
    g0: int
    g1: int
    g2: int

    def __post_init__(self):
        if min(self.g0, self.g1, self.g2) < 0:
            raise ValueError("gate counts must be nonnegative")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.g0, self.g1, self.g2)


def gate_counts(arch: Arch | str, n: int, mode: str = "closed_form") -> GateCounts:
    """Per-query gate-layer counts of each error class.

    ``closed_form`` (alias ``paper_bound``) uses ``log^2 N`` for every class.  ``schedule_exact``
    tallies the compiled single-query plan: route-type instructions feed
    ``g0``, transport and load instructions ``g1``, and the local-swap
    layers that actually move the query (every swap layer in its span but
    the data-retrieval one) ``g2``.
    """
    arch = Arch(arch)
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode in ("closed_form", "paper_bound"):
        return GateCounts(n * n, n * n, 0 if arch is Arch.BB else n * n)
    if mode != "schedule_exact":
        raise ValueError(f"unknown mode {mode!r}")
    plan = compile_single_query(TreeSpec(n, arch))
    kinds: Counter = Counter()
    swap_layers = 0
    for layer in plan.layers:
        for ins in layer.instructions:
            kinds[ins.kind] += 1
        if layer.weight is Weight.FAST and not any(
            i.kind is Kind.CLASSICAL_GATES for i in layer.instructions
        ):
            swap_layers += 1
    g0 = kinds[Kind.ROUTE] + kinds[Kind.UNROUTE]
    g1 = sum(kinds[k] for k in (Kind.TRANSPORT, Kind.UNTRANSPORT, Kind.LOAD, Kind.UNLOAD))
    return GateCounts(g0, g1, swap_layers)


@dataclass(frozen=True)
class FidelityBound:
    exact: float
    linearized: float


def fidelity_lower_bound(counts: GateCounts, params: NoiseParams) -> FidelityBound:
    """``(2 prod (1-eps_i)^g_i - 1)^2`` and its linear form ``1 - 2 sum g_i eps_i``."""
    prod = 1.0
    for g, e in zip(counts.as_tuple(), params.as_tuple()):
        prod *= (1 - e) ** g
    base = 2 * prod - 1
    if base <= 0:
        raise VacuousBoundError(f"bound vacuous: 2*prod - 1 = {base:.3g}")
    return FidelityBound(base * base, 1 - linearized_infidelity(counts, params))


def linearized_infidelity(counts: GateCounts, params: NoiseParams) -> float:
    """First-order infidelity ``2 sum g_i eps_i``; defined even where the product bound is vacuous."""
    return 2 * sum(g * e for g, e in zip(counts.as_tuple(), params.as_tuple()))


INFIDELITY_COEFFICIENT = 5.0  # fitted to reference infidelity values, not derived


def query_infidelity(N: int, eps0: float, c: float = INFIDELITY_COEFFICIENT) -> float:
    n = log2_exact(N)
    return c * n * n * eps0


def infidelity_table(
    Ns: Sequence[int], eps0s: Sequence[float], c: float = INFIDELITY_COEFFICIENT
) -> dict[int, dict[float, float]]:
    return {N: {e: query_infidelity(N, e, c) for e in eps0s} for N in Ns}


def fit_coefficient(samples: Sequence[tuple[int, float, float]]) -> float:
    """Least-squares ``c`` for ``infidelity ~ c n^2 eps0`` over ``(N, eps0, value)``."""
    xs = [log2_exact(N) ** 2 * e for N, e, _ in samples]
    ys = [v for *_, v in samples]
    return sum(x * y for x, y in zip(xs, ys)) / sum(x * x for x in xs)


def distilled_fidelity(F: float, k: int, model: str = "rank1-orthogonal") -> float:
    """Fidelity of ``rho^k / Tr rho^k`` for ``rho = F |psi><psi| + (1-F) sigma``.

    The default model takes ``sigma`` as a single pure state orthogonal to
    the ideal one.
    """
    if model != "rank1-orthogonal":
        raise ValueError(f"unknown error model {model!r}")
    if not 0 < F <= 1:
        raise ValueError("F must lie in (0, 1]")
    if k < 1:
        raise ValueError("need at least one copy")
    # F^k / (F^k + (1-F)^k), written to avoid underflow of F^k
    return 1.0 / (1.0 + ((1 - F) / F) ** k)


@dataclass(frozen=True)
class QecParams:
    m: int
    d: int = 1
    D: int = 1

    def __post_init__(self):
        if self.m < 1 or self.D < 1 or self.d < 1 or self.d % 2 == 0:
            raise ValueError("need m >= 1, D >= 1 and odd d >= 1")


@dataclass(frozen=True)
class QecCost:
    physical_qubits: int
    logical_parallelism: int
    logical_latency: int


def qec_cost(scheme: str, qec: QecParams, n: int) -> QecCost:
    N = 2**n
    if scheme == "encoded_bb":
        return QecCost(qec.m * N, 1, qec.D * n)
    if scheme == "noisy_fattree_pipelined":
        if qec.m > n:
            raise ValueError(f"pipelined scheme needs m <= log N ({qec.m} > {n})")
        return QecCost(N, n // qec.m, qec.D * n + qec.m)
    raise ValueError(f"unknown scheme {scheme!r}")


def logical_error(eps0: float, d: int) -> float:
    """Per-gate logical error ``eps0^((d+1)/2)``; a modeling stand-in."""
    return eps0 ** ((d + 1) / 2)


def infidelity_vs_generic(n_range: Sequence[int], eps0: float, d: int) -> list[dict]:
    """QRAM (``2 n^2 eps_L``) against a generic circuit of ``4 * 2^n`` gates."""
    eps_l = logical_error(eps0, d)
    rows = []
    for n in n_range:
        qram = 2 * n * n * eps_l
        generic = 4 * 2**n * eps_l
        rows.append({"n": n, "d": d, "qram": qram, "generic": generic, "ratio": generic / qram})
    return rows


def fidelity_ratio_series(n_range: Sequence[int], params: NoiseParams) -> list[dict]:
    """Linearized Fat-Tree and BB infidelities side by side."""
    rows = []
    for n in n_range:
        ft = linearized_infidelity(gate_counts(Arch.FAT_TREE, n), params)
        bb = linearized_infidelity(gate_counts(Arch.BB, n), params)
        rows.append({"n": n, "fat_tree": ft, "bb": bb, "ratio": ft / bb})
    return rows
