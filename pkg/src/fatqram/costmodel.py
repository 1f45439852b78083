"""Closed-form space, latency and bandwidth figures for five QRAM designs.

Latencies are in weighted circuit layers (a fast layer counts as
``fast_layer_fraction`` of a standard one).  For the BB and Fat-Tree
families the fast-layer share is kept symbolic, so the default 1/8 gives the
familiar ``8 log N + 0.125`` style constants; Virtual QRAM figures are fixed
at the 1/8 timing.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, field

from .schedule import TimingModel


class CostArch(str, enum.Enum):
    FAT_TREE = "fat-tree"
    D_FAT_TREE = "d-fat-tree"
    BB = "bb"
    D_BB = "d-bb"
    VIRTUAL = "virtual"


def log2_exact(N: int) -> int:
    if isinstance(N, bool) or not isinstance(N, int) or N < 2 or N & (N - 1):
        raise ValueError(f"capacity must be a power of two >= 2, got {N!r}")
    return N.bit_length() - 1


@dataclass(frozen=True)
class ArchParams:
    arch: CostArch
    N: int
    timing: TimingModel = field(default_factory=TimingModel)
    pages: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "arch", CostArch(self.arch))
        n = log2_exact(self.N)
        if self.arch is CostArch.VIRTUAL:
            if n < 2:
                raise ValueError("Virtual QRAM needs log N >= 2 (log log N undefined at N=2)")
            if self.pages is None:
                object.__setattr__(self, "pages", n / 2)

    @property
    def n(self) -> int:
        return log2_exact(self.N)

    @property
    def page_size(self) -> float | None:
        if self.pages is None:
            return None
        return self.N / self.pages


@dataclass(frozen=True)
class CostReport:
    arch: str
    N: int
    n: int
    qubits: float
    parallelism: int
    t1: float
    t_parallel: float
    t_parallel_amortized: bool
    amortized: float
    bandwidth: float
    memory_access_rate: float
    spacetime_volume: float
    swap_budget_us: float


def _latencies(arch: CostArch, n: int, f: float) -> tuple[float, float, float, float]:
    """(t1, t_parallel, amortized, swap budget) in weighted layers."""
    bb_t1 = 8 * n + f
    ft_t1 = 8 * n + f * (2 * n - 1)
    ft_par = 16 * n - 8 + f * (4 * n - 3)
    if arch is CostArch.FAT_TREE:
        # one initiation interval: two gate steps and two swap layers
        return ft_t1, ft_par, 8 + 2 * f, 8 + 2 * f
    if arch is CostArch.D_FAT_TREE:
        return ft_t1, ft_par / n, (8 + 2 * f) / n, 8 + 2 * f
    if arch is CostArch.BB:
        return bb_t1, n * bb_t1, bb_t1, bb_t1
    if arch is CostArch.D_BB:
        return bb_t1, bb_t1, bb_t1 / n, bb_t1
    # Virtual: fixed at the 1/8 timing; the budget keeps a bare -4 log log N term (no factor n)
    ll = math.log2(n)
    t1 = 4 * n**2 + 4.0625 * n - 4 * n * ll
    return t1, t1, 4 * n + 4.0625 - 4 * ll, 4 * n**2 + 4.0625 * n - 4 * ll


def cost_report(params: ArchParams) -> CostReport:
    n, N = params.n, params.N
    arch = params.arch
    f = params.timing.fast_layer_fraction
    qubits = {
        CostArch.FAT_TREE: 16 * N,
        CostArch.D_FAT_TREE: 16 * N * n,
        CostArch.BB: 8 * N,
        CostArch.D_BB: 8 * N * n,
        CostArch.VIRTUAL: 16 * N,
    }[arch]
    parallelism = {
        CostArch.FAT_TREE: n,
        CostArch.D_FAT_TREE: n * n,
        CostArch.BB: 1,
        CostArch.D_BB: n,
        CostArch.VIRTUAL: n,
    }[arch]
    t1, tp, amortized, budget = _latencies(arch, n, f)
    tau = params.timing.standard_layer_time
    bandwidth = 1e6 / (amortized * tau)  # bus width 1, tau in microseconds
    return CostReport(
        arch=arch.value,
        N=N,
        n=n,
        qubits=qubits,
        parallelism=parallelism,
        t1=t1,
        t_parallel=tp,
        t_parallel_amortized=arch is CostArch.D_FAT_TREE,
        amortized=amortized,
        bandwidth=bandwidth,
        memory_access_rate=bandwidth * N,
        spacetime_volume=qubits * amortized,
        swap_budget_us=budget * tau,
    )


class Algorithm(str, enum.Enum):
    GROVER = "grover"
    KSUM = "ksum"
    HAMILTONIAN_SIM = "hamiltonian-sim"
    QSP = "qsp"


def parallel_alg_depth(
    alg: Algorithm | str,
    N: int,
    *,
    fat_tree: bool,
    k: int = 2,
    d: int = 30,
    poly_exponent: float = 2.0,
) -> float:
    """Unit-prefactor circuit depth of a parallel algorithm.

    ``fat_tree=False`` is the sequential-QRAM baseline (BB or Virtual);
    ``fat_tree=True`` runs ``log N`` queries in parallel.
    """
    alg = Algorithm(alg)
    n = log2_exact(N)
    if alg is Algorithm.GROVER:
        return (n if fat_tree else n * n) * math.sqrt(N)
    if alg is Algorithm.KSUM:
        if k < 1:
            raise ValueError("k-sum needs k >= 1")
        return (n if fat_tree else n * n) * (N / n) ** (k / (k + 1))
    if alg is Algorithm.HAMILTONIAN_SIM:
        return n * math.log2(n) + (n if fat_tree else n * n)
    if d < 1:
        raise ValueError("QSP needs polynomial degree d >= 1")
    poly = float(d) ** poly_exponent
    return poly / n if fat_tree else poly


CSV_COLUMNS = [
    "arch",
    "N",
    "n",
    "qubits",
    "parallelism",
    "t1",
    "t_parallel",
    "t_parallel_amortized",
    "amortized",
    "bandwidth",
    "memory_access_rate",
    "spacetime_volume",
    "swap_budget_us",
]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form
    return str(v)


def emit_table_csv(reports: list[CostReport]) -> str:
    """CSV with the fixed column order ``CSV_COLUMNS``."""
    if not reports:
        raise ValueError("no reports to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        row = asdict(r)
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def all_reports(N: int, timing: TimingModel | None = None) -> list[CostReport]:
    timing = timing or TimingModel()
    return [cost_report(ArchParams(a, N, timing)) for a in CostArch]
