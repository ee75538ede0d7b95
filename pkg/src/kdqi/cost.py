"""Depth / T-count resource model, cost-benefit frontier rows and depth scaling fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .headmass import sigma_K
from .kernels import BlockLocal, Identity, KernelSpec, PhaseDiagonal, apply_kernel, synthesize_chirp
from .noise import AttenuationProfile, NoiseModel
from .seeding import task_rng
from .spectral import IndexDomain, Spectrum, fourier

KERNEL_KINDS = ("none", "global_chirp", "block_local")


@dataclass(frozen=True)
class CostConstants:
    c1: float = 1.0  # shaping
    c2: float = 1.0  # kernel
    c3: float = 1.0  # fourier layer
    c4: float = 1.0  # coherent decoder


@dataclass
class StageCost:
    stage: str
    depth: float
    t_count: float


@dataclass
class ResourceEstimate:
    breakdown: list[StageCost]

    @property
    def two_qubit_depth(self) -> float:
        return sum(s.depth for s in self.breakdown)

    @property
    def t_count(self) -> float:
        return sum(s.t_count for s in self.breakdown)

    def stage(self, name: str) -> StageCost:
        for s in self.breakdown:
            if s.stage == name:
                return s
        raise KeyError(name)


def estimate(n: int, ell: int, kernel: str = "none", b: int | None = None, truncated_qft: bool = True,
             coherent_decoder: tuple[int, int] | None = None, eps_synth: float = 1e-3,
             constants: CostConstants = CostConstants()) -> ResourceEstimate:
    """Unit-constant module costs summed over shaping, kernel, Fourier layer and optional decoder.

    Kernel depth is ``c2 n^2`` (global chirp), ``c2 n b`` (block-local) or 0; rotation
    stages carry a ``log2(1/eps_synth)`` T-count factor, shaping does not.
    """
    if n < 1 or ell < 1:
        raise ArgumentError("n and ell must be at least 1")
    if kernel not in KERNEL_KINDS:
        raise ArgumentError(f"unknown kernel kind {kernel!r}")
    if not 0 < eps_synth < 1:
        raise ArgumentError("synthesis accuracy must lie in (0, 1)")
    c = constants
    L = math.log2(1.0 / eps_synth)
    if kernel == "global_chirp":
        k = c.c2 * n * n
    elif kernel == "block_local":
        if not b or not 1 <= b <= n:
            raise ArgumentError("block-local kernel needs 1 <= b <= n")
        k = c.c2 * n * b
    else:
        k = 0.0
    f = c.c3 * (n if truncated_qft else n * n)
    stages = [
        StageCost("shaping", c.c1 * ell * n, c.c1 * ell * n),
        StageCost("kernel", k, k * L),
        StageCost("fourier", f, f * L),
    ]
    if coherent_decoder is not None:
        N, r = coherent_decoder
        if N < 1 or r < 0:
            raise ArgumentError("decoder needs N >= 1 and r >= 0")
        stages.append(StageCost("decoder", c.c4 * N * r, c.c4 * N * r * L))
    return ResourceEstimate(stages)


def chirp_rotation_ratio(n: int, constants: CostConstants = CostConstants()) -> float:
    """Exact synthesized rotation count over the model's global kernel term."""
    synth = synthesize_chirp(0.1, n)
    total = synth.single_qubit_rotations + synth.two_qubit_controlled_rotations
    return total / (constants.c2 * n * n)


# multi-digit quadratic-phase instances for the frontier


@dataclass(frozen=True, eq=False)
class QuadraticPhaseInstance:
    """``g(x) ~ exp(2 pi i (x^T A x + v.x) / p)`` on ``F_p^m``; ``A`` is upper-triangular."""

    p: int
    A: np.ndarray
    v: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def domain(self) -> IndexDomain:
        return IndexDomain.padic(self.p, self.m)

    @property
    def qubits(self) -> int:
        return self.m * math.ceil(math.log2(self.p))

    @classmethod
    def random(cls, p: int, m: int, seed: int = 0, index: int = 0) -> "QuadraticPhaseInstance":
        """Chain-coupled form: nonzero diagonal and nearest-neighbour couplings only."""
        rng = task_rng(seed, "quadratic-instance", index)
        A = np.zeros((m, m), dtype=np.int64)
        A[np.diag_indices(m)] = rng.integers(1, p, size=m)
        for i in range(m - 1):
            A[i, i + 1] = rng.integers(1, p)
        return cls(p, A, rng.integers(0, p, size=m))

    def quad(self, A: np.ndarray | None = None) -> np.ndarray:
        A = self.A if A is None else A
        x = self.domain.digits_of(np.arange(self.domain.size))
        return np.einsum("ki,ij,kj->k", x, A, x) % self.p

    def shaped(self) -> Spectrum:
        x = self.domain.digits_of(np.arange(self.domain.size))
        phase = (self.quad() + x @ self.v) % self.p
        return Spectrum.from_vector(self.domain, np.exp(2j * np.pi * phase / self.p))

    def cancelling_kernel(self, A: np.ndarray | None = None) -> PhaseDiagonal:
        return PhaseDiagonal(-2 * np.pi * self.quad(A) / self.p)

    def block_kernel(self, b: int) -> BlockLocal:
        """Cancels the quadratic terms inside each width-``b`` digit block only."""
        if self.m % b:
            raise ArgumentError("block width must divide the digit count")
        dim = self.p**b
        blocks = []
        for j in range(self.m // b):
            sub = self.A[j * b:(j + 1) * b, j * b:(j + 1) * b]
            y = IndexDomain.padic(self.p, b).digits_of(np.arange(dim))
            ph = np.einsum("ki,ij,kj->k", y, sub, y) % self.p
            blocks.append(np.diag(np.exp(-2j * np.pi * ph / self.p)))
        return BlockLocal(b, tuple(blocks))


@dataclass
class FrontierRow:
    label: str
    instance: int
    relative_depth: float
    gain: float
    sigma_K: float


@dataclass
class FrontierTable:
    rows: list[FrontierRow] = field(default_factory=list)

    def mean_gain(self, label: str) -> float:
        g = [r.gain for r in self.rows if r.label == label]
        return float(np.mean(g)) if g else float("nan")

    def relative_depth(self, label: str) -> float:
        return next(r.relative_depth for r in self.rows if r.label == label)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "instance", "relative_depth", "head_mass_gain", "sigma_K"])
        for r in self.rows:
            w.writerow([r.label, r.instance, f"{r.relative_depth:.12g}", f"{r.gain:.12g}", f"{r.sigma_K:.12g}"])
        return buf.getvalue()


def _head_mass(inst: QuadraticPhaseInstance, K: KernelSpec, eta_K: np.ndarray, d: int) -> float:
    alpha = fourier(apply_kernel(K, inst.shaped()))
    return sigma_K(alpha, AttenuationProfile(eta_K, 0.0, 0.0), d).sigma_K


def frontier_table(instances: Sequence[QuadraticPhaseInstance], nm: NoiseModel, d_star: int = 1,
                   b: int = 2, mistuned: int = 2, ell: int = 2, seed: int = 0,
                   constants: CostConstants = CostConstants()) -> FrontierTable:
    """Relative depth and head-mass gain of baseline, mis-tuned global, tuned global and block-local kernels.

    Mis-tuned kernels cancel a random wrong quadratic form; the block-local kernel
    cancels only the intra-block part of the true form.
    """
    if not instances:
        raise ArgumentError("need at least one instance")
    table = FrontierTable()
    for i, inst in enumerate(instances):
        n = inst.qubits
        bq = b * math.ceil(math.log2(inst.p))
        base_depth = estimate(n, ell, "none", constants=constants).two_qubit_depth
        rel_global = estimate(n, ell, "global_chirp", constants=constants).two_qubit_depth / base_depth
        rel_block = estimate(n, ell, "block_local", b=bq, constants=constants).two_qubit_depth / base_depth
        eta_K = nm.eta_K(inst.domain)
        s_id = _head_mass(inst, Identity(), eta_K, d_star)
        table.rows.append(FrontierRow("baseline", i, 1.0, 0.0, s_id))
        rng = task_rng(seed, "mistuned", i)
        for k in range(mistuned):
            wrong = np.triu(rng.integers(0, inst.p, size=inst.A.shape))
            wrong[np.diag_indices(inst.m)] = (inst.A.diagonal() + rng.integers(1, inst.p, size=inst.m)) % inst.p
            s = _head_mass(inst, inst.cancelling_kernel(wrong), eta_K, d_star)
            table.rows.append(FrontierRow("mistuned_global", i, rel_global, s - s_id, s))
        s = _head_mass(inst, inst.cancelling_kernel(), eta_K, d_star)
        table.rows.append(FrontierRow("tuned_global", i, rel_global, s - s_id, s))
        s = _head_mass(inst, inst.block_kernel(b), eta_K, d_star)
        table.rows.append(FrontierRow("block_local", i, rel_block, s - s_id, s))
    return table


@dataclass
class ScalingTable:
    ns: list[int]
    depths: dict[str, list[float]]

    def slope(self, label: str, decade: bool = True) -> float:
        """Least-squares log-log slope, by default over the top decade of the grid."""
        n = np.asarray(self.ns, dtype=float)
        y = np.asarray(self.depths[label], dtype=float)
        mask = n >= n.max() / 10 if decade else np.ones_like(n, dtype=bool)
        if mask.sum() < 2:
            mask = np.ones_like(n, dtype=bool)
        return float(np.polyfit(np.log(n[mask]), np.log(y[mask]), 1)[0])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = list(self.depths)
        w.writerow(["n"] + labels)
        for k, n in enumerate(self.ns):
            w.writerow([n] + [f"{self.depths[l][k]:.12g}" for l in labels])
        return buf.getvalue()


def scaling_table(ns: Sequence[int], b: int = 8, ell: int = 2,
                  constants: CostConstants = CostConstants()) -> ScalingTable:
    if len(ns) == 0:
        raise ArgumentError("empty n grid")
    depths: dict[str, list[float]] = {"baseline": [], "global_chirp": [], f"block_local_b{b}": []}
    for n in ns:
        depths["baseline"].append(estimate(n, ell, "none", constants=constants).two_qubit_depth)
        depths["global_chirp"].append(estimate(n, ell, "global_chirp", constants=constants).two_qubit_depth)
        depths[f"block_local_b{b}"].append(
            estimate(n, ell, "block_local", b=min(b, n), constants=constants).two_qubit_depth)
    return ScalingTable(list(ns), depths)


DEFAULT_N_GRID = tuple(int(round(v)) for v in np.geomspace(8, 4096, 28))
