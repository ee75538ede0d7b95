"""Two-parameter kernel ansatz: landscape, gradient bound, shot-noise ascent and block-kernel search."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ArgumentError
from .headmass import sigma_K
from .kernels import BlockLocal, GivensLayer, Identity, KernelSpec, PhaseDiagonal, Product, apply_kernel
from .noise import AttenuationProfile, NoiseModel
from .opi import REFERENCE_INSTANCE, OpiInstance, centered_square, opi_shaped_state
from .seeding import task_rng
from .spectral import IndexDomain, Spectrum, build_shaped_state, fourier


@dataclass(frozen=True)
class Ansatz:
    """``K(t1, t2) = Givens(t2) . exp(-i t1 G1)`` on an OPI instance.

    ``G1 = diag(2 pi c(x) / p)``. With ``reduced`` set, ``c(x)`` is the centered
    representative of ``x^2 mod p``, otherwise ``c(x) = x^2``; both give the exact
    cancelling chirp at integer ``t1 = a``. The mixing layer rotates the disjoint
    pairs ``(2k, 2k+1)`` and has generator norm 1. ``active`` freezes a parameter
    (zero generator) when False.
    """

    inst: OpiInstance = REFERENCE_INSTANCE
    reduced: bool = True
    active: tuple[bool, bool] = (True, True)

    @property
    def g1(self) -> np.ndarray:
        if not self.active[0]:
            return np.zeros(self.inst.p)
        x = np.arange(self.inst.p, dtype=np.int64)
        c = centered_square(self.inst.p) if self.reduced else x * x
        return 2 * np.pi * c / self.inst.p

    @property
    def generator_norms(self) -> tuple[float, float]:
        return float(np.abs(self.g1).max()), 1.0 if self.active[1] else 0.0

    @property
    def optimum(self) -> tuple[float, float]:
        return float(self.inst.h_coeffs[0]), 0.0

    def box(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """Main lobe: neighbouring integer rates are exact nulls, so ``t1`` spans ``a +- 1``."""
        a = self.optimum[0]
        return (a - 1.0, a + 1.0), (-math.pi / 2, math.pi / 2)

    def kernel(self, t1: float, t2: float) -> KernelSpec:
        parts = [PhaseDiagonal(-t1 * self.g1)]
        if self.active[1]:
            parts.append(GivensLayer(t2))
        return Product(tuple(parts))


class Objective:
    """Exact noise-weighted head mass of the ansatz, with cached state and weights."""

    def __init__(self, ansatz: Ansatz, nm: NoiseModel, d: int = 1):
        self.ansatz = ansatz
        self.d = d
        self.shaped = opi_shaped_state(ansatz.inst)
        self.profile = AttenuationProfile(nm.eta_K(self.shaped.domain), 0.0, 0.0)

    def __call__(self, t1: float, t2: float) -> float:
        alpha = fourier(apply_kernel(self.ansatz.kernel(t1, t2), self.shaped))
        return sigma_K(alpha, self.profile, self.d).sigma_K

    def grad(self, t1: float, t2: float, h: float) -> tuple[float, float]:
        g1 = (self(t1 + h, t2) - self(t1 - h, t2)) / (2 * h)
        g2 = (self(t1, t2 + h) - self(t1, t2 - h)) / (2 * h)
        return g1, g2


def shot_estimate(sigma: float, n_shots: int, rng: np.random.Generator) -> float:
    """Head-hit frequency of ``n_shots`` Bernoulli(sigma) draws."""
    return rng.binomial(n_shots, min(max(sigma, 0.0), 1.0)) / n_shots


@dataclass
class LandscapePoint:
    theta1: float
    theta2: float
    sigma_exact: float
    sigma_shot: float
    grad_fd: tuple[float, float]


def default_grid(ansatz: Ansatz, n1: int = 41, n2: int = 41) -> tuple[np.ndarray, np.ndarray]:
    (l1, h1), (l2, h2) = ansatz.box()
    return np.linspace(l1, h1, n1), np.linspace(l2, h2, n2)


def landscape_scan(ansatz: Ansatz, theta1_grid: Sequence[float], theta2_grid: Sequence[float],
                   nm: NoiseModel, d: int = 1, n_shots: int = 5000, seed: int = 0,
                   h: float = 0.02) -> list[LandscapePoint]:
    if len(theta1_grid) == 0 or len(theta2_grid) == 0:
        raise ArgumentError("empty landscape grid")
    obj = Objective(ansatz, nm, d)
    out = []
    for i, t1 in enumerate(theta1_grid):
        for j, t2 in enumerate(theta2_grid):
            rng = task_rng(seed, "landscape", i * len(theta2_grid) + j)
            s = obj(t1, t2)
            out.append(LandscapePoint(float(t1), float(t2), s, shot_estimate(s, n_shots, rng), obj.grad(t1, t2, h)))
    return out


def landscape_csv(points: Sequence[LandscapePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta1", "theta2", "sigma_exact", "sigma_shot"])
    for pt in points:
        w.writerow([f"{pt.theta1:.12g}", f"{pt.theta2:.12g}", f"{pt.sigma_exact:.12g}", f"{pt.sigma_shot:.12g}"])
    return buf.getvalue()


def grid_max(ansatz: Ansatz, nm: NoiseModel, d: int = 1, n1: int = 81, n2: int = 81) -> float:
    obj = Objective(ansatz, nm, d)
    g1, g2 = default_grid(ansatz, n1, n2)
    return max(obj(a, b) for a in g1 for b in g2)


@dataclass
class GradientBoundReport:
    samples: int
    bound: tuple[float, float]
    max_abs_grad: tuple[float, float]
    violations: int
    slack: float

    @property
    def max_ratio(self) -> float:
        return max((g / b if b > 0 else (math.inf if g > 0 else 0.0)) for g, b in zip(self.max_abs_grad, self.bound))


def gradient_bound_check(ansatz: Ansatz, nm: NoiseModel, d: int = 1, samples: int = 200, h: float = 1e-3,
                         seed: int = 0, slack_const: float = 10.0) -> GradientBoundReport:
    """Central differences of the exact objective against ``2 ||G_i||`` at random box points.

    Allowed slack is ``slack_const * h^2``.
    """
    if h <= 0:
        raise ArgumentError("finite-difference step must be positive")
    obj = Objective(ansatz, nm, d)
    (l1, h1), (l2, h2) = ansatz.box()
    rng = task_rng(seed, "gradient-bound")
    bound = tuple(2.0 * g for g in ansatz.generator_norms)
    slack = slack_const * h * h
    worst = [0.0, 0.0]
    violations = 0
    for _ in range(samples):
        t1, t2 = rng.uniform(l1, h1), rng.uniform(l2, h2)
        g = obj.grad(t1, t2, h)
        for k in range(2):
            worst[k] = max(worst[k], abs(g[k]))
            if abs(g[k]) > bound[k] + slack:
                violations += 1
    return GradientBoundReport(samples, bound, (worst[0], worst[1]), violations, slack)


@dataclass
class OptimizerConfig:
    gradient: str = "central"  # or "spsa"
    h: float = 0.02
    lr: float = 0.3
    decay: str = "sqrt"  # lr / sqrt(t), or "none"
    step_rule: str = "plain"  # or "normalized" (unit-length gradient direction)

    def __post_init__(self):
        if self.gradient not in ("central", "spsa"):
            raise ArgumentError(f"unknown gradient estimator {self.gradient!r}")
        if self.decay not in ("sqrt", "none"):
            raise ArgumentError(f"unknown decay {self.decay!r}")
        if self.step_rule not in ("plain", "normalized"):
            raise ArgumentError(f"unknown step rule {self.step_rule!r}")
        if self.h <= 0 or self.lr <= 0:
            raise ArgumentError("h and lr must be positive")


@dataclass
class TrajectoryRow:
    it: int
    theta1: float
    theta2: float
    sigma_shot: float
    sigma_exact: float
    best_so_far: float


@dataclass
class Trajectory:
    rows: list[TrajectoryRow]

    @property
    def best(self) -> float:
        return self.rows[-1].best_so_far

    @property
    def final(self) -> tuple[float, float]:
        return self.rows[-1].theta1, self.rows[-1].theta2

    def iterations_to(self, target: float) -> int | None:
        for r in self.rows:
            if r.best_so_far >= target:
                return r.it
        return None

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "theta1", "theta2", "sigma_shot", "sigma_exact", "best_so_far"])
        for r in self.rows:
            w.writerow([r.it, f"{r.theta1:.12g}", f"{r.theta2:.12g}", f"{r.sigma_shot:.12g}",
                        f"{r.sigma_exact:.12g}", f"{r.best_so_far:.12g}"])
        return buf.getvalue()


def optimize(ansatz: Ansatz, nm: NoiseModel, d: int, init: tuple[float, float], n_shots: int = 5000,
             max_iters: int = 40, seed: int = 0, config: OptimizerConfig | None = None) -> Trajectory:
    """Gradient ascent on shot-noise estimates; ``best_so_far`` tracks the exact objective."""
    if max_iters < 1:
        raise ArgumentError("max_iters must be at least 1")
    cfg = config or OptimizerConfig()
    obj = Objective(ansatz, nm, d)
    rng = task_rng(seed, "optimize")
    est = lambda t: shot_estimate(obj(*t), n_shots, rng)
    th = np.array(init, dtype=float)
    s0 = obj(*th)
    rows = [TrajectoryRow(0, th[0], th[1], est(th), s0, s0)]
    best = s0
    eye = np.eye(2)
    for t in range(1, max_iters + 1):
        if cfg.gradient == "central":
            g = np.array([(est(th + cfg.h * e) - est(th - cfg.h * e)) / (2 * cfg.h) for e in eye])
        else:
            delta = rng.choice([-1.0, 1.0], size=2)
            g = (est(th + cfg.h * delta) - est(th - cfg.h * delta)) / (2 * cfg.h) * delta
        rate = cfg.lr / math.sqrt(t) if cfg.decay == "sqrt" else cfg.lr
        if cfg.step_rule == "normalized":
            norm = np.linalg.norm(g)
            step = rate * g / norm if norm > 0 else np.zeros(2)
        else:
            step = rate * g
        th = th + step
        s = obj(*th)
        best = max(best, s)
        rows.append(TrajectoryRow(t, th[0], th[1], est(th), s, best))
    return Trajectory(rows)


def in_basin(obj: Objective, point: tuple[float, float], target: float, tol: float = 0.05,
             steps: int = 300, h: float = 1e-3) -> bool:
    """Noiseless normalized steepest ascent from ``point`` reaches within ``tol`` of ``target``."""
    th = np.array(point, dtype=float)
    for k in range(steps):
        g = np.array(obj.grad(th[0], th[1], h))
        n = np.linalg.norm(g)
        if n == 0:
            break
        th += (0.05 if k < 200 else 0.01) * g / n
    return obj(*th) >= target - tol


def far_inits(ansatz: Ansatz, nm: NoiseModel, d: int, count: int, seed: int = 0, max_sigma: float = 0.1,
              require_basin: bool = True, target: float | None = None, max_draws: int = 100_000) -> list[tuple[float, float]]:
    """Uniform box draws with ``Sigma_K < max_sigma``; optionally only inside the peak's basin."""
    obj = Objective(ansatz, nm, d)
    target = grid_max(ansatz, nm, d) if target is None and require_basin else target
    (l1, h1), (l2, h2) = ansatz.box()
    out = []
    for k in range(max_draws):
        rng = task_rng(seed, "far-init", k)
        pt = (float(rng.uniform(l1, h1)), float(rng.uniform(l2, h2)))
        if obj(*pt) >= max_sigma:
            continue
        if require_basin and not in_basin(obj, pt, target):
            continue
        out.append(pt)
        if len(out) == count:
            return out
    raise ArgumentError("could not draw enough far initializations")


def precision_radius(ansatz: Ansatz, nm: NoiseModel, d: int = 1, frac: float = 0.9,
                     directions: int = 16, tol: float = 1e-4) -> float:
    """Largest r with ``Sigma(opt + r u) >= frac * Sigma(opt)`` for every sampled unit direction u."""
    obj = Objective(ansatz, nm, d)
    o = np.array(ansatz.optimum)
    peak = obj(*o)
    angles = 2 * np.pi * np.arange(directions) / directions
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def ok(r):
        return all(obj(*(o + r * u)) >= frac * peak for u in dirs)

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def fit_precision_constant(primes: Sequence[int], nm: NoiseModel, a: int = 5, b: int = 11) -> float:
    """``c = min_p r(p) sqrt(n_p)`` with ``n_p = log2 p``, so ``|dtheta| <= c / sqrt(n)`` keeps 90%."""
    cs = []
    for p in primes:
        inst = OpiInstance.full(p, a % p or 1, b % p)
        r = precision_radius(Ansatz(inst), nm)
        cs.append(r * math.sqrt(math.log2(p)))
    return float(min(cs))


# block-local kernel search on small parity instances


@dataclass
class ParityInstance:
    """Random sparse parity checks on ``n`` bits; objective = number of satisfied checks.

    The shaped state is the centered objective ``f(x) - m/2``, whose Walsh spectrum
    sits on the check supports.
    """

    n: int
    checks: list[tuple[int, ...]]
    rhs: tuple[int, ...]

    @classmethod
    def random(cls, n: int, m: int, k: int = 3, seed: int = 0) -> "ParityInstance":
        rng = task_rng(seed, "parity-instance")
        checks = [tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False))) for _ in range(m)]
        return cls(n, checks, tuple(int(v) for v in rng.integers(0, 2, size=m)))

    def objective(self) -> np.ndarray:
        x = np.arange(2**self.n)
        bits = (x[:, None] >> np.arange(self.n)) & 1
        sat = np.zeros(2**self.n, dtype=np.int64)
        for chk, r in zip(self.checks, self.rhs):
            sat += (bits[:, list(chk)].sum(axis=1) % 2) == r
        return sat

    def shaped(self) -> Spectrum:
        half = len(self.checks) / 2
        return build_shaped_state(IndexDomain.boolean(self.n), self.objective(), lambda t: t - half)


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=np.complex128)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j], e[j, i] = -1j, 1j
            basis.append(e)
    return basis


def block_kernel(params: np.ndarray, b: int, basis: list[np.ndarray] | None = None) -> BlockLocal:
    """Shared ``exp(i sum_k params_k B_k)`` on every b-qubit block."""
    basis = _hermitian_basis(2**b) if basis is None else basis
    H = sum(c * B for c, B in zip(params, basis))
    return BlockLocal(b, (expm(1j * H),))


@dataclass
class BlockSearchResult:
    kernel: KernelSpec
    sigma_identity: float
    sigma_best: float
    evaluations: int
    history: list[float] = field(default_factory=list)

    @property
    def gain(self) -> float:
        return self.sigma_best - self.sigma_identity


def block_kernel_search(instance: ParityInstance, b: int, budget: int, nm: NoiseModel | None = None,
                        d: int | None = None, seed: int = 0, random_fraction: float = 0.3,
                        step: float = 0.3) -> BlockSearchResult:
    """Random draws then coordinate ascent over shared b-local block unitaries.

    The identity is always evaluated first, so the reported gain is never negative.
    """
    if instance.n > 16:
        raise ArgumentError("block search is limited to n <= 16")
    if b < 1 or instance.n % b:
        raise ArgumentError("block width must divide n")
    nm = nm or NoiseModel()
    d = d if d is not None else max(1, instance.n // b)
    shaped = instance.shaped()
    profile = AttenuationProfile(nm.eta_K(shaped.domain), 0.0, 0.0)
    basis = _hermitian_basis(2**b)

    def score(K: KernelSpec) -> float:
        return sigma_K(fourier(apply_kernel(K, shaped)), profile, d).sigma_K

    base = score(Identity())
    best_K: KernelSpec = Identity()
    best, best_params = base, np.zeros(len(basis))
    history = [base]
    rng = task_rng(seed, "block-search")
    n_random = int(budget * random_fraction)
    used = 0
    while used < n_random:
        params = rng.normal(0.0, 1.0, size=len(basis))
        K = block_kernel(params, b, basis)
        s = score(K)
        used += 1
        if s > best:
            best, best_K, best_params = s, K, params
        history.append(best)
    k = 0
    while used < budget:
        for sign in (1.0, -1.0):
            if used >= budget:
                break
            params = best_params.copy()
            params[k % len(basis)] += sign * step
            K = block_kernel(params, b, basis)
            s = score(K)
            used += 1
            if s > best:
                best, best_K, best_params = s, K, params
            history.append(best)
        k += 1
        if k % len(basis) == 0:
            step *= 0.5
    return BlockSearchResult(best_K, base, best, used, history)
