"""Quadratic/affine OPI instances, exact and truncated phase concentration, and chirp-rate scans."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .headmass import sigma_K
from .kernels import Chirp, KernelSpec, PhaseDiagonal, chirp_mod_p, apply_kernel
from .noise import NoiseModel, attenuation
from .spectral import IndexDomain, Spectrum, dft_p, head_order, is_prime


@dataclass(frozen=True)
class OpiInstance:
    """Phase ``h(x) = a x^2 + b x + c`` over distinct evaluation points of ``F_p``."""

    p: int
    eval_points: tuple[int, ...]
    h_coeffs: tuple[int, int, int]
    r: int = 2

    def __post_init__(self):
        if self.p < 3 or not is_prime(self.p):
            raise ArgumentError(f"p={self.p} must be an odd prime")
        pts = tuple(int(x) for x in self.eval_points)
        if not pts or len(set(pts)) != len(pts) or min(pts) < 0 or max(pts) >= self.p:
            raise ArgumentError("evaluation points must be distinct elements of F_p")
        if self.r not in (1, 2):
            raise ArgumentError("only degree r <= 2 is supported")
        a, b, c = (int(v) % self.p for v in self.h_coeffs)
        if self.r == 2 and a == 0:
            raise ArgumentError("quadratic instance needs a != 0")
        if self.r == 1 and a != 0:
            raise ArgumentError("affine instance must have a = 0")
        object.__setattr__(self, "eval_points", pts)
        object.__setattr__(self, "h_coeffs", (a, b, c))

    @classmethod
    def full(cls, p: int, a: int, b: int, c: int = 0) -> "OpiInstance":
        return cls(p, tuple(range(p)), (a, b, c), 2 if a % p else 1)

    @classmethod
    def contiguous(cls, p: int, m: int, a: int, b: int, c: int = 0, start: int = 0) -> "OpiInstance":
        if not 1 <= m <= p:
            raise ArgumentError("subset size must lie in [1, p]")
        return cls(p, tuple(range(start, start + m)), (a, b, c), 2 if a % p else 1)

    @property
    def m(self) -> int:
        return len(self.eval_points)

    @property
    def domain(self) -> IndexDomain:
        return IndexDomain.padic(self.p, 1)

    def h(self, x) -> np.ndarray:
        a, b, c = self.h_coeffs
        x = np.asarray(x, dtype=np.int64)
        return (a * x * x + b * x + c) % self.p

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "eval_points": list(self.eval_points),
                           "h_coeffs": list(self.h_coeffs), "r": self.r})

    @classmethod
    def from_json(cls, text: str) -> "OpiInstance":
        d = json.loads(text)
        return cls(int(d["p"]), tuple(d["eval_points"]), tuple(d["h_coeffs"]), int(d.get("r", 2)))


# p = 31 quadratic instance used by the scan, landscape and frontier defaults
REFERENCE_INSTANCE = OpiInstance.full(31, 5, 11, 2)


def opi_shaped_state(inst: OpiInstance) -> Spectrum:
    pts = np.asarray(inst.eval_points)
    g = np.zeros(inst.p, dtype=np.complex128)
    g[pts] = np.exp(2j * np.pi * inst.h(pts) / inst.p) / np.sqrt(inst.m)
    return Spectrum(inst.domain, g)


def _top1(alpha: Spectrum) -> tuple[float, int]:
    k = int(head_order(alpha.amps)[0])
    return float(alpha.probs[k]), k


def ppc_check(inst: OpiInstance, theta_int: int) -> tuple[float, int]:
    """Apply the cancelling chirp ``K_{-theta}`` and the DFT; return top-1 mass and its index."""
    alpha = dft_p(apply_kernel(chirp_mod_p(-int(theta_int), inst.p), opi_shaped_state(inst)))
    return _top1(alpha)


def ppc_truncated_tail(p: int, m: int, theta_int: int | None = None, a: int = 1, b: int = 0) -> float:
    """``1 - top-1 mass`` of the tuned pipeline on the contiguous subset ``{0..m-1}``.

    After the chirp cancels the quadratic part the state is a plane wave on m of
    p points, so the top-1 mass is exactly ``m / p``.
    """
    inst = OpiInstance.contiguous(p, m, a, b)
    mass, _ = ppc_check(inst, a if theta_int is None else theta_int)
    return max(0.0, 1.0 - mass)


def fit_tail_constant(grid: Sequence[tuple[int, int]]) -> float:
    """Smallest ``C`` with ``tail(p, m) <= C / m`` over ``grid``."""
    return max(ppc_truncated_tail(p, m) * m for p, m in grid)


def centered_square(p: int) -> np.ndarray:
    """Representative of ``x^2 mod p`` in ``(-p/2, p/2]`` for every ``x`` in ``F_p``."""
    x = np.arange(p, dtype=np.int64)
    return ((x * x + p // 2) % p) - p // 2


def scan_kernel(inst: OpiInstance, gamma: float) -> KernelSpec:
    """``exp(-2 pi i gamma c(x) / p)`` with ``c(x) = x^2 mod p`` centered.

    Integer ``gamma`` takes the exact mod-p chirp. For real ``gamma`` the centered
    residue keeps phases small, so the rate interpolates smoothly between integers;
    raw ``x^2`` would alias at ``gamma = a + p/2`` and make the peak ragged.
    """
    g = float(gamma)
    if g.is_integer():
        return Chirp((0, 0, 1), -int(g), inst.p)
    return PhaseDiagonal(-2 * np.pi * g * centered_square(inst.p) / inst.p)


@dataclass
class ScanRow:
    theta: float
    sigma_K: float
    sigma_unweighted: float
    above_threshold: bool


@dataclass
class ScanTable:
    rows: list[ScanRow]
    threshold: float

    @property
    def argmax(self) -> float:
        return self.rows[int(np.argmax([r.sigma_K for r in self.rows]))].theta

    @property
    def peak(self) -> float:
        return max(r.sigma_K for r in self.rows)

    def above_windows(self) -> list[tuple[float, float]]:
        """Maximal runs of consecutive above-threshold grid points, as (first, last) theta."""
        out, start, prev = [], None, None
        for r in self.rows:
            if r.above_threshold and start is None:
                start = r.theta
            if not r.above_threshold and start is not None:
                out.append((start, prev))
                start = None
            prev = r.theta
        if start is not None:
            out.append((start, prev))
        return out

    def peak_width(self) -> float:
        """Width of the threshold crossing around the argmax, linearly interpolated."""
        th = np.array([r.theta for r in self.rows])
        s = np.array([r.sigma_K for r in self.rows])
        k = int(np.argmax(s))
        if s[k] < self.threshold:
            return 0.0
        lo = k
        while lo > 0 and s[lo - 1] >= self.threshold:
            lo -= 1
        hi = k
        while hi < len(s) - 1 and s[hi + 1] >= self.threshold:
            hi += 1

        def cross(i, j):
            return th[i] + (self.threshold - s[i]) * (th[j] - th[i]) / (s[j] - s[i])

        left = cross(lo - 1, lo) if lo > 0 else th[lo]
        right = cross(hi, hi + 1) if hi < len(s) - 1 else th[hi]
        return float(right - left)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "sigma_K", "sigma_unweighted", "above_threshold"])
        for r in self.rows:
            w.writerow([f"{r.theta:.12g}", f"{r.sigma_K:.12g}", f"{r.sigma_unweighted:.12g}", int(r.above_threshold)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"argmax": self.argmax, "peak": self.peak, "peak_width": self.peak_width(),
                "threshold": self.threshold, "windows": [list(w) for w in self.above_windows()]}


def scan_point(inst: OpiInstance, gamma: float, nm: NoiseModel, d_star: int = 1, shaped: Spectrum | None = None):
    shaped = opi_shaped_state(inst) if shaped is None else shaped
    K = scan_kernel(inst, gamma)
    alpha = dft_p(apply_kernel(K, shaped))
    profile = attenuation(nm, inst.domain, K, d_star, shaped)
    return sigma_K(alpha, profile, d_star)


def theta_scan(inst: OpiInstance, theta_grid: Sequence[float], nm: NoiseModel, d_star: int = 1,
               threshold: float = 0.7) -> ScanTable:
    if len(theta_grid) == 0:
        raise ArgumentError("empty theta grid")
    shaped = opi_shaped_state(inst)
    rows = []
    for g in theta_grid:
        rep = scan_point(inst, g, nm, d_star, shaped)
        rows.append(ScanRow(float(g), rep.sigma_K, rep.sigma_unweighted, rep.sigma_K >= threshold))
    return ScanTable(rows, threshold)
