"""Depolarizing / banded-mixing / loss channel, per-mode attenuation and head-tail coherence."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ArgumentError
from .kernels import Identity, KernelSpec, apply_kernel
from .spectral import HeadSet, IndexDomain, Spectrum, fourier, head_set

DENSE_MU_LIMIT = 2**12
# fixed per-pair bound keeps mean leakage nondecreasing in w
DEFAULT_MIX_ANGLE = math.pi / 8

Transmittance = Union[float, Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class NoiseModel:
    """Local depolarizing rate ``eta``, mixing width ``w`` and transmittances ``tau``.

    ``tau`` may be a constant, a per-mode array, or a callable of the index
    array. Mixing blocks are drawn from ``mix_seed``; Givens angles are
    uniform in ``[-mix_angle, mix_angle]``.
    """

    eta: float = 0.0
    w: int = 0
    tau: Transmittance = 1.0
    mix_seed: int = 0
    mix_angle: float = DEFAULT_MIX_ANGLE

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise ArgumentError("depolarizing rate must lie in [0, 1)")
        if self.w < 0:
            raise ArgumentError("mixing width must be nonnegative")
        if not self.mix_angle >= 0:
            raise ArgumentError("mixing angle bound must be nonnegative")

    def tau_vector(self, domain: IndexDomain) -> np.ndarray:
        if callable(self.tau):
            t = np.asarray(self.tau(np.arange(domain.size)), dtype=float)
        else:
            t = np.broadcast_to(np.asarray(self.tau, dtype=float), (domain.size,)).copy()
        if t.shape != (domain.size,) or np.any(t <= 0) or np.any(t > 1):
            raise ArgumentError("transmittances must lie in (0, 1] for every mode")
        return t

    def depolarizing_weights(self, domain: IndexDomain) -> np.ndarray:
        """``(1 - eta)^q(s)`` with ``q`` the digit weight of ``s``."""
        return (1.0 - self.eta) ** domain.digit_weight()

    def eta_K(self, domain: IndexDomain) -> np.ndarray:
        return self.depolarizing_weights(domain) * self.tau_vector(domain)

    def with_seed(self, seed: int) -> "NoiseModel":
        return NoiseModel(self.eta, self.w, self.tau, seed, self.mix_angle)

    def to_dict(self) -> dict:
        tau = self.tau
        if callable(tau):
            raise ArgumentError("callable transmittances are not serializable")
        tau = float(tau) if np.ndim(tau) == 0 else np.asarray(tau, dtype=float).tolist()
        return {"eta": self.eta, "w": self.w, "tau": tau, "mix_seed": self.mix_seed, "mix_angle": self.mix_angle}


def mixing_blocks(nm: NoiseModel, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthostochastic block matrices of the width-``w`` banded mixer.

    Indices are cut into contiguous blocks of ``w + 1`` (first block shifted by a
    seeded offset) so every pair inside a block is within distance ``w``.
    Returns ``(starts, M)`` with ``M[k]`` the ``(w+1, w+1)`` matrix of block ``k``.
    """
    B = nm.w + 1
    rng = np.random.default_rng(nm.mix_seed)
    offset = int(rng.integers(0, B))
    starts = np.arange(offset - B if offset else 0, size, B)
    pairs = [(i, j) for i in range(B) for j in range(i + 1, B)]
    angles = rng.uniform(-nm.mix_angle, nm.mix_angle, size=(len(starts), len(pairs)))
    U = np.broadcast_to(np.eye(B), (len(starts), B, B)).copy()
    valid = (starts[:, None] + np.arange(B)[None, :] >= 0) & (starts[:, None] + np.arange(B)[None, :] < size)
    for k, (i, j) in enumerate(pairs):
        th = np.where(valid[:, i] & valid[:, j], angles[:, k], 0.0)
        c, s = np.cos(th)[:, None], np.sin(th)[:, None]
        ri, rj = U[:, i, :].copy(), U[:, j, :].copy()
        U[:, i, :] = c * ri - s * rj
        U[:, j, :] = s * ri + c * rj
    return starts, U**2


def mix_probabilities(nm: NoiseModel, p: np.ndarray) -> np.ndarray:
    if nm.w == 0:
        return p.copy()
    size = p.shape[0]
    starts, M = mixing_blocks(nm, size)
    B = nm.w + 1
    idx = starts[:, None] + np.arange(B)[None, :]
    inside = (idx >= 0) & (idx < size)
    blocks = np.where(inside, p[np.clip(idx, 0, size - 1)], 0.0)
    mixed = np.einsum("kij,kj->ki", M, blocks)
    out = np.zeros_like(p)
    np.add.at(out, idx[inside], mixed[inside])
    return out


@dataclass
class ChannelOutput:
    probs: np.ndarray
    leakage: float
    head: HeadSet
    p_head: float


def apply_channel(nm: NoiseModel, s: Spectrum, d: int = 1, head: HeadSet | None = None) -> ChannelOutput:
    """Push ``|amps|^2`` through depolarizing, banded mixing and loss.

    Leakage is the head probability lost across the mixing stage (clamped at 0);
    ``head`` defaults to the top-``d`` set of ``s``.
    """
    dom = s.domain
    head = head if head is not None else head_set(s, d)
    mask = head.mask(dom.size)
    p = s.probs / s.probs.sum()
    a = nm.depolarizing_weights(dom)
    kept = a * p
    p1 = kept + (1.0 - kept.sum()) / dom.size
    before = p1[mask].sum()
    p2 = mix_probabilities(nm, p1)
    leakage = max(0.0, float(before - p2[mask].sum()))
    p3 = nm.tau_vector(dom) * p2
    p3 /= p3.sum()
    return ChannelOutput(p3, leakage, head, float(p3[mask].sum()))


def head_tail_block(domain: IndexDomain, K: KernelSpec, head: Sequence[int]) -> np.ndarray:
    """Rows outside ``head``, columns inside ``head``, of the matrix ``F K``."""
    head = list(head)
    cols = []
    for j in head:
        cols.append(fourier(apply_kernel(K, Spectrum.delta(domain, j))).amps)
    M = np.stack(cols, axis=1)
    tail = np.ones(domain.size, dtype=bool)
    tail[head] = False
    return M[tail]


def _power_sigma_max(B: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = B.conj().T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = math.sqrt(nw)
        if abs(new - sigma) <= tol * max(new, 1.0):
            return new
        sigma = new
    return sigma


def head_tail_coherence(domain: IndexDomain, K: KernelSpec, head: Sequence[int]) -> float:
    """Operator norm of the head-to-tail block of ``F K``."""
    B = head_tail_block(domain, K, head)
    if B.size == 0:
        return 0.0
    if domain.size <= DENSE_MU_LIMIT:
        return float(np.linalg.svd(B, compute_uv=False)[0])
    return _power_sigma_max(B)


@dataclass
class AttenuationProfile:
    eta_K: np.ndarray
    delta_w: float
    mu: float
    head: HeadSet | None = field(default=None)

    def to_json(self) -> str:
        return json.dumps({
            "eta_K": self.eta_K.tolist(),
            "delta_w": self.delta_w,
            "mu": self.mu,
            "head": list(self.head.indices) if self.head else None,
        })


def attenuation(nm: NoiseModel, domain: IndexDomain, K: KernelSpec = Identity(), d: int = 1,
                shaped: Spectrum | None = None) -> AttenuationProfile:
    """Per-mode weights, measured leakage and coherence for kernel ``K``.

    With ``shaped`` given, the head is that of ``F K shaped`` and leakage is
    measured on that spectrum; otherwise a delta at index 0 serves as the
    reference spectrum.
    """
    alpha = fourier(apply_kernel(K, shaped)) if shaped is not None else Spectrum.delta(domain, 0)
    head = head_set(alpha, d)
    leak = apply_channel(nm, alpha, head=head).leakage
    mu = head_tail_coherence(domain, K, head.indices)
    return AttenuationProfile(nm.eta_K(domain), leak, mu, head)


def effective_head_bound(sigma_K: float, delta_w: float, mu: float, g_norm_sq: float) -> float:
    """``Sigma_K - Delta(w) - mu^2 ||g||^2``, floored at zero."""
    return max(0.0, sigma_K - delta_w - mu * mu * g_norm_sq)
