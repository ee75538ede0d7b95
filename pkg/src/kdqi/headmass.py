"""Noise-weighted head mass, response curves, structural bounds and the monotonicity audit."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence, Union

import numpy as np
from scipy.stats import spearmanr

from .errors import ArgumentError
from .kernels import KernelSpec, apply_kernel, kernel_to_dict
from .ldpc import BlaParams, LdpcEnsemble, bla_shift, de_map
from .noise import AttenuationProfile, NoiseModel, attenuation, effective_head_bound
from .spectral import HeadSet, Spectrum, fourier, head_set


@dataclass
class HeadMassReport:
    d: int
    head: HeadSet
    sigma_K: float
    sigma_unweighted: float
    delta_w: float
    mu: float
    effective_head: float
    eta_min: float
    g_norm_sq: float = 1.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["head"] = list(self.head.indices)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def sigma_K(alpha: Spectrum, profile: AttenuationProfile, d: int, g_norm_sq: float | None = None) -> HeadMassReport:
    """``sum_{s in S_d} eta_K(s) |alpha_s|^2`` plus the effective-head bound.

    ``g_norm_sq`` defaults to the squared pre-normalization norm carried on ``alpha``.
    """
    head = head_set(alpha, d)
    idx = list(head.indices)
    p = alpha.probs[idx]
    w = profile.eta_K[idx]
    sk = float(np.dot(w, p))
    g2 = alpha.prenorm**2 if g_norm_sq is None else g_norm_sq
    return HeadMassReport(
        d, head, sk, float(p.sum()), profile.delta_w, profile.mu,
        effective_head_bound(sk, profile.delta_w, profile.mu, g2), float(w.min()), g2,
    )


def kernel_head_mass(shaped: Spectrum, K: KernelSpec, nm: NoiseModel, d: int) -> HeadMassReport:
    """Run ``F K`` on the shaped state and report its head mass under ``nm``."""
    alpha = fourier(apply_kernel(K, shaped))
    profile = attenuation(nm, shaped.domain, K, d, shaped)
    return sigma_K(alpha, profile, d)


@dataclass(frozen=True)
class RsThreshold:
    """Step response: success 1 once the head mass reaches ``t``."""

    t: float = 0.7

    def __call__(self, x: float) -> float:
        return 1.0 if x >= self.t else 0.0


@dataclass(frozen=True)
class LdpcDe:
    """Head-mass lift over ``sigma_ref`` shifts the erasure rate; returns ``1 - x_T``.

    ``x_T`` is the erasure fraction after ``iters`` DE steps at
    ``eps (1 - kappa * max(0, x - sigma_ref))``. A fixed step count keeps the map
    exactly monotone.
    """

    ensemble: LdpcEnsemble = LdpcEnsemble(3, 6)
    kappa: float = 1.0
    eps: float = 0.44
    sigma_ref: float = 0.0
    iters: int = 2000

    def __call__(self, x: float) -> float:
        lift = min(max(0.0, x - self.sigma_ref), (1.0 - 1e-12) / self.kappa)
        eps_eff = bla_shift(self.eps, BlaParams(self.kappa, lift))
        y = eps_eff
        for _ in range(self.iters):
            y = float(de_map(self.ensemble, eps_eff, y))
        return 1.0 - y


ResponseCurve = Union[RsThreshold, LdpcDe]


def is_monotone_response(response: ResponseCurve, grid: Sequence[float] | None = None) -> bool:
    grid = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid)
    vals = [response(float(x)) for x in grid]
    return all(b >= a for a, b in zip(vals, vals[1:]))


def isotropy_ceiling(delta: float, d: int, eta_max: float, N: int) -> float:
    """``delta * d * eta_max / N``."""
    if delta <= 0 or eta_max <= 0:
        raise ArgumentError("delta and eta_max must be positive")
    return delta * d * eta_max / N


def empirical_isotropy(alpha: Spectrum) -> float:
    return float(alpha.domain.size * alpha.probs.max())


def opi_bound(eps_rp: float, eta_min: float, delta_w: float) -> float:
    """``(1 - eps_rp) eta_min - Delta(w)``, floored at zero."""
    if not 0 <= eps_rp <= 1 or not 0 <= eta_min <= 1 or delta_w < 0:
        raise ArgumentError("opi_bound inputs out of range")
    return max(0.0, (1.0 - eps_rp) * eta_min - delta_w)


def opi_approx(bound: float, response: ResponseCurve) -> float:
    return response(bound)


def ldpc_bound(sigma_I: float, eta_min: float, delta_sigma_loc: float, delta_w: float) -> float:
    """``Sigma_I + eta_min dSigma_loc - Delta(w)``."""
    if not 0 <= sigma_I <= 1 or not 0 <= eta_min <= 1 or delta_sigma_loc < 0 or delta_w < 0:
        raise ArgumentError("ldpc_bound inputs out of range")
    return sigma_I + eta_min * delta_sigma_loc - delta_w


@dataclass
class AuditRow:
    label: str
    sigma_K: float
    effective: float
    response: float


@dataclass
class AuditReport:
    rows: list[AuditRow]
    violations: list[tuple[str, str]] = field(default_factory=list)
    strict_gains: list[tuple[str, str]] = field(default_factory=list)
    rank_correlation: float = float("nan")

    @property
    def monotone(self) -> bool:
        return not self.violations

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "sigma_K", "effective", "response"])
        for r in self.rows:
            w.writerow([r.label, f"{r.sigma_K:.12g}", f"{r.effective:.12g}", f"{r.response:.12g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "rows": [asdict(r) for r in self.rows],
            "violations": [list(v) for v in self.violations],
            "strict_gains": len(self.strict_gains),
            "rank_correlation": self.rank_correlation,
            "monotone": self.monotone,
        }


def audit_values(labels: Sequence[str], sigmas: Sequence[float], effective: Sequence[float],
                 responses: Sequence[float]) -> AuditReport:
    """Pairwise check that response order never contradicts ``sigma_K`` order (ties allowed)."""
    rows = [AuditRow(l, float(s), float(e), float(r)) for l, s, e, r in zip(labels, sigmas, effective, responses)]
    report = AuditReport(rows)
    for a, b in combinations(rows, 2):
        lo, hi = (a, b) if a.sigma_K <= b.sigma_K else (b, a)
        if lo.sigma_K < hi.sigma_K:
            if lo.response > hi.response:
                report.violations.append((lo.label, hi.label))
            elif lo.response < hi.response:
                report.strict_gains.append((lo.label, hi.label))
    if len(rows) >= 2 and np.ptp(sigmas) > 0 and np.ptp(responses) > 0:
        report.rank_correlation = float(spearmanr(sigmas, responses)[0])
    return report


def monotonicity_audit(kernels: Sequence[KernelSpec], shaped: Spectrum, nm: NoiseModel, d: int,
                       response: ResponseCurve, labels: Sequence[str] | None = None,
                       include_coherence: bool = False) -> AuditReport:
    """Evaluate ``response`` on each kernel's effective head mass and audit its ordering.

    The effective mass is ``Sigma_K - Delta(w)`` with one kernel-independent
    leakage measured on the reference head; ``include_coherence`` also
    subtracts ``mu^2 ||g||^2``.
    """
    if len(kernels) < 1:
        raise ArgumentError("need at least one kernel")
    labels = list(labels) if labels is not None else [json.dumps(kernel_to_dict(k)) for k in kernels]
    delta_w = attenuation(nm, shaped.domain, d=1).delta_w
    sig, eff, resp = [], [], []
    for K in kernels:
        alpha = fourier(apply_kernel(K, shaped))
        if include_coherence:
            rep = sigma_K(alpha, attenuation(nm, shaped.domain, K, d, shaped), d)
            e = max(0.0, rep.sigma_K - delta_w - rep.mu**2 * rep.g_norm_sq)
        else:
            rep = sigma_K(alpha, AttenuationProfile(nm.eta_K(shaped.domain), delta_w, 0.0), d)
            e = max(0.0, rep.sigma_K - delta_w)
        sig.append(rep.sigma_K)
        eff.append(e)
        resp.append(response(e))
    return audit_values(labels, sig, eff, resp)


def ldpc_audit(sigma_I: float, eta_min: float, delta_w: float, grid: Sequence[float],
               response: ResponseCurve | None = None) -> AuditReport:
    """Audit ``ldpc_bound`` over a ``dSigma_loc`` grid; the lift is measured from ``Sigma_I - Delta(w)``."""
    response = response or LdpcDe(sigma_ref=sigma_I - delta_w)
    sig = [ldpc_bound(sigma_I, eta_min, ds, delta_w) for ds in grid]
    return audit_values([f"dsigma={ds:g}" for ds in grid], sig, sig, [response(s) for s in sig])
