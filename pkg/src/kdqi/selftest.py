"""Fast invariant suite run by the ``selftest`` subcommand."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .headmass import LdpcDe, RsThreshold, is_monotone_response, ldpc_audit, sigma_K
from .kernels import chirp_mod_p, is_unitary, synthesized_matches_diagonal, synthesize_chirp
from .ldpc import BlaParams, LdpcEnsemble, bla_tangency_check, de_threshold
from .noise import AttenuationProfile, NoiseModel, apply_channel, attenuation
from .opi import OpiInstance, ppc_check
from .seeding import task_rng
from .spectral import IndexDomain, Spectrum, dft_p, fourier, walsh_hadamard
from .variational import Ansatz, gradient_bound_check
from .cost import scaling_table


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _transforms_unitary() -> tuple[bool, str]:
    rng = task_rng(0, "selftest-transform")
    worst = 0.0
    for dom in (IndexDomain.boolean(6), IndexDomain.padic(5, 2), IndexDomain.padic(7, 1)):
        v = rng.normal(size=dom.size) + 1j * rng.normal(size=dom.size)
        s = Spectrum.from_vector(dom, v)
        t = fourier(s)
        worst = max(worst, abs(np.linalg.norm(t.amps) - 1.0))
        back = walsh_hadamard(t) if dom.kind == "boolean" else dft_p(t, inverse=True)
        worst = max(worst, float(np.abs(back.amps - s.amps).max()))
    return worst < 1e-12, f"max error {worst:.2e}"


def _exact_ppc() -> tuple[bool, str]:
    rng = task_rng(0, "selftest-ppc")
    bad = 0
    for _ in range(50):
        p = int(rng.choice([3, 5, 7, 11, 13, 31, 101]))
        a, b, c = int(rng.integers(1, p)), int(rng.integers(0, p)), int(rng.integers(0, p))
        mass, k = ppc_check(OpiInstance.full(p, a, b, c), a)
        bad += abs(mass - 1.0) > 1e-12 or k != b
    return bad == 0, f"{bad} failures of 50"


def _de_threshold() -> tuple[bool, str]:
    e = [de_threshold(LdpcEnsemble(v, 2 * v)).eps_star for v in (3, 4, 5)]
    return abs(e[0] - 0.4294) < 1e-3 and e[0] > e[1] > e[2], f"{e[0]:.6f} {e[1]:.6f} {e[2]:.6f}"


def _bla_identities() -> tuple[bool, str]:
    worst = 0.0
    for ds in (0.02, 0.04, 0.06):
        r = bla_tangency_check(LdpcEnsemble(3, 6), BlaParams(1.0, ds))
        worst = max(worst, r.value_error, r.deriv_error)
    return worst < 1e-12, f"max error {worst:.2e}"


def _chirp_synthesis() -> tuple[bool, str]:
    ok = all(synthesized_matches_diagonal(0.37, n) for n in range(1, 13))
    counts = all(
        synthesize_chirp(0.1, n).single_qubit_rotations + synthesize_chirp(0.1, n).two_qubit_controlled_rotations
        == n + n * (n - 1) // 2 for n in range(1, 13))
    return ok and counts, "n <= 12 phases and counts"


def _channel_sound() -> tuple[bool, str]:
    dom = IndexDomain.boolean(6)
    rng = task_rng(0, "selftest-channel")
    worst = math.inf
    for k in range(20):
        s = Spectrum.from_vector(dom, rng.normal(size=dom.size) + 1j * rng.normal(size=dom.size))
        nm = NoiseModel(float(rng.uniform(0, 0.3)), int(rng.integers(0, 3)), float(rng.uniform(0.7, 1.0)), k)
        prof = attenuation(nm, dom, d=4, shaped=s)
        rep = sigma_K(fourier(s), prof, 4)
        out = apply_channel(nm, fourier(s), head=rep.head)
        worst = min(worst, out.p_head - (rep.sigma_K - prof.delta_w))
    return worst >= -1e-12, f"min slack {worst:.3e}"


def _kernels_unitary() -> tuple[bool, str]:
    dom = IndexDomain.padic(7, 2)
    return is_unitary(chirp_mod_p(3, 7), dom), "mod-p chirp on F_7^2"


def _responses_monotone() -> tuple[bool, str]:
    ok = is_monotone_response(RsThreshold(0.7)) and is_monotone_response(LdpcDe(iters=300), np.linspace(0, 0.2, 21))
    rep = ldpc_audit(0.5, 0.9, 0.01, [0.0, 0.02, 0.04, 0.06])
    return ok and rep.monotone, f"ldpc audit violations {len(rep.violations)}"


def _gradient_bound() -> tuple[bool, str]:
    rep = gradient_bound_check(Ansatz(), NoiseModel(0.1), samples=20)
    return rep.violations == 0, f"max ratio {rep.max_ratio:.3f}"


def _scaling_slopes() -> tuple[bool, str]:
    t = scaling_table([64, 128, 256, 512, 1024])
    s = {k: t.slope(k) for k in t.depths}
    ok = abs(s["global_chirp"] - 2) <= 0.1 and all(abs(v - 1) <= 0.1 for k, v in s.items() if k != "global_chirp")
    return ok, " ".join(f"{k}={v:.3f}" for k, v in s.items())


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("transforms_unitary", _transforms_unitary),
    ("kernels_unitary", _kernels_unitary),
    ("exact_ppc", _exact_ppc),
    ("de_threshold", _de_threshold),
    ("bla_identities", _bla_identities),
    ("chirp_synthesis", _chirp_synthesis),
    ("channel_soundness", _channel_sound),
    ("responses_monotone", _responses_monotone),
    ("gradient_bound", _gradient_bound),
    ("scaling_slopes", _scaling_slopes),
]


def run_selftest() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
