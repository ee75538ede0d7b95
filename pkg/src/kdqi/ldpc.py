"""Regular LDPC ensembles: BEC density evolution, BLA shifts, code construction and BP decoding."""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from statsmodels.stats.proportion import proportion_confint

from .errors import ArgumentError, ConstructionError, SearchError
from .seeding import derive_seed

CONVERGED_BELOW = 1e-12
MAX_DE_ITERS = 100_000


@dataclass(frozen=True)
class LdpcEnsemble:
    d_v: int
    d_c: int

    def __post_init__(self):
        if not 2 <= self.d_v < self.d_c:
            raise ArgumentError("need 2 <= d_v < d_c")

    @property
    def rate(self) -> float:
        return 1.0 - self.d_v / self.d_c


def de_map(ens: LdpcEnsemble, eps: float, x):
    """``eps * lambda(1 - rho(1 - x))`` with ``lambda(z) = z^(d_v-1)``, ``rho(z) = z^(d_c-1)``."""
    x = np.asarray(x, dtype=float)
    return eps * (1.0 - (1.0 - x) ** (ens.d_c - 1)) ** (ens.d_v - 1)


def de_map_deriv(ens: LdpcEnsemble, eps: float, x):
    x = np.asarray(x, dtype=float)
    inner = 1.0 - (1.0 - x) ** (ens.d_c - 1)
    return eps * (ens.d_v - 1) * inner ** (ens.d_v - 2) * (ens.d_c - 1) * (1.0 - x) ** (ens.d_c - 2)


class DeRun(NamedTuple):
    x: float
    iterations: int
    converged: bool


def de_iterate(ens: LdpcEnsemble, eps: float, x0: float | None = None,
               max_iters: int = MAX_DE_ITERS, below: float = CONVERGED_BELOW) -> DeRun:
    """Iterate the DE map from ``x0`` (default ``eps``) until it drops below ``below`` or stalls."""
    x = eps if x0 is None else x0
    a, b = ens.d_v - 1, ens.d_c - 1
    for t in range(max_iters):
        if x < below:
            return DeRun(x, t, True)
        nxt = eps * (1.0 - (1.0 - x) ** b) ** a
        if x - nxt < 1e-17 * max(x, 1e-300) and nxt >= x * (1 - 1e-15):
            return DeRun(nxt, t + 1, False)  # stuck at a nonzero fixed point
        x = nxt
    return DeRun(x, max_iters, x < below)


def de_trace(ens: LdpcEnsemble, eps: float, x0: float | None = None, steps: int = 50) -> np.ndarray:
    xs = [eps if x0 is None else x0]
    for _ in range(steps):
        xs.append(float(de_map(ens, eps, xs[-1])))
    return np.asarray(xs)


class DeThreshold(NamedTuple):
    eps_star: float
    x_star: float


def de_threshold(ens: LdpcEnsemble, tol: float = 1e-6) -> DeThreshold:
    """BP threshold on the BEC and the tangent fixed point.

    Bisection on whether DE from ``x = eps`` converges; the bracket is then
    refined by solving the tangency ``phi(x) = x, phi'(x) = 1`` through
    ``eps(x) = x / lambda(1 - rho(1 - x))``, so the returned pair is an exact
    fixed point of the map.
    """
    if tol <= 0:
        raise ArgumentError("tolerance must be positive")
    lo, hi = 0.0, 1.0
    if not de_iterate(ens, lo + 1e-9).converged or de_iterate(ens, hi).converged:
        raise SearchError("threshold not bracketed by [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if de_iterate(ens, mid).converged:
            lo = mid
        else:
            hi = mid

    def eps_of(x):
        return x / (1.0 - (1.0 - x) ** (ens.d_c - 1)) ** (ens.d_v - 1)

    res = minimize_scalar(eps_of, bounds=(1e-6, 1.0), method="bounded", options={"xatol": 1e-13})
    x_star = float(res.x)
    eps_star = float(eps_of(x_star))
    if not lo - tol <= eps_star <= hi + tol:
        raise SearchError(f"tangency {eps_star} outside bisection bracket [{lo}, {hi}]")
    return DeThreshold(eps_star, x_star)


@dataclass(frozen=True)
class BlaParams:
    kappa: float = 1.0
    delta_sigma_loc: float = 0.0

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ArgumentError("kappa must lie in (0, 1]")
        if self.delta_sigma_loc < 0:
            raise ArgumentError("head-mass gain must be nonnegative")
        if self.kappa * self.delta_sigma_loc >= 1:
            raise ArgumentError("kappa * delta_sigma_loc must stay below 1")

    @property
    def factor(self) -> float:
        return 1.0 - self.kappa * self.delta_sigma_loc


def bla_shift(eps: float, bla: BlaParams) -> float:
    """Effective erasure rate ``eps (1 - kappa dSigma)``."""
    return eps * bla.factor


@dataclass
class TangencyReport:
    eps_star: float
    x_star: float
    eps_eff: float
    value: float            # phi_{eps_eff}(x*)
    value_expected: float   # (1 - k dS) x*
    deriv: float            # phi'_{eps_eff}(x*)
    deriv_expected: float   # (1 - k dS) phi'_{eps*}(x*)
    margin: float           # 1 - phi'_{eps_eff}(x*)
    converges: bool

    @property
    def value_error(self) -> float:
        return abs(self.value - self.value_expected)

    @property
    def deriv_error(self) -> float:
        return abs(self.deriv - self.deriv_expected)


def bla_tangency_check(ens: LdpcEnsemble, bla: BlaParams, threshold: DeThreshold | None = None) -> TangencyReport:
    th = threshold or de_threshold(ens)
    eps_eff = bla_shift(th.eps_star, bla)
    value = float(de_map(ens, eps_eff, th.x_star))
    deriv = float(de_map_deriv(ens, eps_eff, th.x_star))
    run = de_iterate(ens, eps_eff, x0=th.x_star)
    return TangencyReport(
        th.eps_star, th.x_star, eps_eff,
        value, bla.factor * th.x_star,
        deriv, bla.factor * float(de_map_deriv(ens, th.eps_star, th.x_star)),
        1.0 - deriv, run.converged,
    )


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """Regular code; ``checks[c]`` lists the variable nodes of check ``c``."""

    n: int
    d_v: int
    d_c: int
    checks: np.ndarray
    seed: int = 0

    @property
    def m(self) -> int:
        return self.checks.shape[0]

    @property
    def rate(self) -> float:
        return 1.0 - self.d_v / self.d_c

    @property
    def parity(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.m), self.d_c)
        return sp.csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, self.checks.reshape(-1))),
                             shape=(self.m, self.n))

    def to_text(self) -> str:
        lines = [f"# ldpc n={self.n} m={self.m} d_v={self.d_v} d_c={self.d_c} seed={self.seed}"]
        for c in range(self.m):
            for v in sorted(self.checks[c]):
                lines.append(f"{c} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LdpcCode":
        header, *body = [ln for ln in text.splitlines() if ln.strip()]
        meta = dict(tok.split("=") for tok in header.lstrip("# ").split()[1:])
        n, m, dv, dc = (int(meta[k]) for k in ("n", "m", "d_v", "d_c"))
        rows: list[list[int]] = [[] for _ in range(m)]
        for ln in body:
            r, c = ln.split()
            rows[int(r)].append(int(c))
        return cls(n, dv, dc, np.asarray(rows, dtype=np.int64), int(meta.get("seed", 0)))


def build_code(ens: LdpcEnsemble, n: int, seed: int = 0, max_attempts: int = 100_000) -> LdpcCode:
    """Configuration-model code with swap repair of parallel edges."""
    if n < 1 or (n * ens.d_v) % ens.d_c:
        raise ArgumentError("n * d_v must be divisible by d_c")
    if n < ens.d_c:
        raise ConstructionError("too few variables for a simple graph")
    m = n * ens.d_v // ens.d_c
    rng = np.random.default_rng(seed)
    sockets = np.repeat(np.arange(n), ens.d_v)
    checks = sockets[rng.permutation(sockets.size)].reshape(m, ens.d_c)

    def dup_slots():
        srt = np.sort(checks, axis=1)
        bad = np.nonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))[0]
        return bad

    attempts = 0
    bad = dup_slots()
    while bad.size:
        for c in bad:
            row = checks[c]
            vals, counts = np.unique(row, return_counts=True)
            for v in vals[counts > 1]:
                k = int(np.nonzero(row == v)[0][1])
                while True:
                    attempts += 1
                    if attempts > max_attempts:
                        raise ConstructionError("could not remove parallel edges")
                    c2 = int(rng.integers(m))
                    k2 = int(rng.integers(ens.d_c))
                    v2 = checks[c2, k2]
                    if c2 == c or v2 in checks[c] or v in checks[c2]:
                        continue
                    checks[c, k], checks[c2, k2] = v2, v
                    break
        bad = dup_slots()
    return LdpcCode(n, ens.d_v, ens.d_c, checks, seed)


def girth(code: LdpcCode, limit: int = 8) -> int | None:
    """Shortest Tanner-graph cycle of length <= ``limit``, else None."""
    var_checks: list[list[int]] = [[] for _ in range(code.n)]
    for c in range(code.m):
        for v in code.checks[c]:
            var_checks[v].append(c)
    best = None
    # nodes: variables 0..n-1, checks n..n+m-1
    for start in range(code.n):
        dist = {start: 0}
        parent = {start: -1}
        q = deque([start])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 > (best or limit + 1) - 1:
                break
            nbrs = [code.n + c for c in var_checks[u]] if u < code.n else list(code.checks[u - code.n])
            for w in nbrs:
                w = int(w)
                if w not in dist:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    q.append(w)
                elif parent[u] != w:
                    cyc = dist[u] + dist[w] + 1
                    if cyc <= limit and (best is None or cyc < best):
                        best = cyc
        if best == 4:
            return 4
    return best


@dataclass(frozen=True)
class BEC:
    eps: float


@dataclass(frozen=True)
class BSC:
    eps: float


@dataclass(frozen=True)
class AWGN:
    ebn0_db: float


Channel = Union[BEC, BSC, AWGN]


def awgn_sigma2(ebn0_db: float, rate: float) -> float:
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def sample_received(channel: Channel, n: int, rng: np.random.Generator, rate: float = 0.5) -> np.ndarray:
    """Channel output for the all-zero codeword.

    BEC: 0.0 or NaN (erasure); BSC: 0/1 integers; AWGN: BPSK (0 -> +1) plus noise.
    """
    if isinstance(channel, BEC):
        out = np.zeros(n)
        out[rng.random(n) < channel.eps] = np.nan
        return out
    if isinstance(channel, BSC):
        return (rng.random(n) < channel.eps).astype(np.int8)
    if isinstance(channel, AWGN):
        return 1.0 + math.sqrt(awgn_sigma2(channel.ebn0_db, rate)) * rng.standard_normal(n)
    raise ArgumentError(f"unknown channel {channel!r}")


def channel_llr(channel: Channel, received: np.ndarray, rate: float = 0.5) -> np.ndarray:
    if isinstance(channel, BSC):
        if not 0 < channel.eps < 0.5:
            return np.where(np.asarray(received) == 0, 50.0, -50.0)
        return (1.0 - 2.0 * np.asarray(received, dtype=float)) * math.log((1 - channel.eps) / channel.eps)
    if isinstance(channel, AWGN):
        return 2.0 * np.asarray(received, dtype=float) / awgn_sigma2(channel.ebn0_db, rate)
    raise ArgumentError("LLRs are defined for BSC and AWGN only")


def _peel(code: LdpcCode, erased: np.ndarray, max_iters: int):
    erased = erased.copy()
    T = erased.shape[0]
    iters = np.zeros(T, dtype=np.int64)
    active = np.arange(T)
    for it in range(1, max_iters + 1):
        e = erased[active]
        on_check = e[:, code.checks]                     # (A, m, d_c)
        single = on_check.sum(axis=2) == 1
        resolve = on_check & single[:, :, None]
        progress = resolve.any(axis=(1, 2)) & e.any(axis=1)
        if not progress.any():
            break
        rows, cs, ks = np.nonzero(resolve)
        e[rows, code.checks[cs, ks]] = False
        erased[active] = e
        iters[active[progress]] = it
        active = active[progress]
    return ~erased.any(axis=1), iters


def _phi(x):
    x = np.clip(x, 1e-12, 40.0)
    return -np.log(np.tanh(0.5 * x))


def _sum_product(code: LdpcCode, llr: np.ndarray, max_iters: int):
    T = llr.shape[0]
    edge_var = code.checks.reshape(-1)
    by_var = np.argsort(edge_var, kind="stable").reshape(code.n, code.d_v)
    success = np.zeros(T, dtype=bool)
    iters = np.full(T, max_iters, dtype=np.int64)

    hard = llr < 0
    synd = hard[:, code.checks].sum(axis=2) % 2
    done = ~synd.any(axis=1)
    success[done] = ~hard[done].any(axis=1)
    iters[done] = 0
    active = np.nonzero(~done)[0]
    ch = llr[active]
    v2c = ch[:, edge_var]
    for it in range(1, max_iters + 1):
        if active.size == 0:
            break
        m = v2c.reshape(-1, code.m, code.d_c)
        sgn = np.where(m < 0, -1.0, 1.0)
        mag = _phi(np.abs(m))
        ext = _phi(mag.sum(axis=2, keepdims=True) - mag)
        c2v = (sgn.prod(axis=2, keepdims=True) * sgn * ext).reshape(len(active), -1)
        total = ch + c2v[:, by_var].sum(axis=2)
        v2c = total[:, edge_var] - c2v
        hard = total < 0
        ok = ~(hard[:, code.checks].sum(axis=2) % 2).any(axis=1)
        if ok.any():
            idx = active[ok]
            success[idx] = ~hard[ok].any(axis=1)
            iters[idx] = it
            keep = ~ok
            active, ch, v2c = active[keep], ch[keep], v2c[keep]
    return success, iters


def decode_batch(code: LdpcCode, channel: Channel, received: np.ndarray, max_iters: int = 100):
    """Decode a ``(trials, n)`` batch; returns ``(success, iterations)`` arrays."""
    received = np.atleast_2d(received)
    if received.shape[1] != code.n:
        raise ArgumentError("received word length does not match the code")
    if isinstance(channel, BEC):
        return _peel(code, np.isnan(received), max_iters)
    return _sum_product(code, channel_llr(channel, received, code.rate), max_iters)


def bp_decode(code: LdpcCode, channel: Channel, received, max_iters: int = 100) -> tuple[bool, int]:
    """Peeling on the BEC, flooding log-domain sum-product on BSC/AWGN.

    Success means every check is satisfied and the word decodes to zero.
    """
    ok, it = decode_batch(code, channel, np.asarray(received)[None, :], max_iters)
    return bool(ok[0]), int(it[0])


def _channel_at(kind: str, value: float) -> Channel:
    return {"bec": BEC, "bsc": BSC, "awgn": AWGN}[kind](value)


@dataclass
class FerRow:
    param: float
    trials: int
    errors: int
    fer: float
    ci_low: float
    ci_high: float
    mean_iters: float


@dataclass
class FerTable:
    kind: str
    rows: list[FerRow]

    def waterfall_midpoint(self) -> float | None:
        """Parameter where FER crosses 0.5, linearly interpolated."""
        for a, b in zip(self.rows, self.rows[1:]):
            fa, fb = a.fer - 0.5, b.fer - 0.5
            if fa == 0:
                return a.param
            if fa * fb < 0:
                return a.param + (b.param - a.param) * fa / (fa - fb)
        if self.rows and self.rows[-1].fer == 0.5:
            return self.rows[-1].param
        return None

    def csv_rows(self):
        yield ["param", "trials", "errors", "fer", "ci_low", "ci_high", "mean_iters"]
        for r in self.rows:
            yield [repr(r.param), r.trials, r.errors, f"{r.fer:.6f}", f"{r.ci_low:.6f}", f"{r.ci_high:.6f}",
                   f"{r.mean_iters:.3f}"]


def _fer_point(code, kind, value, index, trials, seed, max_iters):
    ch = _channel_at(kind, value)
    received = np.stack([
        sample_received(ch, code.n, np.random.default_rng(derive_seed(seed, f"fer:{kind}:{index}", t)), code.rate)
        for t in range(trials)
    ])
    ok, it = decode_batch(code, ch, received, max_iters)
    errors = int((~ok).sum())
    lo, hi = proportion_confint(errors, trials, alpha=0.05, method="wilson")
    return FerRow(float(value), trials, errors, errors / trials, float(lo), float(hi), float(it.mean()))


def fer_scan(code: LdpcCode, kind: str, grid: Sequence[float], trials: int, seed: int = 0,
             max_iters: int = 100, threads: int = 1) -> FerTable:
    """All-zero-codeword FER Monte Carlo; trial ``t`` at grid point ``i`` uses ``derive_seed(seed, kind:i, t)``."""
    if trials < 1:
        raise ArgumentError("need at least one trial per point")
    if kind not in ("bec", "bsc", "awgn"):
        raise ArgumentError(f"unknown channel kind {kind!r}")
    args = [(code, kind, v, i, trials, seed, max_iters) for i, v in enumerate(grid)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda a: _fer_point(*a), args))
    else:
        rows = [_fer_point(*a) for a in args]
    return FerTable(kind, rows)
