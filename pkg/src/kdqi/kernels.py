"""Unitary kernel families, their action on spectra, and chirp gate synthesis."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ArgumentError, DomainMismatch, UnitarityError
from .spectral import IndexDomain, Spectrum, fourier

UNITARY_TOL = 1e-10
T_COUNT_CONSTANT = 4.0


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Chirp:
    """Diagonal phase ``exp(i * gamma * q(x) * scale)``.

    ``q(x) = coeffs[0] + coeffs[1] x + coeffs[2] x^2``. With ``modulus`` set
    the phase is ``2 pi gamma q(x) / modulus``; if gamma and the coefficients
    are integers the product is reduced mod ``modulus`` exactly. On p-adic
    domains ``q`` is summed over digits, on boolean domains it is evaluated
    on the integer index.
    """

    coeffs: tuple = (0, 0, 1)
    gamma: float = 1.0
    modulus: int | None = None

    def __post_init__(self):
        if len(self.coeffs) > 3:
            raise ArgumentError("chirp polynomial has degree at most 2")


def chirp_mod_p(a: int, p: int) -> Chirp:
    """``diag(exp(2 pi i a x^2 / p))``; pass ``-a`` for the cancelling kernel."""
    return Chirp((0, 0, 1), int(a), p)


@dataclass(frozen=True, eq=False)
class PhaseDiagonal:
    """``diag(exp(i * phases[x]))`` for an explicit phase table."""

    phases: np.ndarray

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(ph)):
            raise ArgumentError("non-finite phase")
        ph.flags.writeable = False
        object.__setattr__(self, "phases", ph)


@dataclass(frozen=True)
class Lct:
    """``D_phi1 . F . D_phi2 . F^-1 . D_phi3`` with diagonal phase maps."""

    phi1: Chirp | Identity = Identity()
    phi2: Chirp | Identity = Identity()
    phi3: Chirp | Identity = Identity()


@dataclass(frozen=True, eq=False)
class BlockLocal:
    """Dense unitaries on consecutive groups of ``b`` digits (block j: digits jb..jb+b-1)."""

    b: int
    blocks: tuple = field(default=())

    def __post_init__(self):
        if self.b < 1:
            raise ArgumentError("block width must be positive")
        mats = []
        for u in self.blocks:
            u = np.asarray(u, dtype=np.complex128)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise UnitarityError("block descriptor must be a square matrix")
            if not np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=UNITARY_TOL, rtol=0):
                raise UnitarityError("block descriptor is not unitary")
            mats.append(u)
        object.__setattr__(self, "blocks", tuple(mats))


@dataclass(frozen=True)
class GivensLayer:
    """Real rotations by ``angle`` on disjoint index pairs ``(2k+offset, 2k+1+offset)``.

    Equal to ``exp(-i angle G)`` where G is a direct sum of Pauli-Y terms,
    so its generator has operator norm 1.
    """

    angle: float
    offset: int = 0


@dataclass(frozen=True)
class Product:
    """Apply ``kernels[0]`` first, then ``kernels[1]``, and so on."""

    kernels: tuple


KernelSpec = Union[Identity, Chirp, PhaseDiagonal, Lct, BlockLocal, GivensLayer, Product]


def _quad(coeffs, x):
    c = tuple(coeffs) + (0,) * (3 - len(coeffs))
    return c[0] + c[1] * x + c[2] * x * x


def chirp_phases(K: Chirp, domain: IndexDomain) -> np.ndarray:
    """Phase angles (radians) of a chirp on every index of ``domain``."""
    x = np.arange(domain.size, dtype=np.int64)
    integral = float(K.gamma).is_integer() and all(float(c).is_integer() for c in K.coeffs)
    if domain.kind == "padic":
        digits = domain.digits_of(x)
    else:
        digits = x[:, None]
    if K.modulus is not None and integral:
        coeffs = tuple(int(c) for c in K.coeffs)
        q = _quad(coeffs, digits % K.modulus).sum(axis=-1) % K.modulus
        return 2 * np.pi * ((int(K.gamma) * q) % K.modulus) / K.modulus
    q = _quad(K.coeffs, digits.astype(np.float64)).sum(axis=-1)
    scale = 2 * np.pi / K.modulus if K.modulus is not None else 1.0
    return K.gamma * scale * q


def _apply_diag(K, s: Spectrum) -> Spectrum:
    if isinstance(K, Identity):
        return s
    if isinstance(K, PhaseDiagonal):
        if K.phases.shape[0] != s.domain.size:
            raise DomainMismatch("phase table does not match the domain")
        return s.with_amps(s.amps * np.exp(1j * K.phases))
    return s.with_amps(s.amps * np.exp(1j * chirp_phases(K, s.domain)))


def _apply_blocks(K: BlockLocal, s: Spectrum) -> Spectrum:
    dom = s.domain
    if dom.digits % K.b:
        raise DomainMismatch(f"block width {K.b} does not divide {dom.digits} digits")
    nblocks = dom.digits // K.b
    if len(K.blocks) not in (1, nblocks):
        raise DomainMismatch(f"expected {nblocks} blocks, got {len(K.blocks)}")
    dim = dom.base**K.b
    # axis i of the C-ordered tensor holds digit (digits - 1 - i)
    t = s.amps.reshape((dom.base,) * dom.digits)
    for j in range(nblocks):
        u = K.blocks[j if len(K.blocks) > 1 else 0]
        if u.shape != (dim, dim):
            raise DomainMismatch(f"block {j} must be {dim}x{dim}")
        # block digits jb..jb+b-1, most significant first for reshaping
        axes = [dom.digits - 1 - k for k in range(j * K.b + K.b - 1, j * K.b - 1, -1)]
        moved = np.moveaxis(t, axes, list(range(K.b)))
        shape = moved.shape
        flat = u @ moved.reshape(dim, -1)
        t = np.moveaxis(flat.reshape(shape), list(range(K.b)), axes)
    return s.with_amps(t.reshape(-1))


def _apply_givens(K: GivensLayer, s: Spectrum) -> Spectrum:
    v = s.amps.copy()
    c, sn = math.cos(K.angle), math.sin(K.angle)
    lo = np.arange(K.offset, s.domain.size - 1, 2)
    hi = lo + 1
    a, b = v[lo].copy(), v[hi].copy()
    v[lo] = c * a - sn * b
    v[hi] = sn * a + c * b
    return s.with_amps(v)


def apply_kernel(K: KernelSpec, s: Spectrum) -> Spectrum:
    if isinstance(K, (Identity, Chirp, PhaseDiagonal)):
        return _apply_diag(K, s)
    if isinstance(K, Lct):
        t = _apply_diag(K.phi3, s)
        t = fourier(t, inverse=True)
        t = _apply_diag(K.phi2, t)
        t = fourier(t)
        return _apply_diag(K.phi1, t)
    if isinstance(K, BlockLocal):
        return _apply_blocks(K, s)
    if isinstance(K, GivensLayer):
        return _apply_givens(K, s)
    if isinstance(K, Product):
        for k in K.kernels:
            s = apply_kernel(k, s)
        return s
    raise ArgumentError(f"unknown kernel {K!r}")


def kernel_matrix(K: KernelSpec, domain: IndexDomain) -> np.ndarray:
    """Dense matrix of ``K`` (columns are images of basis vectors)."""
    if domain.size > 2**12:
        raise ArgumentError("dense kernel matrices are limited to 4096 rows")
    cols = []
    for j in range(domain.size):
        e = np.zeros(domain.size, dtype=np.complex128)
        e[j] = 1.0
        cols.append(apply_kernel(K, Spectrum(domain, e)).amps)
    return np.stack(cols, axis=1)


def is_unitary(K: KernelSpec, domain: IndexDomain, tol: float = UNITARY_TOL) -> bool:
    M = kernel_matrix(K, domain)
    return bool(np.max(np.abs(M.conj().T @ M - np.eye(domain.size))) <= tol)


def kernel_to_dict(K: KernelSpec) -> dict:
    if isinstance(K, Identity):
        return {"variant": "identity"}
    if isinstance(K, Chirp):
        return {"variant": "chirp", "coeffs": list(K.coeffs), "gamma": K.gamma, "modulus": K.modulus}
    if isinstance(K, PhaseDiagonal):
        return {"variant": "phase_diagonal", "phases": K.phases.tolist()}
    if isinstance(K, Lct):
        return {"variant": "lct", "phi": [kernel_to_dict(K.phi1), kernel_to_dict(K.phi2), kernel_to_dict(K.phi3)]}
    if isinstance(K, BlockLocal):
        return {
            "variant": "block_local",
            "b": K.b,
            "blocks": [{"re": u.real.tolist(), "im": u.imag.tolist()} for u in K.blocks],
        }
    if isinstance(K, GivensLayer):
        return {"variant": "givens", "angle": K.angle, "offset": K.offset}
    if isinstance(K, Product):
        return {"variant": "product", "kernels": [kernel_to_dict(k) for k in K.kernels]}
    raise ArgumentError(f"unknown kernel {K!r}")


def kernel_from_dict(d: dict) -> KernelSpec:
    v = d["variant"]
    if v == "identity":
        return Identity()
    if v == "chirp":
        return Chirp(tuple(d["coeffs"]), d["gamma"], d.get("modulus"))
    if v == "phase_diagonal":
        return PhaseDiagonal(np.asarray(d["phases"]))
    if v == "lct":
        return Lct(*(kernel_from_dict(x) for x in d["phi"]))
    if v == "block_local":
        return BlockLocal(d["b"], tuple(np.asarray(u["re"]) + 1j * np.asarray(u["im"]) for u in d["blocks"]))
    if v == "givens":
        return GivensLayer(d["angle"], d.get("offset", 0))
    if v == "product":
        return Product(tuple(kernel_from_dict(k) for k in d["kernels"]))
    raise ArgumentError(f"unknown kernel variant {v!r}")


@dataclass
class GateSynthesis:
    single_qubit_rotations: int
    two_qubit_controlled_rotations: int
    depth_estimate: int
    rotations: list = field(default_factory=list)
    t_constant: float = T_COUNT_CONSTANT

    def t_count(self, eps_synth: float) -> float:
        """``(#rotations) * c * log2(1/eps)``."""
        if not 0 < eps_synth < 1:
            raise ArgumentError("synthesis accuracy must lie in (0, 1)")
        total = self.single_qubit_rotations + self.two_qubit_controlled_rotations
        return total * self.t_constant * math.log2(1.0 / eps_synth)

    def rotations_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gate", "qubits", "angle"])
        for gate, qubits, angle in self.rotations:
            w.writerow([gate, " ".join(str(q) for q in qubits), repr(float(angle))])
        return buf.getvalue()


def greedy_edge_coloring(n: int) -> list[tuple[int, int, int]]:
    """Greedy proper coloring of the complete graph on ``n`` qubits; returns ``(r, s, color)``."""
    used: list[set[int]] = [set() for _ in range(n)]
    out = []
    for r in range(n):
        for s in range(r + 1, n):
            c = 0
            while c in used[r] or c in used[s]:
                c += 1
            used[r].add(c)
            used[s].add(c)
            out.append((r, s, c))
    return out


def synthesize_chirp(theta: float, n: int) -> GateSynthesis:
    """Phase-polynomial circuit for ``diag(exp(i theta j^2))`` on ``n`` qubits.

    Uses ``j^2 = sum_r 4^r j_r + 2 sum_{r<s} 2^(r+s) j_r j_s``: one Z rotation per
    qubit and one controlled rotation per qubit pair.
    """
    if n < 1:
        raise ArgumentError("need at least one qubit")
    rotations = [("rz", (r,), theta * 4.0**r) for r in range(n)]
    coloring = greedy_edge_coloring(n)
    for r, s, _ in sorted(coloring, key=lambda e: (e[2], e[0], e[1])):
        rotations.append(("crz", (r, s), 2.0 * theta * 2.0 ** (r + s)))
    colors = 1 + max((c for _, _, c in coloring), default=-1)
    return GateSynthesis(n, n * (n - 1) // 2, colors + 1, rotations)


def synthesized_phases(synth: GateSynthesis, n: int) -> np.ndarray:
    """Accumulated phase of every basis state under the emitted rotation list, mod 2 pi."""
    j = np.arange(2**n, dtype=np.int64)
    bits = (j[:, None] >> np.arange(n)) & 1
    phase = np.zeros(2**n, dtype=np.longdouble)
    for _, qubits, angle in synth.rotations:
        on = np.all(bits[:, list(qubits)] == 1, axis=1)
        phase[on] += np.longdouble(angle)
    return np.mod(phase, 2 * np.pi, dtype=np.longdouble)


def synthesized_matches_diagonal(theta: float, n: int, tol: float = 1e-9) -> bool:
    if n > 12:
        raise ArgumentError("dense check is limited to n <= 12")
    synth = synthesize_chirp(theta, n)
    got = synthesized_phases(synth, n)
    j = np.arange(2**n, dtype=np.longdouble)
    want = np.mod(np.longdouble(theta) * j * j, 2 * np.pi, dtype=np.longdouble)
    diff = np.abs(np.exp(1j * got.astype(np.float64)) - np.exp(1j * want.astype(np.float64)))
    return bool(np.max(diff) <= tol)


def lct_cost(n: int, truncated_qft: bool = True, kind: str = "global", b: int | None = None) -> GateSynthesis:
    """Depth model of an LCT kernel: ``2 depth(F) + 3 depth(chirp)``.

    ``kind`` is ``"global"``, ``"block_local"`` (width ``b``) or ``"identity"``.
    """
    if n < 1:
        raise ArgumentError("need at least one qubit")
    if kind == "identity":
        return GateSynthesis(0, 0, 0)
    depth_f = n if truncated_qft else n * n
    if kind == "global":
        depth_chirp = n * n
        pairs = n * (n - 1) // 2
    elif kind == "block_local":
        if not b or b < 1:
            raise ArgumentError("block-local cost needs a block width")
        depth_chirp = n * b
        pairs = (n // b) * (b * (b - 1) // 2)
    else:
        raise ArgumentError(f"unknown kernel kind {kind!r}")
    return GateSynthesis(3 * n, 3 * pairs, 2 * depth_f + 3 * depth_chirp)
