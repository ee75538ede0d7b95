"""Index domains, spectra, unitary transforms and head-set extraction."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DomainMismatch, NormalizationError

MAX_DOMAIN_SIZE = 2**22
NORM_TOL = 1e-10
# magnitudes are rounded to this many decimals before ranking so that
# round-off does not break exact ties
_TIE_DECIMALS = 12

_MAGIC = b"KDQS"
_HEADER = struct.Struct("<4sBIIQ")


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    k = 3
    while k * k <= p:
        if p % k == 0:
            return False
        k += 2
    return True


@dataclass(frozen=True)
class IndexDomain:
    """Either ``{0,1}^n`` (``kind == "boolean"``) or ``F_p^m`` (``kind == "padic"``).

    Indices are flattened little-endian: ``x = sum_k x_k * base**k``.
    """

    kind: str
    base: int
    digits: int
    cap: int = field(default=MAX_DOMAIN_SIZE, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("boolean", "padic"):
            raise ArgumentError(f"unknown domain kind {self.kind!r}")
        if self.kind == "boolean" and self.base != 2:
            raise ArgumentError("boolean domain has base 2")
        if self.kind == "padic" and not is_prime(self.base):
            raise ArgumentError(f"p={self.base} is not prime")
        if self.digits < 1:
            raise ArgumentError("need at least one digit")
        if self.size < 2 or self.size > self.cap:
            raise ArgumentError(f"domain size {self.size} outside [2, {self.cap}]")

    @classmethod
    def boolean(cls, n: int, cap: int = MAX_DOMAIN_SIZE) -> "IndexDomain":
        return cls("boolean", 2, n, cap)

    @classmethod
    def padic(cls, p: int, m: int = 1, cap: int = MAX_DOMAIN_SIZE) -> "IndexDomain":
        return cls("padic", p, m, cap)

    @property
    def size(self) -> int:
        return self.base**self.digits

    @property
    def n(self) -> int:
        """Qubit count of the binary encoding (``ceil(log2 size)``)."""
        return int(np.ceil(np.log2(self.size)))

    def digits_of(self, x: np.ndarray | int) -> np.ndarray:
        """Digit expansion, shape ``(..., digits)``, least significant first."""
        x = np.asarray(x, dtype=np.int64)
        powers = self.base ** np.arange(self.digits, dtype=np.int64)
        return (x[..., None] // powers) % self.base

    def digit_weight(self) -> np.ndarray:
        """Number of nonzero digits of every index (Hamming weight when boolean)."""
        return np.count_nonzero(self.digits_of(np.arange(self.size)), axis=-1)

    def to_dict(self) -> dict:
        if self.kind == "boolean":
            return {"kind": "boolean", "n": self.digits}
        return {"kind": "padic", "p": self.base, "m": self.digits}

    @classmethod
    def from_dict(cls, d: dict) -> "IndexDomain":
        if d["kind"] == "boolean":
            return cls.boolean(int(d["n"]))
        return cls.padic(int(d["p"]), int(d.get("m", 1)))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex amplitudes over an index domain.

    ``prenorm`` keeps the 2-norm of the vector before normalization (the
    ``||g||_2`` of the shaped state); it is carried through transforms.
    """

    domain: IndexDomain
    amps: np.ndarray
    normalized: bool = True
    prenorm: float = 1.0

    def __post_init__(self):
        amps = np.array(self.amps, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.domain.size:
            raise ArgumentError(f"expected {self.domain.size} amplitudes, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise ArgumentError("non-finite amplitude")
        if self.normalized and abs(np.vdot(amps, amps).real - 1.0) > NORM_TOL:
            raise NormalizationError("spectrum flagged normalized but norm != 1")
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_vector(cls, domain: IndexDomain, vec: Sequence[complex]) -> "Spectrum":
        """Normalize ``vec`` and remember its original norm."""
        vec = np.asarray(vec, dtype=np.complex128)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise NormalizationError("cannot normalize the zero vector")
        return cls(domain, vec / norm, True, norm)

    @classmethod
    def delta(cls, domain: IndexDomain, k: int = 0) -> "Spectrum":
        v = np.zeros(domain.size, dtype=np.complex128)
        v[k] = 1.0
        return cls(domain, v)

    @classmethod
    def uniform(cls, domain: IndexDomain) -> "Spectrum":
        return cls(domain, np.full(domain.size, domain.size**-0.5, dtype=np.complex128))

    @property
    def probs(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def with_amps(self, amps: np.ndarray) -> "Spectrum":
        return Spectrum(self.domain, amps, self.normalized, self.prenorm)

    def to_bytes(self) -> bytes:
        kind = 0 if self.domain.kind == "boolean" else 1
        header = _HEADER.pack(_MAGIC, kind, self.domain.base, self.domain.digits, self.domain.size)
        payload = np.ascontiguousarray(self.amps).view("<f8").tobytes()
        return header + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Spectrum":
        magic, kind, base, digits, length = _HEADER.unpack_from(blob)
        if magic != _MAGIC:
            raise ArgumentError("not a spectrum container")
        domain = IndexDomain.boolean(digits) if kind == 0 else IndexDomain.padic(base, digits)
        if length != domain.size:
            raise ArgumentError("length does not match domain")
        raw = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size, count=2 * length)
        amps = raw[0::2] + 1j * raw[1::2]
        norm = float(np.linalg.norm(amps))
        return cls(domain, amps, abs(norm - 1.0) <= NORM_TOL)

    def to_json(self) -> str:
        return json.dumps({
            "domain": self.domain.to_dict(),
            "normalized": self.normalized,
            "prenorm": self.prenorm,
            "re": self.amps.real.tolist(),
            "im": self.amps.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        d = json.loads(text)
        amps = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return cls(IndexDomain.from_dict(d["domain"]), amps, d["normalized"], d.get("prenorm", 1.0))


@dataclass(frozen=True)
class ShapingPolynomial:
    """``P(t) = sum_k coeffs[k] t**k``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ArgumentError("shaping polynomial needs at least one coefficient")
        if not all(np.isfinite(c) for c in self.coeffs):
            raise ArgumentError("non-finite shaping coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t), self.coeffs)


def phase_shaping(p: int) -> Callable[[np.ndarray], np.ndarray]:
    """Shaping ``t -> exp(2 pi i t / p)`` for integer objective values mod p."""

    def shape(t):
        t = np.asarray(t, dtype=np.int64) % p
        return np.exp(2j * np.pi * t / p)

    return shape


def build_shaped_state(domain: IndexDomain, f_values, P: Callable) -> Spectrum:
    """Shaped state ``g(x) = P(f(x))``, normalized; ``prenorm`` holds ``||g||_2``."""
    f_values = np.asarray(f_values)
    if f_values.shape != (domain.size,):
        raise ArgumentError("objective table must cover every domain point")
    g = np.asarray(P(f_values), dtype=np.complex128)
    return Spectrum.from_vector(domain, g)


def _as_tensor(s: Spectrum) -> np.ndarray:
    return s.amps.reshape((s.domain.base,) * s.domain.digits)


def walsh_hadamard(s: Spectrum) -> Spectrum:
    if s.domain.kind != "boolean":
        raise DomainMismatch("Walsh-Hadamard needs a boolean domain")
    t = _as_tensor(s).copy()
    for axis in range(t.ndim):
        a = np.take(t, 0, axis=axis)
        b = np.take(t, 1, axis=axis)
        t = np.stack([a + b, a - b], axis=axis) * np.sqrt(0.5)
    return s.with_amps(t.reshape(-1))


def dft_p(s: Spectrum, inverse: bool = False) -> Spectrum:
    """Digitwise p-point DFT, ``alpha_m = p^{-m/2} sum_x w^{-<m,x>} amps_x`` (``w^{+}`` when inverse)."""
    if s.domain.kind != "padic":
        raise DomainMismatch("dft_p needs a p-adic domain")
    t = _as_tensor(s)
    axes = tuple(range(t.ndim))
    out = np.fft.ifftn(t, axes=axes, norm="ortho") if inverse else np.fft.fftn(t, axes=axes, norm="ortho")
    return s.with_amps(out.reshape(-1))


def fourier(s: Spectrum, inverse: bool = False) -> Spectrum:
    """The interferometer for the spectrum's domain (WHT or p-ary DFT)."""
    if s.domain.kind == "boolean":
        return walsh_hadamard(s)
    return dft_p(s, inverse=inverse)


@dataclass(frozen=True)
class HeadSet:
    d: int
    indices: tuple[int, ...]

    def mask(self, size: int) -> np.ndarray:
        m = np.zeros(size, dtype=bool)
        m[list(self.indices)] = True
        return m


def head_order(amps: np.ndarray) -> np.ndarray:
    """All indices ranked by decreasing magnitude, ties to the lowest index."""
    mags = np.round(np.abs(amps), _TIE_DECIMALS)
    return np.argsort(-mags, kind="stable")


def head_set(s: Spectrum, d: int) -> HeadSet:
    if not 1 <= d <= s.domain.size:
        raise ArgumentError(f"head size d={d} outside [1, {s.domain.size}]")
    top = head_order(s.amps)[:d]
    return HeadSet(d, tuple(sorted(int(i) for i in top)))


def head_mass(s: Spectrum, d: int) -> float:
    return float(s.probs[list(head_set(s, d).indices)].sum())
