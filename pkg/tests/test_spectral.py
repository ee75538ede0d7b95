import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import hadamard

from kdqi.errors import ArgumentError, DomainMismatch, NormalizationError
from kdqi.spectral import (IndexDomain, ShapingPolynomial, Spectrum, build_shaped_state, dft_p, fourier,
                           head_mass, head_set, is_prime, phase_shaping, walsh_hadamard)


def rand_spectrum(dom, seed):
    rng = np.random.default_rng(seed)
    return Spectrum.from_vector(dom, rng.normal(size=dom.size) + 1j * rng.normal(size=dom.size))


def test_digits_little_endian():
    dom = IndexDomain.padic(5, 3)
    assert dom.digits_of(np.array([1 + 2 * 5 + 3 * 25]))[0].tolist() == [1, 2, 3]
    assert IndexDomain.boolean(3).digit_weight().tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def test_domain_validation():
    with pytest.raises(ArgumentError):
        IndexDomain.padic(9, 1)
    with pytest.raises(ArgumentError):
        IndexDomain.boolean(30)
    assert is_prime(257) and not is_prime(255)


def test_wht_matches_sylvester_matrix():
    dom = IndexDomain.boolean(4)
    s = rand_spectrum(dom, 1)
    want = hadamard(16) @ s.amps / 4.0
    assert np.allclose(walsh_hadamard(s).amps, want, atol=1e-13)


def test_dft_matches_explicit_matrix_on_two_digits():
    p = 5
    dom = IndexDomain.padic(p, 2)
    s = rand_spectrum(dom, 2)
    w = np.exp(-2j * np.pi / p)
    F1 = np.array([[w ** (j * k) for k in range(p)] for j in range(p)]) / np.sqrt(p)
    # little-endian index: x = x0 + p x1, so the tensor product is F1 (x) F1 in either order
    want = np.kron(F1, F1) @ s.amps
    assert np.allclose(dft_p(s).amps, want, atol=1e-12)


def test_transform_domain_mismatch():
    with pytest.raises(DomainMismatch):
        walsh_hadamard(Spectrum.uniform(IndexDomain.padic(3, 2)))
    with pytest.raises(DomainMismatch):
        dft_p(Spectrum.uniform(IndexDomain.boolean(2)))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([("boolean", 2, 5), ("padic", 3, 3), ("padic", 7, 2), ("padic", 11, 1)]),
       st.integers(0, 2**32 - 1))
def test_fourier_unitary_and_invertible(dom_spec, seed):
    kind, base, digits = dom_spec
    dom = IndexDomain.boolean(digits) if kind == "boolean" else IndexDomain.padic(base, digits)
    s = rand_spectrum(dom, seed)
    t = fourier(s)
    assert abs(np.linalg.norm(t.amps) - 1) < 1e-12
    back = fourier(t) if kind == "boolean" else fourier(t, inverse=True)
    assert np.allclose(back.amps, s.amps, atol=1e-12)


def test_prenorm_and_normalization():
    dom = IndexDomain.boolean(2)
    s = Spectrum.from_vector(dom, [3, 4, 0, 0])
    assert s.prenorm == pytest.approx(5.0)
    assert fourier(s).prenorm == pytest.approx(5.0)
    with pytest.raises(NormalizationError):
        Spectrum(dom, np.array([1, 1, 0, 0]))
    with pytest.raises(NormalizationError):
        Spectrum.from_vector(dom, np.zeros(4))


def test_head_set_ties_go_to_lowest_index():
    dom = IndexDomain.boolean(3)
    s = Spectrum.uniform(dom)
    assert head_set(s, 3).indices == (0, 1, 2)
    v = np.array([1, 2, 2, 1, 0, 0, 0, 2.0])
    assert head_set(Spectrum.from_vector(dom, v), 2).indices == (1, 2)
    with pytest.raises(ArgumentError):
        head_set(s, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_head_mass_monotone_in_d(seed, d):
    s = rand_spectrum(IndexDomain.boolean(4), seed)
    m = head_mass(s, d)
    assert 0 <= m <= 1 + 1e-12
    if d < 16:
        assert head_mass(s, d + 1) >= m - 1e-15
    assert head_mass(s, 16) == pytest.approx(1.0)


def test_serialization_roundtrip():
    s = rand_spectrum(IndexDomain.padic(3, 2), 3)
    assert np.array_equal(Spectrum.from_bytes(s.to_bytes()).amps, s.amps)
    back = Spectrum.from_json(s.to_json())
    assert np.allclose(back.amps, s.amps) and back.domain == s.domain
    json.loads(s.to_json())


def test_shaping():
    P = ShapingPolynomial((1.0, 0.0, 2.0))
    assert P.degree == 2 and P(3) == pytest.approx(19.0)
    dom = IndexDomain.padic(7, 1)
    f = np.arange(7) ** 2 % 7
    s = build_shaped_state(dom, f, phase_shaping(7))
    assert s.prenorm == pytest.approx(np.sqrt(7))
    assert np.allclose(np.abs(s.amps), 1 / np.sqrt(7))
    with pytest.raises(ArgumentError):
        build_shaped_state(dom, f[:3], P)
