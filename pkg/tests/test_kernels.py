import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from kdqi.errors import ArgumentError, DomainMismatch, UnitarityError
from kdqi.kernels import (BlockLocal, Chirp, GivensLayer, Identity, Lct, PhaseDiagonal, Product, apply_kernel,
                          chirp_mod_p, greedy_edge_coloring, is_unitary, kernel_from_dict, kernel_matrix,
                          kernel_to_dict, lct_cost, synthesize_chirp, synthesized_matches_diagonal)
from kdqi.spectral import IndexDomain, Spectrum


def rand_unitary(dim, seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


KERNELS = [
    Identity(),
    chirp_mod_p(3, 7),
    Chirp((0, 1, 1), 0.37),
    Lct(Chirp((0, 0, 1), 0.2), Chirp((0, 0, 1), -0.5), Identity()),
    GivensLayer(0.3, 1),
    Product((chirp_mod_p(2, 7), GivensLayer(-0.7))),
]


@pytest.mark.parametrize("K", KERNELS, ids=lambda k: type(k).__name__)
def test_kernels_unitary_and_roundtrip(K):
    dom = IndexDomain.padic(7, 2)
    assert is_unitary(K, dom)
    back = kernel_from_dict(kernel_to_dict(K))
    assert np.allclose(kernel_matrix(back, dom), kernel_matrix(K, dom))


def test_chirp_mod_p_is_exact_on_integers():
    dom = IndexDomain.padic(7, 1)
    M = kernel_matrix(chirp_mod_p(3, 7), dom)
    x = np.arange(7)
    assert np.allclose(np.diag(M), np.exp(2j * np.pi * 3 * x * x / 7), atol=1e-14)
    # digitwise sum on two digits
    dom2 = IndexDomain.padic(7, 2)
    d = dom2.digits_of(np.arange(49))
    want = np.exp(2j * np.pi * 3 * (d**2).sum(axis=1) / 7)
    assert np.allclose(np.diag(kernel_matrix(chirp_mod_p(3, 7), dom2)), want)


def test_block_local_uses_little_endian_digits():
    dom = IndexDomain.padic(3, 2)
    U = rand_unitary(3, 0)
    # one block of width 1 per digit: the full operator is U (x) U with digit 0 least significant
    K = BlockLocal(1, (U, np.eye(3)))
    want = np.kron(np.eye(3), U)
    assert np.allclose(kernel_matrix(K, dom), want)
    with pytest.raises(UnitarityError):
        BlockLocal(1, (np.ones((3, 3)),))
    with pytest.raises(DomainMismatch):
        apply_kernel(BlockLocal(2, (rand_unitary(9, 1),)), Spectrum.uniform(IndexDomain.padic(3, 3)))


def test_givens_generator_norm_one():
    dom = IndexDomain.boolean(3)
    t = 0.41
    G = np.zeros((8, 8), dtype=complex)
    for k in range(0, 8, 2):
        G[k, k + 1], G[k + 1, k] = -1j, 1j
    assert np.linalg.norm(G, 2) == pytest.approx(1.0)
    assert np.allclose(kernel_matrix(GivensLayer(t), dom), expm(-1j * t * G))


def test_phase_diagonal_size_check():
    with pytest.raises(DomainMismatch):
        apply_kernel(PhaseDiagonal(np.zeros(3)), Spectrum.uniform(IndexDomain.boolean(2)))
    with pytest.raises(ArgumentError):
        PhaseDiagonal(np.array([np.nan]))


def test_edge_coloring_is_proper():
    for n in range(2, 10):
        col = greedy_edge_coloring(n)
        assert len(col) == n * (n - 1) // 2
        seen = set()
        for r, s, c in col:
            assert (r, c) not in seen and (s, c) not in seen
            seen |= {(r, c), (s, c)}


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 4, allow_nan=False), st.integers(1, 10))
def test_synthesis_reproduces_chirp(theta, n):
    assert synthesized_matches_diagonal(theta, n)
    s = synthesize_chirp(theta, n)
    assert s.single_qubit_rotations == n and s.two_qubit_controlled_rotations == n * (n - 1) // 2


def test_t_count_and_csv():
    s = synthesize_chirp(0.1, 3)
    assert s.t_count(2**-10) == pytest.approx(6 * 4.0 * 10)
    lines = s.rotations_csv().splitlines()
    assert lines[0] == "gate,qubits,angle" and len(lines) == 7
    with pytest.raises(ArgumentError):
        s.t_count(1.5)


def test_lct_cost_ordering():
    g = lct_cost(32, kind="global").depth_estimate
    b = lct_cost(32, kind="block_local", b=4).depth_estimate
    i = lct_cost(32, kind="identity").depth_estimate
    assert i < b < g


def test_boolean_chirp_uses_integer_index():
    dom = IndexDomain.boolean(3)
    M = kernel_matrix(Chirp((0, 0, 1), 0.25), dom)
    j = np.arange(8)
    assert np.allclose(np.diag(M), np.exp(1j * 0.25 * j * j))
    assert math.isclose(abs(np.linalg.det(M)), 1.0)
