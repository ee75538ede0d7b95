import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdqi.errors import ArgumentError
from kdqi.headmass import sigma_K
from kdqi.kernels import Identity, chirp_mod_p
from kdqi.noise import (NoiseModel, apply_channel, attenuation, effective_head_bound, head_tail_block,
                        head_tail_coherence, mix_probabilities, mixing_blocks)
from kdqi.spectral import IndexDomain, Spectrum, fourier


def test_eta_K_formula():
    dom = IndexDomain.boolean(3)
    nm = NoiseModel(0.2, tau=0.5)
    assert np.allclose(nm.eta_K(dom), 0.5 * 0.8 ** dom.digit_weight())
    nm2 = NoiseModel(0.0, tau=lambda s: 1.0 - 0.01 * s)
    assert nm2.eta_K(dom)[7] == pytest.approx(0.93)
    with pytest.raises(ArgumentError):
        NoiseModel(1.0)
    with pytest.raises(ArgumentError):
        NoiseModel(0.1, tau=0.0).tau_vector(dom)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 1000), st.integers(8, 64))
def test_mixing_is_doubly_stochastic(w, seed, size):
    nm = NoiseModel(0.0, w, mix_seed=seed)
    _, M = mixing_blocks(nm, size)
    assert np.allclose(M.sum(axis=1), 1) and np.allclose(M.sum(axis=2), 1)
    rng = np.random.default_rng(seed)
    p = rng.random(size)
    p /= p.sum()
    q = mix_probabilities(nm, p)
    assert q.sum() == pytest.approx(1.0) and np.all(q >= -1e-15)
    # banded: a point mass moves by at most w
    e = np.zeros(size)
    e[size // 2] = 1
    moved = np.nonzero(mix_probabilities(nm, e) > 1e-15)[0]
    assert np.all(np.abs(moved - size // 2) <= w)


def test_single_mode_contraction():
    dom = IndexDomain.boolean(4)
    out = apply_channel(NoiseModel(0.1, 0), Spectrum.delta(dom, 4))  # index 4 has weight 1
    assert out.p_head == pytest.approx(0.9 + 0.1 / 16)
    assert abs(out.probs.sum() - 1) < 1e-10


def test_zero_width_has_no_leakage():
    dom = IndexDomain.boolean(4)
    out = apply_channel(NoiseModel(0.1, 0), Spectrum.delta(dom, 3))
    assert out.leakage == 0.0 and out.probs.sum() == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 0.4), st.integers(0, 3), st.floats(0.6, 1.0), st.integers(1, 4))
def test_channel_head_never_below_bound(seed, eta, w, tau, d):
    dom = IndexDomain.boolean(5)
    rng = np.random.default_rng(seed)
    s = Spectrum.from_vector(dom, rng.normal(size=32) + 1j * rng.normal(size=32))
    nm = NoiseModel(eta, w, tau, seed)
    alpha = fourier(s)
    prof = attenuation(nm, dom, d=d, shaped=s)
    rep = sigma_K(alpha, prof, d)
    out = apply_channel(nm, alpha, head=rep.head)
    assert out.p_head >= rep.sigma_K - prof.delta_w - 1e-12


def test_coherence_of_identity_and_delta():
    dom = IndexDomain.boolean(3)
    # F on a delta at 0 is flat: head of size 1 leaves all but 1/8 of the column in the tail
    B = head_tail_block(dom, Identity(), [0])
    assert B.shape == (7, 1)
    assert head_tail_coherence(dom, Identity(), [0]) == pytest.approx(np.sqrt(7 / 8))
    assert head_tail_coherence(dom, Identity(), list(range(8))) == 0.0
    assert head_tail_coherence(IndexDomain.boolean(2), Identity(), [0]) == pytest.approx(np.sqrt(3) / 2)


def test_mean_leakage_grows_with_width():
    dom = IndexDomain.boolean(6)
    s = Spectrum.delta(dom, 20)
    means = [np.mean([apply_channel(NoiseModel(0.1, w, mix_seed=k), s).leakage for k in range(100)])
             for w in range(6)]
    assert means[0] == 0.0
    assert all(b > a for a, b in zip(means, means[1:]))
    with pytest.raises(ArgumentError):
        NoiseModel(0.1, 1, mix_angle=-1.0)


def test_coherence_power_iteration_path_matches_svd():
    from kdqi.noise import _power_sigma_max
    rng = np.random.default_rng(0)
    B = rng.normal(size=(40, 5)) + 1j * rng.normal(size=(40, 5))
    assert _power_sigma_max(B) == pytest.approx(np.linalg.svd(B, compute_uv=False)[0], rel=1e-6)


def test_effective_head_floor():
    assert effective_head_bound(0.5, 0.1, 0.2, 1.0) == pytest.approx(0.36)
    assert effective_head_bound(0.1, 0.1, 1.0, 1.0) == 0.0


def test_attenuation_profile_json():
    dom = IndexDomain.padic(5, 1)
    prof = attenuation(NoiseModel(0.1, 1, mix_seed=3), dom, chirp_mod_p(1, 5))
    assert prof.eta_K.shape == (5,) and prof.mu >= 0 and prof.delta_w >= 0
    assert '"delta_w"' in prof.to_json()
    assert NoiseModel(0.1, 2).to_dict()["w"] == 2
