import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kdqi.errors import ArgumentError
from kdqi.kernels import is_unitary
from kdqi.noise import NoiseModel
from kdqi.kernels import apply_kernel
from kdqi.opi import OpiInstance, opi_shaped_state
from kdqi.spectral import fourier, head_set
from kdqi.variational import (Ansatz, Objective, OptimizerConfig, ParityInstance, block_kernel,
                              block_kernel_search, default_grid, far_inits, gradient_bound_check, grid_max,
                              landscape_csv, landscape_scan, optimize, precision_radius, shot_estimate)

NM = NoiseModel(0.1)


def test_ansatz_generators():
    A = Ansatz()
    n1, n2 = A.generator_norms
    # largest centered |x^2 mod 31| is 15
    assert n1 == pytest.approx(2 * math.pi * 15 / 31)
    assert n2 == 1.0
    assert Ansatz(active=(True, False)).generator_norms[1] == 0.0
    assert Ansatz(reduced=False).generator_norms[0] == pytest.approx(2 * math.pi * 900 / 31)
    assert is_unitary(A.kernel(4.3, 0.7), A.inst.domain)


def test_optimum_reaches_one_minus_eta():
    for reduced in (True, False):
        obj = Objective(Ansatz(reduced=reduced), NM)
        assert obj(5.0, 0.0) == pytest.approx(0.9)
    # neighbouring integer rates leave a flat spectrum; the tie goes to mode 0, which has weight 1
    assert Objective(Ansatz(), NM)(4.0, 0.0) == pytest.approx(1 / 31, rel=1e-6)


def _head(A, t1, t2):
    return head_set(fourier(apply_kernel(A.kernel(t1, t2), opi_shaped_state(A.inst))), 1).indices


@settings(max_examples=30, deadline=None)
@given(st.floats(4.0, 6.0), st.floats(-math.pi / 2, math.pi / 2))
def test_finite_difference_within_generator_bound(t1, t2):
    A = Ansatz()
    h = 1e-4
    # the bound is for the smooth part: skip stencils that straddle a head-set switch
    heads = {_head(A, t1 + u, t2 + v) for u, v in ((0, 0), (h, 0), (-h, 0), (0, h), (0, -h))}
    assume(len(heads) == 1)
    g = Objective(A, NM).grad(t1, t2, h)
    b1, b2 = A.generator_norms
    assert abs(g[0]) <= 2 * b1 + 1e-6 and abs(g[1]) <= 2 * b2 + 1e-6


def test_gradient_bound_report():
    rep = gradient_bound_check(Ansatz(), NM, samples=30)
    assert rep.violations == 0 and rep.max_ratio < 1
    assert rep.bound == pytest.approx((2 * Ansatz().generator_norms[0], 2.0))


def test_shot_estimate_statistics():
    rng = np.random.default_rng(0)
    vals = [shot_estimate(0.3, 5000, rng) for _ in range(200)]
    assert np.mean(vals) == pytest.approx(0.3, abs=0.003)
    assert shot_estimate(1.5, 10, rng) == 1.0


def test_landscape_deterministic_and_csv():
    A = Ansatz()
    g1, g2 = default_grid(A, 5, 3)
    a = landscape_scan(A, g1, g2, NM, seed=4)
    b = landscape_scan(A, g1, g2, NM, seed=4)
    assert landscape_csv(a) == landscape_csv(b)
    assert len(landscape_csv(a).splitlines()) == 16
    assert max(p.sigma_exact for p in a) == pytest.approx(0.9)
    assert grid_max(A, NM) == pytest.approx(0.9)


def test_optimizer_from_near_point_converges():
    A = Ansatz()
    tr = optimize(A, NM, 1, (4.9, 0.2), n_shots=5000, max_iters=20, seed=1)
    assert tr.best > 0.85
    assert tr.iterations_to(0.85) is not None
    assert tr.csv_text().splitlines()[0].startswith("iter,theta1")
    spsa = optimize(A, NM, 1, (4.9, 0.2), max_iters=5, seed=1, config=OptimizerConfig(gradient="spsa"))
    assert len(spsa.rows) == 6
    with pytest.raises(ArgumentError):
        OptimizerConfig(decay="cosine")


def test_far_inits_satisfy_conditions():
    A = Ansatz()
    inits = far_inits(A, NM, 1, 2, seed=7)
    obj = Objective(A, NM)
    (l1, h1), (l2, h2) = A.box()
    for t1, t2 in inits:
        assert obj(t1, t2) < 0.1 and l1 <= t1 <= h1 and l2 <= t2 <= h2


def test_precision_radius_values():
    # reduced generator: the 90% radius stays near 0.18 as p grows
    r31 = precision_radius(Ansatz(), NM)
    r101 = precision_radius(Ansatz(OpiInstance.full(101, 5, 11)), NM)
    assert r31 == pytest.approx(0.1781, abs=1e-3)
    assert r101 == pytest.approx(0.1914, abs=1e-3)


def test_block_search_gain_nonnegative():
    inst = ParityInstance.random(6, 8, seed=3)
    r = block_kernel_search(inst, 2, 30, seed=0)
    assert r.gain >= 0 and r.evaluations == 30
    assert r.history == sorted(r.history)
    K = block_kernel(np.zeros(16), 2)
    assert np.allclose(K.blocks[0], np.eye(4))
    with pytest.raises(ArgumentError):
        block_kernel_search(inst, 4, 10)
