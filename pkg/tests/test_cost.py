import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdqi.cost import (DEFAULT_N_GRID, CostConstants, QuadraticPhaseInstance, chirp_rotation_ratio, estimate,
                       frontier_table, scaling_table)
from kdqi.errors import ArgumentError
from kdqi.kernels import apply_kernel, is_unitary
from kdqi.noise import NoiseModel
from kdqi.spectral import fourier


def test_stage_formulas():
    e = estimate(10, 3, "global_chirp", eps_synth=2**-8, coherent_decoder=(5, 2))
    assert e.stage("shaping").depth == 30 and e.stage("shaping").t_count == 30
    assert e.stage("kernel").depth == 100 and e.stage("kernel").t_count == 800
    assert e.stage("fourier").depth == 10
    assert e.stage("decoder").depth == 10 and e.stage("decoder").t_count == 80
    assert e.two_qubit_depth == 150
    assert estimate(10, 3, truncated_qft=False).stage("fourier").depth == 100
    c = CostConstants(c2=2.0)
    assert estimate(10, 1, "block_local", b=3, constants=c).stage("kernel").depth == 60


def test_global_vs_block_kernel_ratio():
    g = estimate(64, 2, "global_chirp").stage("kernel").depth
    b = estimate(64, 2, "block_local", b=4).stage("kernel").depth
    assert g / b == 16


def test_estimate_validation():
    with pytest.raises(ArgumentError):
        estimate(0, 1)
    with pytest.raises(ArgumentError):
        estimate(8, 1, "block_local")
    with pytest.raises(ArgumentError):
        estimate(8, 1, "fancy")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4096))
def test_rotation_ratio_bounds(n):
    if n > 200:
        n = n % 200 + 1
    r = chirp_rotation_ratio(n)
    assert r == pytest.approx((n + n * (n - 1) / 2) / n**2)
    assert 0.5 <= r <= 1.0


def test_chain_instance_and_kernels():
    inst = QuadraticPhaseInstance.random(5, 4, seed=0, index=1)
    assert np.all(np.triu(inst.A, 2) == 0) and np.all(np.tril(inst.A, -1) == 0)
    assert inst.qubits == 12
    K = inst.cancelling_kernel()
    assert is_unitary(K, inst.domain)
    # full cancellation leaves a linear phase: a single Fourier mode
    alpha = fourier(apply_kernel(K, inst.shaped()))
    assert alpha.probs.max() == pytest.approx(1.0)
    with pytest.raises(ArgumentError):
        inst.block_kernel(3)


def test_block_kernel_gain_is_residual_cross_term():
    # a full quadratic phase on F_5^4 spreads over p^4 modes; after block cancellation only the
    # rank-2 cross term remains and the top mode holds 1/p^2
    inst = QuadraticPhaseInstance.random(5, 4, seed=0, index=0)
    tab = frontier_table([inst], NoiseModel(0.0), b=2, mistuned=1)
    sig = {r.label: r.sigma_K for r in tab.rows}
    assert sig["baseline"] == pytest.approx(5**-4)
    assert sig["block_local"] == pytest.approx(5**-2)
    assert sig["tuned_global"] == pytest.approx(1.0)


def test_frontier_ordering():
    insts = [QuadraticPhaseInstance.random(5, 4, seed=0, index=i) for i in range(5)]
    tab = frontier_table(insts, NoiseModel(0.1))
    base, blk = tab.mean_gain("baseline"), tab.mean_gain("block_local")
    glob, mis = tab.mean_gain("tuned_global"), tab.mean_gain("mistuned_global")
    assert base == 0 < blk < glob
    assert abs(mis) < 0.01
    assert tab.relative_depth("baseline") == 1 < tab.relative_depth("block_local") < tab.relative_depth("tuned_global")
    assert tab.csv_text().splitlines()[0] == "label,instance,relative_depth,head_mass_gain,sigma_K"


def test_scaling_slopes():
    t = scaling_table(DEFAULT_N_GRID)
    assert t.slope("baseline") == pytest.approx(1.0, abs=1e-9)
    assert t.slope("block_local_b8") == pytest.approx(1.0, abs=1e-9)
    assert t.slope("global_chirp") == pytest.approx(1.9977, abs=1e-3)
    assert DEFAULT_N_GRID[0] == 8 and DEFAULT_N_GRID[-1] == 4096
    with pytest.raises(ArgumentError):
        scaling_table([])
