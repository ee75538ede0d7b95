import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from statsmodels.stats.proportion import proportion_confint

from kdqi.errors import ArgumentError
from kdqi.ldpc import (AWGN, BEC, BSC, BlaParams, FerRow, FerTable, LdpcCode, LdpcEnsemble, awgn_sigma2,
                       bla_shift, bla_tangency_check, bp_decode, build_code, channel_llr, de_iterate, de_map,
                       de_map_deriv, de_threshold, de_trace, fer_scan, girth, sample_received)

# dense-grid minimum of x / lambda(1 - rho(1 - x)) with 2e6 points
THRESHOLDS = {(3, 6): 0.4294398144, (4, 8): 0.3834465723, (5, 10): 0.3415500230}


@pytest.mark.parametrize("ens", list(THRESHOLDS))
def test_thresholds_match_grid_oracle(ens):
    th = de_threshold(LdpcEnsemble(*ens))
    assert th.eps_star == pytest.approx(THRESHOLDS[ens], abs=1e-9)
    e = LdpcEnsemble(*ens)
    assert float(de_map(e, th.eps_star, th.x_star)) == pytest.approx(th.x_star, abs=1e-12)
    assert float(de_map_deriv(e, th.eps_star, th.x_star)) == pytest.approx(1.0, abs=1e-5)


def test_de_below_and_above_threshold():
    ens = LdpcEnsemble(3, 6)
    assert de_iterate(ens, 0.42).converged
    run = de_iterate(ens, 0.44)
    assert not run.converged and run.x > 0.1
    tr = de_trace(ens, 0.3, steps=10)
    assert tr.shape == (11,) and np.all(np.diff(tr) <= 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_de_map_monotone(eps, x, y):
    ens = LdpcEnsemble(3, 6)
    lo, hi = sorted((x, y))
    assert de_map(ens, eps, lo) <= de_map(ens, eps, hi) + 1e-15
    assert de_map(ens, eps, x) <= eps + 1e-15


def test_derivative_matches_finite_difference():
    ens = LdpcEnsemble(4, 8)
    x, h = 0.3, 1e-6
    fd = (de_map(ens, 0.4, x + h) - de_map(ens, 0.4, x - h)) / (2 * h)
    assert float(de_map_deriv(ens, 0.4, x)) == pytest.approx(float(fd), rel=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.001, 0.2), st.floats(0.1, 1.0))
def test_bla_identities_hold(ds, kappa):
    r = bla_tangency_check(LdpcEnsemble(3, 6), BlaParams(kappa, ds))
    assert r.value_error < 1e-12 and r.deriv_error < 1e-12
    assert r.margin > 0 and r.converges


def test_bla_validation():
    assert bla_shift(0.44, BlaParams(1.0, 0.1)) == pytest.approx(0.396)
    with pytest.raises(ArgumentError):
        BlaParams(0.0, 0.1)
    with pytest.raises(ArgumentError):
        BlaParams(1.0, 1.0)


def test_code_construction_regular_and_simple():
    code = build_code(LdpcEnsemble(3, 6), 96, seed=4)
    H = code.parity.toarray()
    assert H.shape == (48, 96)
    assert np.all(H.sum(axis=0) == 3) and np.all(H.sum(axis=1) == 6)
    assert code.rate == 0.5
    back = LdpcCode.from_text(code.to_text())
    assert np.array_equal(np.sort(back.checks, axis=1), np.sort(code.checks, axis=1))
    g = girth(code)
    assert g is None or (g % 2 == 0 and g >= 4)
    with pytest.raises(ArgumentError):
        build_code(LdpcEnsemble(3, 6), 97)


def test_girth_detects_four_cycle():
    checks = np.array([[0, 1, 2], [0, 1, 3], [2, 3, 4], [4, 5, 0]])
    code = LdpcCode(6, 2, 3, checks)
    assert girth(code) == 4


def test_awgn_conversion_and_llrs():
    assert awgn_sigma2(0.0, 0.5) == pytest.approx(1.0)
    assert awgn_sigma2(10 * math.log10(2), 0.5) == pytest.approx(0.5)
    llr = channel_llr(BSC(0.1), np.array([0, 1]))
    assert llr.tolist() == pytest.approx([math.log(9), -math.log(9)])
    with pytest.raises(ArgumentError):
        channel_llr(BEC(0.1), np.zeros(2))


def test_decoders_on_easy_and_hopeless_inputs():
    code = build_code(LdpcEnsemble(3, 6), 256, seed=1)
    rng = np.random.default_rng(0)
    assert bp_decode(code, BEC(0.1), sample_received(BEC(0.1), 256, rng))[0]
    assert not bp_decode(code, BEC(0.9), sample_received(BEC(0.9), 256, rng))[0]
    assert bp_decode(code, BSC(0.01), sample_received(BSC(0.01), 256, rng))[0]
    assert bp_decode(code, AWGN(4.0), sample_received(AWGN(4.0), 256, rng))[0]
    ok, it = bp_decode(code, BSC(0.01), np.zeros(256, dtype=np.int8))
    assert ok and it <= 1


def test_fer_table_and_wilson_interval():
    code = build_code(LdpcEnsemble(3, 6), 128, seed=2)
    tab = fer_scan(code, "bec", [0.2, 0.6], 40, seed=3)
    assert tab.rows[0].fer < tab.rows[1].fer
    r = tab.rows[1]
    lo, hi = proportion_confint(r.errors, r.trials, alpha=0.05, method="wilson")
    assert (r.ci_low, r.ci_high) == pytest.approx((lo, hi))
    # thread count does not change results
    tab2 = fer_scan(code, "bec", [0.2, 0.6], 40, seed=3, threads=2)
    assert list(tab.csv_rows()) == list(tab2.csv_rows())


def test_waterfall_midpoint_interpolates():
    rows = [FerRow(p, 10, 0, f, 0, 0, 0) for p, f in ((0.1, 0.0), (0.2, 0.25), (0.3, 0.75), (0.4, 1.0))]
    assert FerTable("bsc", rows).waterfall_midpoint() == pytest.approx(0.25)
    assert FerTable("bsc", rows[:2]).waterfall_midpoint() is None
