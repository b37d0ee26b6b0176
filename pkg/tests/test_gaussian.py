"""Closed-form Gaussian integrals against an independent quadrature oracle.

The oracle is mpmath tanh-sinh quadrature at 30 digits; expected values for
the named cases were computed with it and are frozen below as literals.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from jamgame.gaussian import (
    DiagonalGaussian,
    GeneralGaussian,
    ScalarGaussian,
    clipped_sq_loss,
    interval_moments,
    norm_sq_tail_moment,
    philox_rng,
    sample,
    tail_prob,
    tail_second_moment,
    whiten,
)

mp.mp.dps = 25


def oracle_pdf(x, mean, sigma):
    return mp.exp(-((x - mean) / sigma) ** 2 / 2) / (sigma * mp.sqrt(2 * mp.pi))


def oracle_integral(weight, mean, var, lo, hi, breaks=()):
    """Adaptive quadrature of weight(x) * f(x) over (lo, hi).

    `breaks` lists kink locations of the weight; tanh-sinh quadrature needs
    each non-smooth point as a segment boundary to converge.
    """
    sigma = mp.sqrt(var)
    pts = [mp.mpf(lo) if math.isfinite(lo) else -mp.inf]
    for anchor in sorted(set(breaks) | {mean - 6 * sigma, mean, mean + 6 * sigma}):
        if pts[-1] < anchor < hi:
            pts.append(mp.mpf(anchor))
    pts.append(mp.mpf(hi) if math.isfinite(hi) else mp.inf)
    return float(mp.quad(lambda x: weight(x) * oracle_pdf(x, mean, sigma), pts))


# Frozen oracle outputs (mpmath, dps=40).
TAIL_PROB_N04_AT_2 = 0.158655253931457051
TSM_N02_AT_1_5 = 0.771042668242890365
E_MIN_X2_1 = 0.5160585509617133
Q_AT_1 = 0.158655253931457051
TSM_AT_1 = 0.400625978450600401
CHI2_M3_R3 = 2.09995750763588253
CLIPPED_SHIFTED = 0.478595226168709836


def test_tail_prob_frozen_values():
    assert tail_prob(ScalarGaussian(0.0, 4.0), 2.0) == pytest.approx(TAIL_PROB_N04_AT_2, rel=1e-14)
    assert tail_prob(ScalarGaussian(0.0, 1.0), 1.0) == pytest.approx(Q_AT_1, rel=1e-14)
    assert tail_prob(ScalarGaussian(0.0, 2.7), 0.0) == pytest.approx(0.5, rel=1e-14)
    # noncentered: shift invariance
    assert tail_prob(ScalarGaussian(1.5, 4.0), 3.5) == pytest.approx(TAIL_PROB_N04_AT_2, rel=1e-14)


def test_tail_second_moment_frozen_values():
    assert tail_second_moment(ScalarGaussian(0.0, 2.0), 1.5) == pytest.approx(TSM_N02_AT_1_5, rel=1e-13)
    assert tail_second_moment(ScalarGaussian(0.0, 1.0), 1.0) == pytest.approx(TSM_AT_1, rel=1e-13)
    # t = 0 gives half the variance by symmetry
    assert tail_second_moment(ScalarGaussian(0.0, 3.3), 0.0) == pytest.approx(1.65, rel=1e-13)


def test_tail_second_moment_rejects_bad_inputs():
    with pytest.raises(ValueError):
        tail_second_moment(ScalarGaussian(0.0, 1.0), -0.5)
    with pytest.raises(ValueError):
        tail_second_moment(ScalarGaussian(1.0, 1.0), 0.5)


def test_tails_match_quadrature_oracle_to_1e8():
    # relative error <= 1e-8 out to t/sigma = 8 in both integrals
    for var in (0.25, 1.0, 5.1):
        sigma = math.sqrt(var)
        for z in (0.0, 0.3, 1.0, 2.5, 5.0, 8.0):
            t = z * sigma
            got_p = tail_prob(ScalarGaussian(0.0, var), t)
            want_p = oracle_integral(lambda x: 1, 0.0, var, t, math.inf)
            assert abs(got_p - want_p) <= 1e-8 * abs(want_p)
            got_m = tail_second_moment(ScalarGaussian(0.0, var), t)
            want_m = oracle_integral(lambda x: x * x, 0.0, var, t, math.inf)
            assert abs(got_m - want_m) <= 1e-8 * abs(want_m)


def test_interval_moments_against_oracle():
    rng = np.random.default_rng(7)
    cases = []
    for _ in range(12):
        mean = float(rng.normal(scale=2.0))
        var = float(rng.uniform(0.2, 4.0))
        a, b = np.sort(rng.normal(loc=mean, scale=3.0 * math.sqrt(var), size=2))
        cases.append((mean, var, float(a), float(b)))
    cases.append((0.3, 1.2, -math.inf, 0.8))
    cases.append((0.3, 1.2, 0.8, math.inf))
    cases.append((-1.0, 0.5, -math.inf, math.inf))
    for mean, var, a, b in cases:
        g = ScalarGaussian(mean, var)
        p, m1, m2 = interval_moments(g, a, b)
        assert p == pytest.approx(oracle_integral(lambda x: 1, mean, var, a, b), abs=1e-13)
        assert m1 == pytest.approx(oracle_integral(lambda x: x, mean, var, a, b), abs=1e-12)
        assert m2 == pytest.approx(oracle_integral(lambda x: x * x, mean, var, a, b), abs=1e-12)


def test_interval_moments_empty_and_tail_accuracy():
    g = ScalarGaussian(0.0, 1.0)
    assert interval_moments(g, 2.0, 2.0) == (0.0, 0.0, 0.0)
    assert interval_moments(g, 3.0, 1.0) == (0.0, 0.0, 0.0)
    # far-tail interval keeps relative accuracy (erfc, not cdf differences)
    p, _, _ = interval_moments(g, 7.0, 9.0)
    want = oracle_integral(lambda x: 1, 0.0, 1.0, 7.0, 9.0)
    assert abs(p - want) <= 1e-10 * want


def test_clipped_sq_loss_frozen_values():
    assert clipped_sq_loss(ScalarGaussian(0.0, 1.0), 0.0, 1.0, 0.0) == pytest.approx(E_MIN_X2_1, rel=1e-13)
    assert clipped_sq_loss(ScalarGaussian(0.3, 1.5), -0.2, 0.8, 0.3) == pytest.approx(CLIPPED_SHIFTED, rel=1e-13)


def test_clipped_sq_loss_against_oracle_grid():
    for var, x0, c, phi in [
        (1.0, 0.0, 1.0, 0.5),
        (2.0, 0.7, 0.3, 0.9),
        (0.5, -1.2, 2.0, 0.0),
        (1.7, 0.1, 0.9, 0.999),
    ]:
        got = clipped_sq_loss(ScalarGaussian(0.0, var), x0, c, phi)
        hw = math.sqrt(c / (1 - phi))
        want = oracle_integral(
            lambda x: min((1 - phi) * (x - x0) ** 2, c),
            0.0, var, -math.inf, math.inf, breaks=(x0 - hw, x0 + hw),
        )
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_clipped_sq_loss_degenerate_phi():
    g = ScalarGaussian(0.0, 1.0)
    with pytest.raises(ValueError):
        clipped_sq_loss(g, 0.0, 1.0, 1.0)
    assert clipped_sq_loss(g, 0.0, 1.0, 1.0, allow_degenerate=True) == 0.0
    # clamp keeps the threshold finite just below 1
    val = clipped_sq_loss(g, 0.0, 1.0, 1.0 - 1e-15)
    assert math.isfinite(val)
    assert val == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        clipped_sq_loss(g, 0.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        clipped_sq_loss(g, 0.0, 1.0, 1.5)


def test_monotonicity_in_threshold_and_phi():
    g = ScalarGaussian(0.0, 1.0)
    ts = np.linspace(0.0, 4.0, 41)
    probs = [tail_prob(g, t) for t in ts]
    moms = [tail_second_moment(g, t) for t in ts]
    assert all(a > b for a, b in zip(probs, probs[1:]))
    assert all(a > b for a, b in zip(moms, moms[1:]))
    # clipped loss decreases as jamming rises (less weight on the quadratic)
    phis = np.linspace(0.0, 0.99, 34)
    vals = [clipped_sq_loss(g, 0.0, 1.0, p) for p in phis]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_sample_reproducible_and_stream_split():
    g = ScalarGaussian(5.0, 1.0)
    a = sample(g, 3, 1000)
    b = sample(g, 3, 1000)
    assert np.array_equal(a, b)
    c = sample(g, 4, 1000)
    assert not np.array_equal(a, c)
    r1 = philox_rng(11, 0).standard_normal(100)
    r2 = philox_rng(11, 1).standard_normal(100)
    assert not np.array_equal(r1, r2)
    assert np.array_equal(r1, philox_rng(11, 0).standard_normal(100))


def test_sample_moments_scalar_and_correlated():
    g = ScalarGaussian(5.0, 1.0)
    xs = sample(g, 3, 100_000)
    assert abs(xs.mean() - 5.0) < 0.02
    cov = np.array([[2.0, 0.6, 0.2], [0.6, 1.5, -0.3], [0.2, -0.3, 1.0]])
    gg = GeneralGaussian(np.array([1.0, -2.0, 0.5]), cov)
    ys = sample(gg, 9, 200_000)
    assert np.max(np.abs(ys.mean(axis=0) - gg.mean)) < 0.02
    emp = np.cov(ys.T)
    for i in range(3):
        assert abs(emp[i, i] - cov[i, i]) < 0.02 * cov[i, i]
    assert np.max(np.abs(emp - cov)) < 0.05


def test_whiten_two_by_two_hand_case():
    # [[2,1],[1,2]] has eigenvalues {1, 3} with eigenvectors at 45 degrees
    g = GeneralGaussian(np.array([0.5, -0.5]), np.array([[2.0, 1.0], [1.0, 2.0]]))
    diag, rot = whiten(g)
    assert sorted(diag.variances) == pytest.approx([1.0, 3.0], abs=1e-12)
    assert np.allclose(rot @ rot.T, np.eye(2), atol=1e-10)
    assert np.allclose(rot.T @ rot, np.eye(2), atol=1e-10)
    assert np.allclose(rot.T @ np.diag(diag.variances) @ rot, g.covariance, atol=1e-8)
    assert np.allclose(diag.mean, rot @ g.mean)
    # rotated samples follow the diagonal model
    ys = sample(g, 21, 200_000) @ rot.T
    emp = np.cov(ys.T)
    assert np.allclose(np.diag(emp), diag.variances, rtol=0.02)
    assert abs(emp[0, 1]) < 0.02


def test_whiten_rejects_rank_deficient_covariance():
    with pytest.raises(ValueError):
        GeneralGaussian(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        GeneralGaussian(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_norm_sq_tail_moment_exact_and_mc():
    iso = DiagonalGaussian(np.zeros(3), np.ones(3))
    est = norm_sq_tail_moment(iso, 3.0)
    assert est.method == "exact"
    assert est.std_err == 0.0
    assert est.value == pytest.approx(CHI2_M3_R3, rel=1e-12)
    # r = 0 recovers the full second moment, trace of the covariance
    assert norm_sq_tail_moment(iso, 0.0).value == pytest.approx(3.0, rel=1e-12)
    mc = norm_sq_tail_moment(iso, 3.0, samples=200_000, seed=5, method="mc")
    assert mc.method == "mc"
    assert abs(mc.value - est.value) <= 3.0 * mc.std_err


def test_norm_sq_tail_moment_anisotropic_vs_oracle():
    # X1 ~ N(0,1), X2 ~ N(0,2), S = X1^2 + X2^2, want E[S 1(S > 2)].
    # Conditioning on one coordinate leaves a 1-D chi-square tail moment:
    # E[Xi^2 1(Xi^2 > q)] = vi P(chi2_3 > q / vi), integrated over the other.
    g = DiagonalGaussian(np.zeros(2), np.array([1.0, 2.0]))
    est = norm_sq_tail_moment(g, 2.0, samples=400_000, seed=13)
    assert est.method == "mc"
    r = mp.mpf(2)

    def chi2_3_tail(q):
        return mp.gammainc(mp.mpf(3) / 2, q / 2, mp.inf, regularized=True)

    def cross(v_int, v_out):
        # E[Xint^2 1(S > r)] where Xint has variance v_int, Xout v_out
        s_out = mp.sqrt(v_out)
        return mp.quad(
            lambda y: oracle_pdf(y, 0, s_out)
            * v_int
            * chi2_3_tail(max(r - y * y, mp.mpf(0)) / v_int),
            [-mp.inf, -mp.sqrt(r), 0, mp.sqrt(r), mp.inf],
        )

    want = float(cross(1, 2) + cross(2, 1))
    assert abs(est.value - want) <= 3.0 * est.std_err
    with pytest.raises(ValueError):
        norm_sq_tail_moment(g, 2.0, method="exact")
    with pytest.raises(ValueError):
        norm_sq_tail_moment(DiagonalGaussian(np.ones(2), np.ones(2)), 1.0)
