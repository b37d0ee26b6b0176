"""Proactive point-to-point equilibria: roots, saddle inequalities, vector path."""

import math

import numpy as np
import pytest

from jamgame.gaussian import DiagonalGaussian, GeneralGaussian, ScalarGaussian
from jamgame.proactive import (
    INTERIOR_JAM,
    NO_JAM,
    GameCosts,
    NoInteriorRoot,
    ProactiveSaddle,
    ReprSymbols,
    jammer_marginal,
    objective_tilde,
    objective_with_threshold,
    solve_phi_tilde,
    solve_saddle,
    solve_saddle_vector,
)

STD = ScalarGaussian(0.0, 1.0)

# mpmath oracle outputs (dps=40) frozen for the standard source, c = 1
D_EXACT_ROOT_AT_0 = 0.801251956901200802  # 2 int_1^inf x^2 f(x) dx
PHI_TILDE_D_05 = 0.577341065933185961
THRESH_D_05 = 2.36597388437533827
PHI_TILDE_D_025 = 0.756592979492339135
THRESH_D_025 = 4.10834493563231684
E_MIN_X2_1 = 0.5160585509617133


def test_jammer_marginal_root_and_monotonicity():
    costs = GameCosts(1.0, D_EXACT_ROOT_AT_0)
    assert abs(jammer_marginal(STD, costs, 0.0)) <= 1e-12
    costs = GameCosts(1.0, 0.5)
    grid = np.linspace(0.0, 0.995, 60)
    vals = [jammer_marginal(STD, costs, p) for p in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # limit toward phi -> 1 is -d
    assert jammer_marginal(STD, costs, 1.0 - 1e-9) == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(ValueError):
        jammer_marginal(STD, costs, 1.0)
    with pytest.raises(ValueError):
        jammer_marginal(STD, costs, -0.1)


def test_phi_tilde_frozen_roots():
    phi = solve_phi_tilde(STD, GameCosts(1.0, 0.5))
    assert phi == pytest.approx(PHI_TILDE_D_05, abs=1e-9)
    assert 1.0 / (1.0 - phi) == pytest.approx(THRESH_D_05, rel=1e-8)
    assert abs(jammer_marginal(STD, GameCosts(1.0, 0.5), phi)) <= 1e-10
    phi = solve_phi_tilde(STD, GameCosts(1.0, 0.25))
    assert phi == pytest.approx(PHI_TILDE_D_025, abs=1e-9)
    assert 1.0 / (1.0 - phi) == pytest.approx(THRESH_D_025, rel=1e-8)


def test_phi_tilde_no_root():
    with pytest.raises(NoInteriorRoot):
        solve_phi_tilde(STD, GameCosts(1.0, 2.0))


def test_threshold_depends_only_on_d():
    # c/(1 - phi_tilde) is invariant in c at fixed d
    thresholds = []
    for c in (0.5, 1.0, 2.0):
        phi = solve_phi_tilde(STD, GameCosts(c, 0.5))
        thresholds.append(c / (1.0 - phi))
    assert thresholds[0] == pytest.approx(thresholds[1], rel=1e-8)
    assert thresholds[1] == pytest.approx(thresholds[2], rel=1e-8)


def test_solve_saddle_cases():
    sad = solve_saddle(STD, GameCosts(1.0, 0.5))
    assert sad.case == INTERIOR_JAM
    assert sad.phi_star == pytest.approx(PHI_TILDE_D_05, abs=1e-9)
    assert sad.threshold == pytest.approx(THRESH_D_05, rel=1e-8)
    assert sad.estimator.scalars() == (0.0, 0.0)

    sad = solve_saddle(STD, GameCosts(1.0, 2.0))
    assert sad.case == NO_JAM
    assert sad.phi_star == 0.0
    assert sad.threshold == 1.0
    assert sad.value == pytest.approx(E_MIN_X2_1, rel=1e-12)

    # boundary tie G(0) = 0 is reported as the interior case at phi = 0
    import jamgame.gaussian as gc

    d0 = 2.0 * gc.tail_second_moment(STD, 1.0)
    sad = solve_saddle(STD, GameCosts(1.0, d0))
    assert sad.case == INTERIOR_JAM
    assert sad.phi_star <= 1e-9


def test_solve_saddle_shift_invariance():
    shifted = ScalarGaussian(2.0, 1.0)
    a = solve_saddle(STD, GameCosts(1.0, 0.5))
    b = solve_saddle(shifted, GameCosts(1.0, 0.5))
    assert b.estimator.scalars() == (2.0, 2.0)
    assert b.phi_star == pytest.approx(a.phi_star, abs=1e-12)
    assert b.value == pytest.approx(a.value, rel=1e-12)


def test_objective_forms_agree_at_optimal_threshold():
    rng = np.random.default_rng(2)
    for _ in range(25):
        g = ScalarGaussian(float(rng.normal()), float(rng.uniform(0.3, 3.0)))
        costs = GameCosts(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.1, 2.0)))
        sym = ReprSymbols(float(rng.normal()), float(rng.normal()))
        phi = float(rng.uniform(0.0, 0.98))
        tilde = objective_tilde(g, costs, sym, phi)
        thresh = objective_with_threshold(g, costs, sym, costs.c / (1.0 - phi), phi)
        assert tilde == pytest.approx(thresh, rel=1e-13, abs=1e-13)
        # any other trigger can only raise the cost at fixed phi
        tau = costs.c / (1.0 - phi) * float(rng.uniform(0.4, 2.5))
        assert objective_with_threshold(g, costs, sym, tau, phi) >= tilde - 1e-12


def test_objective_tilde_nonconvex_in_symbols():
    # The clipped loss saturates at c far from the mean, so the cost bends
    # concave once x_hat0 leaves the bulk of the density: the chord between
    # widely spaced symbol choices dips below the midpoint value.
    costs = GameCosts(1.0, 1.0)
    phi = 0.5
    j_a = objective_tilde(STD, costs, ReprSymbols(0.0, 0.0), phi)
    j_b = objective_tilde(STD, costs, ReprSymbols(6.0, 0.0), phi)
    j_mid = objective_tilde(STD, costs, ReprSymbols(3.0, 0.0), phi)
    assert 0.5 * (j_a + j_b) < j_mid - 1e-6
    # curvature flips sign along the axis: convex near the mean, concave out
    h = 1e-4

    def g(x0):
        return objective_tilde(STD, costs, ReprSymbols(x0, 0.0), phi)

    assert g(0.5 + h) - 2.0 * g(0.5) + g(0.5 - h) > 0.0
    assert g(2.0 + h) - 2.0 * g(2.0) + g(2.0 - h) < 0.0


def test_objective_tilde_concave_in_phi():
    rng = np.random.default_rng(3)
    for _ in range(40):
        g = ScalarGaussian(0.0, float(rng.uniform(0.3, 3.0)))
        costs = GameCosts(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.1, 2.0)))
        sym = ReprSymbols(float(rng.normal()), float(rng.normal()))
        p1, p2 = sorted(rng.uniform(0.0, 1.0, size=2))
        mid = objective_tilde(STD, costs, sym, 0.5 * (p1 + p2))
        ends = 0.5 * (
            objective_tilde(STD, costs, sym, p1) + objective_tilde(STD, costs, sym, p2)
        )
        assert mid >= ends - 1e-12


def _random_instances(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        var = float(rng.uniform(0.3, 4.0))
        c = float(rng.uniform(0.2, 2.5))
        d = float(rng.uniform(0.05, 2.0) * var)
        out.append((ScalarGaussian(float(rng.normal()), var), GameCosts(c, d)))
    return out


def test_saddle_inequalities_random_instances():
    seen = set()
    for g, costs in _random_instances(8, 11):
        sad = solve_saddle(g, costs)
        seen.add(sad.case)
        rng = np.random.default_rng(17)
        # jammer side: no phi beats phi_star against the fixed equilibrium pair
        for phi in np.linspace(0.0, 1.0 - 1e-6, 100):
            fixed = objective_with_threshold(
                g, costs, sad.estimator, sad.threshold, phi
            )
            assert fixed <= sad.value + 1e-8
            if sad.case == INTERIOR_JAM:
                # the jammer is indifferent: the top is flat
                assert fixed == pytest.approx(sad.value, abs=1e-8)
            assert objective_tilde(g, costs, sad.estimator, phi) <= sad.value + 1e-8
        # coordinator side: perturbing symbols or trigger never helps
        for _ in range(20):
            sym = ReprSymbols(
                g.mean + float(rng.normal(scale=g.std)),
                g.mean + float(rng.normal(scale=g.std)),
            )
            tau = sad.threshold * float(rng.uniform(0.3, 3.0))
            probe = objective_with_threshold(g, costs, sym, tau, sad.phi_star)
            assert probe >= sad.value - 1e-8
    assert seen == {NO_JAM, INTERIOR_JAM}


def test_vector_isotropic_matches_scalar():
    costs = GameCosts(1.0, 0.5)
    vec = solve_saddle_vector(DiagonalGaussian(np.zeros(1), np.ones(1)), costs)
    assert vec.case == INTERIOR_JAM
    assert vec.phi_star == pytest.approx(PHI_TILDE_D_05, abs=1e-8)
    assert vec.value_std_err == 0.0
    scal = solve_saddle(STD, costs)
    assert vec.value == pytest.approx(scal.value, rel=1e-9)


def test_vector_isotropic_m5_and_no_jam():
    iso = DiagonalGaussian(np.zeros(5), np.full(5, 0.4))
    sad = solve_saddle_vector(iso, GameCosts(1.0, 1.0))
    assert sad.case == INTERIOR_JAM
    assert 0.0 < sad.phi_star < 1.0
    # condition residual is tiny on the exact path
    from jamgame.gaussian import norm_sq_tail_moment

    resid = norm_sq_tail_moment(iso, sad.threshold).value - 1.0
    assert abs(resid) <= 1e-9

    no_jam = solve_saddle_vector(
        DiagonalGaussian(np.zeros(3), np.ones(3)), GameCosts(1.0, 4.0)
    )
    assert no_jam.case == NO_JAM
    assert no_jam.phi_star == 0.0


def test_vector_mc_agrees_with_exact_on_isotropic():
    costs = GameCosts(1.0, 1.0)
    iso = DiagonalGaussian(np.zeros(5), np.full(5, 0.4))
    exact = solve_saddle_vector(iso, costs)
    mc = solve_saddle_vector(iso, costs, samples=300_000, seed=4, method="mc")
    assert mc.condition_std_err > 0.0
    assert abs(mc.phi_star - exact.phi_star) < 0.02
    assert abs(mc.value - exact.value) < 4.0 * max(mc.value_std_err, 1e-3)


def test_vector_mc_determinism_and_whitening():
    costs = GameCosts(1.0, 2.0)
    aniso = DiagonalGaussian(np.zeros(2), np.array([1.0, 3.0]))
    a = solve_saddle_vector(aniso, costs, samples=200_000, seed=8)
    b = solve_saddle_vector(aniso, costs, samples=200_000, seed=8)
    assert a.phi_star == b.phi_star and a.value == b.value
    corr = GeneralGaussian(
        np.array([1.0, -1.0]), np.array([[2.0, 1.0], [1.0, 2.0]])
    )
    c = solve_saddle_vector(corr, costs, samples=200_000, seed=8)
    # same eigenvalues {1, 3}: same equilibrium up to MC error
    assert abs(c.phi_star - a.phi_star) < 0.03
    assert np.allclose(c.estimator.x_hat0, corr.mean)
    assert np.allclose(c.estimator.x_hat1, corr.mean)
    assert c.threshold == pytest.approx(costs.c / (1.0 - c.phi_star), rel=1e-12)
