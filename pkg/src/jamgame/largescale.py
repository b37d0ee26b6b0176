"""Saddle point of the infinite-sensor estimation game under a capacity cap.

With countably many sensors sharing a channel that carries a fraction
kappa_bar of simultaneous packets, the per-sensor threshold policy couples to
the population only through the capacity constraint P(transmit) <= kappa_bar.
Dualizing that constraint with a multiplier lam gives the Lagrangian

    L(phi, lam) = phi (var - d) + E[min{(1 - phi) Z^2, c + lam}] - lam kappa_bar

over the centered deviation Z = X - mean, whose saddle reduces to two scalar
thresholds:

    l_lambda: 2 P(Z > sqrt(l)) = kappa_bar   (capacity binds exactly)
    l_phi:    2 E[Z^2 1(Z > sqrt(l))] = d    (jammer indifferent)

The equilibrium falls into six cases depending on whether the unconstrained
threshold c violates the capacity gate, the jamming gate, or both; in the
doubly-tied case the optimal jam probability is a whole interval and the
Lagrangian is constant along the curve (c + lam)/(1 - phi) = l.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .gaussian import (
    ScalarGaussian,
    clipped_sq_loss,
    interval_moments,
    tail_prob,
    tail_second_moment,
)
from .proactive import GameCosts, ReprSymbols

# ties on the case gates resolve toward the ">=" branch
_GATE_TOL = 1e-10
_ROOT_TOL = 1e-10
_SLACK_TOL = 1e-8


@dataclass(frozen=True)
class CapacityFraction:
    """Fraction of simultaneous packets the channel carries, in (0, 1)."""

    kappa_bar: float

    def __post_init__(self):
        if not (0.0 < self.kappa_bar < 1.0):
            raise ValueError(
                f"kappa_bar must lie in (0, 1), got {self.kappa_bar}"
            )


def _kappa(kappa_bar) -> float:
    if isinstance(kappa_bar, CapacityFraction):
        return kappa_bar.kappa_bar
    return CapacityFraction(float(kappa_bar)).kappa_bar


@dataclass(frozen=True, eq=False)
class LargeScaleSaddle:
    """Closed-form equilibrium of the infinite-sensor game.

    `phi_star` is a single representative jam probability; in case C4a the
    optimum is the whole closed interval `phi_star_interval` (the Lagrangian
    is flat along it) and the representative is its left endpoint 0 with
    `lambda_star` the multiplier induced at that endpoint.
    """

    case_id: str
    threshold: float
    phi_star: float
    lambda_star: float
    transmit_prob: float
    value: float
    estimator: ReprSymbols
    phi_star_interval: tuple[float, float] | None = None


def solve_l_lambda(source: ScalarGaussian, kappa_bar) -> float:
    """Squared trigger at which the transmit probability equals kappa_bar.

    2 P(Z > sqrt(l)) = kappa_bar for the centered deviation Z, so
    l = (sigma Q^{-1}(kappa_bar / 2))^2 with Q the standard normal tail.
    """
    kb = _kappa(kappa_bar)
    z = special.ndtri(1.0 - 0.5 * kb)
    return source.var * z * z


def solve_l_phi(source: ScalarGaussian, costs: GameCosts) -> float:
    """Squared trigger at which the jammer is indifferent.

    Root of 2 E[Z^2 1(Z > sqrt(l))] = d.  For d >= var the tail second
    moment cannot reach d/2 at any positive trigger; the boundary solution
    l = 0 is returned with a warning.
    """
    centered = source.centered()
    d = costs.d
    if d >= source.var:
        warnings.warn(
            "jamming cost d >= source variance: the indifference threshold "
            "degenerates to 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0

    def residual(l: float) -> float:
        return 2.0 * tail_second_moment(centered, math.sqrt(l)) - d

    lo, hi = 1e-12, 50.0 * source.var
    while residual(hi) > 0.0:
        hi *= 4.0
    while residual(lo) < 0.0:
        lo *= 0.25
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    root = 0.5 * (lo + hi)
    assert abs(residual(root)) <= _ROOT_TOL
    return root


def lagrangian_value(
    source: ScalarGaussian, costs: GameCosts, kappa_bar, phi: float, lam: float
) -> float:
    """phi (var - d) + E[min{(1 - phi) Z^2, c + lam}] - lam kappa_bar."""
    kb = _kappa(kappa_bar)
    if not (0.0 <= phi < 1.0):
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    centered = source.centered()
    clipped = clipped_sq_loss(centered, 0.0, costs.c + lam, phi)
    return phi * (source.var - costs.d) + clipped - lam * kb


def classify_and_solve(
    source: ScalarGaussian, costs: GameCosts, kappa_bar
) -> LargeScaleSaddle:
    """Resolve the six-case equilibrium from the two gates at threshold c.

    Gate A: transmit probability at trigger c exceeds capacity
    (tail_prob(sqrt(c)) >= kappa_bar/2).  Gate B: jamming pays at trigger c
    (tail_second_moment(sqrt(c)) >= d/2).  Neither: C1 (trigger c).  A only:
    C2 (capacity binds at l_lambda).  B only: C3 (jammer indifferent at
    l_phi).  Both: compare the two triggers - the larger constraint wins
    (C4b/C4c), and an exact tie C4a makes every phi in [0, 1 - c/l] optimal.
    """
    kb = _kappa(kappa_bar)
    centered = source.centered()
    c, d = costs.c, costs.d
    sqrt_c = math.sqrt(c)
    gate_cap = tail_prob(centered, sqrt_c) >= 0.5 * kb - _GATE_TOL
    gate_jam = tail_second_moment(centered, sqrt_c) >= 0.5 * d - _GATE_TOL

    estimator = ReprSymbols(source.mean, source.mean)
    interval = None
    if not gate_cap and not gate_jam:
        case, threshold, phi_star, lam_star = "C1", c, 0.0, 0.0
    elif gate_cap and not gate_jam:
        threshold = solve_l_lambda(source, kb)
        case, phi_star, lam_star = "C2", 0.0, max(0.0, threshold - c)
    elif gate_jam and not gate_cap:
        threshold = solve_l_phi(source, costs)
        case, phi_star, lam_star = "C3", max(0.0, 1.0 - c / threshold), 0.0
    else:
        l_lam = solve_l_lambda(source, kb)
        l_phi = solve_l_phi(source, costs)
        if abs(l_lam - l_phi) <= 1e-8 * max(1.0, l_lam):
            case, threshold = "C4a", l_lam
            phi_star, lam_star = 0.0, max(0.0, threshold - c)
            interval = (0.0, max(0.0, 1.0 - c / l_phi))
        elif l_lam > l_phi:
            case, threshold = "C4b", l_lam
            phi_star, lam_star = 0.0, max(0.0, threshold - c)
        else:
            case, threshold = "C4c", l_phi
            phi_star, lam_star = max(0.0, 1.0 - c / threshold), 0.0

    transmit_prob = 2.0 * tail_prob(centered, math.sqrt(threshold))
    value = lagrangian_value(source, costs, kb, phi_star, lam_star)
    return LargeScaleSaddle(
        case_id=case,
        threshold=threshold,
        phi_star=phi_star,
        lambda_star=lam_star,
        transmit_prob=transmit_prob,
        value=value,
        estimator=estimator,
        phi_star_interval=interval,
    )


def asymptotic_objective(
    source: ScalarGaussian,
    costs: GameCosts,
    kappa_bar,
    transmit_threshold: float,
    symbols: ReprSymbols,
    phi: float,
) -> float:
    """Limiting per-sensor cost of a homogeneous threshold policy.

    The sensor transmits when (X - x_hat0)^2 exceeds `transmit_threshold`.
    While the population transmit probability stays within capacity no
    intrinsic collisions occur and the cost is the point-to-point form;
    beyond capacity every transmission collides, so all estimates fall back
    to the collision symbol:

        E[(X - x_hat1)^2] + c P(transmit) - d phi.
    """
    kb = _kappa(kappa_bar)
    if not (0.0 <= phi < 1.0):
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    if transmit_threshold < 0.0:
        raise ValueError("transmit_threshold must be nonnegative")
    x0, x1 = symbols.scalars()
    half_width = math.sqrt(transmit_threshold)
    p_in, m1, m2 = interval_moments(source, x0 - half_width, x0 + half_width)
    p_tx = 1.0 - p_in
    err_collision = source.var + (source.mean - x1) ** 2
    # the exactly-binding boundary is collision-free; the tolerance absorbs
    # round-trip error when the threshold was solved from kappa_bar itself
    if p_tx <= kb + 1e-9:
        inside = m2 - 2.0 * x0 * m1 + x0 * x0 * p_in
        return (
            (1.0 - phi) * inside
            + costs.c * p_tx
            + phi * (err_collision - costs.d)
        )
    return err_collision + costs.c * p_tx - costs.d * phi
