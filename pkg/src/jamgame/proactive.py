"""Saddle points of the point-to-point estimation game against a proactive jammer.

The jammer commits to a jam probability phi before seeing the channel.  For a
fixed phi the coordinator's best transmission rule is a threshold test on the
squared deviation from the no-transmission symbol, and both representation
symbols sit at the source mean.  The jammer's side of the saddle is determined
by the sign structure of the marginal value of jamming

    G(phi) = 2 int_{sqrt(c/(1-phi))}^inf x^2 f(x) dx - d

which is strictly decreasing with limit -d as phi -> 1.  If G(0) < 0 jamming
never pays and the equilibrium is the classic no-jammer threshold solution;
otherwise the equilibrium jam probability is the unique root of G, where the
jammer is indifferent over all phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .gaussian import (
    PHI_CEIL,
    DiagonalGaussian,
    GeneralGaussian,
    ScalarGaussian,
    clipped_sq_loss,
    interval_moments,
    norm_sq_tail_moment,
    sample,
    tail_second_moment,
    whiten,
)

NO_JAM = "no_jam"
INTERIOR_JAM = "interior_jam"

# Bisection targets: bracket width in phi, and residual |G(phi)|.
_PHI_TOL = 1e-12
_RESIDUAL_TOL = 1e-10


class NoInteriorRoot(ValueError):
    """The jammer's marginal value is negative already at phi = 0."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to meet its accuracy contract."""


@dataclass(frozen=True)
class GameCosts:
    """Communication price `c` and jamming price `d`, both positive."""

    c: float
    d: float

    def __post_init__(self):
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError(f"c must be positive and finite, got {self.c}")
        if not (self.d > 0.0 and math.isfinite(self.d)):
            raise ValueError(f"d must be positive and finite, got {self.d}")


@dataclass(frozen=True, eq=False)
class ReprSymbols:
    """Representation pair: x_hat0 when silent, x_hat1 when the channel is lost."""

    x_hat0: np.ndarray
    x_hat1: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.x_hat0, dtype=float))
        b = np.atleast_1d(np.asarray(self.x_hat1, dtype=float))
        if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
            raise ValueError("x_hat0 and x_hat1 must be 1-D of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("symbols must be finite")
        object.__setattr__(self, "x_hat0", a)
        object.__setattr__(self, "x_hat1", b)

    @property
    def dim(self) -> int:
        return self.x_hat0.size

    def scalars(self) -> tuple[float, float]:
        if self.dim != 1:
            raise ValueError("symbols are not scalar")
        return float(self.x_hat0[0]), float(self.x_hat1[0])


@dataclass(frozen=True, eq=False)
class ProactiveSaddle:
    """Equilibrium summary of the proactive point-to-point game.

    `threshold` is the squared-deviation trigger: transmit iff
    (x - x_hat0)^2 > threshold, equal to c / (1 - phi_star).  Standard errors
    are zero on exact solve paths and populated by the Monte Carlo vector path.
    """

    case: str
    phi_star: float
    threshold: float
    estimator: ReprSymbols
    value: float
    value_std_err: float = 0.0
    condition_std_err: float = 0.0


def jammer_marginal(source: ScalarGaussian, costs: GameCosts, phi: float) -> float:
    """G(phi), the jammer's marginal value of raising phi at the best response."""
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    phi_eff = min(phi, PHI_CEIL)
    t = math.sqrt(costs.c / (1.0 - phi_eff))
    return 2.0 * tail_second_moment(source.centered(), t) - costs.d


def solve_phi_tilde(source: ScalarGaussian, costs: GameCosts) -> float:
    """Unique root of G on [0, 1); raises NoInteriorRoot when G(0) < 0."""
    g0 = jammer_marginal(source, costs, 0.0)
    if g0 < 0.0:
        raise NoInteriorRoot(
            f"G(0) = {g0:.6g} < 0: jamming never pays at these costs"
        )
    if g0 == 0.0:
        return 0.0
    lo, hi = 0.0, PHI_CEIL
    if jammer_marginal(source, costs, hi) >= 0.0:  # pragma: no cover - G(hi) ~ -d
        raise ConvergenceError("no sign change on [0, 1 - 1e-9]")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = jammer_marginal(source, costs, mid)
        if g > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _PHI_TOL and abs(g) <= _RESIDUAL_TOL:
            return mid
    raise ConvergenceError(
        f"bisection stalled: width {hi - lo:.3e}, "
        f"residual {jammer_marginal(source, costs, mid):.3e}"
    )


def objective_tilde(
    source: ScalarGaussian, costs: GameCosts, symbols: ReprSymbols, phi: float
) -> float:
    """Game value with the transmission rule already optimized for (symbols, phi).

    E[min((1 - phi)(X - x_hat0)^2, c)] + phi (E[(X - x_hat1)^2] - d).
    """
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    x0, x1 = symbols.scalars()
    clipped = clipped_sq_loss(source, x0, costs.c, phi, allow_degenerate=True)
    mse1 = source.var + (source.mean - x1) ** 2
    return clipped + phi * (mse1 - costs.d)


def objective_with_threshold(
    source: ScalarGaussian,
    costs: GameCosts,
    symbols: ReprSymbols,
    threshold: float,
    phi: float,
) -> float:
    """Game value for an arbitrary squared-deviation trigger.

    The sensor transmits iff (x - x_hat0)^2 > threshold; nothing here is
    optimized, which makes this the right probe for saddle inequalities.
    """
    if threshold < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    x0, x1 = symbols.scalars()
    half_width = math.sqrt(threshold)
    p_in, m1, m2 = interval_moments(source, x0 - half_width, x0 + half_width)
    inside = m2 - 2.0 * x0 * m1 + x0 * x0 * p_in
    mse1 = source.var + (source.mean - x1) ** 2
    return (1.0 - phi) * inside + costs.c * (1.0 - p_in) + phi * (mse1 - costs.d)


def solve_saddle(source: ScalarGaussian, costs: GameCosts) -> ProactiveSaddle:
    """Scalar saddle point: symbols at the mean, jam level from the root of G.

    G(0) = 0 counts as the interior case with phi_star = 0; the two labels
    coincide in value there and differ only in how the tie is reported.
    """
    g0 = jammer_marginal(source, costs, 0.0)
    if g0 < 0.0:
        case, phi_star = NO_JAM, 0.0
    else:
        case, phi_star = INTERIOR_JAM, solve_phi_tilde(source, costs)
    estimator = ReprSymbols(source.mean, source.mean)
    threshold = costs.c / (1.0 - phi_star)
    value = objective_tilde(source, costs, estimator, phi_star)
    return ProactiveSaddle(case, phi_star, threshold, estimator, value)


def _vector_value(
    diag0: DiagonalGaussian, costs: GameCosts, phi: float, sq: np.ndarray | None
) -> tuple[float, float]:
    """(E[min((1-phi)||X||^2, c)] + phi (tr - d), std err) for a centered model."""
    trace = float(diag0.variances.sum())
    phi_eff = min(phi, PHI_CEIL)
    r = costs.c / (1.0 - phi_eff)
    if sq is None:
        # isotropic: E[||X||^2 1(||X||^2 <= r)] through the chi-square identity
        tail = norm_sq_tail_moment(diag0, r).value
        v = float(diag0.variances[0])
        p_over = float(stats.chi2.sf(r / v, diag0.dim))
        clipped = (1.0 - phi_eff) * (trace - tail) + costs.c * p_over
        return clipped + phi * (trace - costs.d), 0.0
    vals = np.where(sq > r, costs.c, (1.0 - phi_eff) * sq)
    est = float(vals.mean()) + phi * (trace - costs.d)
    se = float(vals.std(ddof=1) / math.sqrt(sq.size))
    return est, se


def solve_saddle_vector(
    source,
    costs: GameCosts,
    samples: int = 400_000,
    seed: int = 0,
    method: str = "auto",
) -> ProactiveSaddle:
    """Vector saddle point; transmit iff ||x - mean||^2 > threshold.

    The rotation to independent coordinates never changes the deviation norm,
    so a correlated model is first whitened and the equilibrium condition

        E[||X - mean||^2 1(||X - mean||^2 > c/(1-phi))] = d

    is solved in eigencoordinates: exactly (chi-square) for isotropic models,
    by bisection over a fixed common-random-number sample otherwise.  The MC
    root is accepted only when |condition| <= 3 standard errors.
    """
    if isinstance(source, GeneralGaussian):
        diag, _ = whiten(source)
        mean = source.mean
    elif isinstance(source, DiagonalGaussian):
        diag, mean = source, source.mean
    else:
        raise TypeError("solve_saddle_vector expects a vector source")
    if method not in ("auto", "mc"):
        raise ValueError(f"unknown method {method!r}")
    diag0 = diag.centered()
    exact = diag0.is_isotropic and method == "auto"
    if exact:
        sq = None

        def condition(phi: float) -> tuple[float, float]:
            r = costs.c / (1.0 - min(phi, PHI_CEIL))
            return norm_sq_tail_moment(diag0, r).value - costs.d, 0.0

    else:
        draws = sample(diag0, seed, samples)
        sq = np.einsum("ij,ij->i", draws, draws)

        def condition(phi: float) -> tuple[float, float]:
            r = costs.c / (1.0 - min(phi, PHI_CEIL))
            vals = np.where(sq > r, sq, 0.0)
            return (
                float(vals.mean()) - costs.d,
                float(vals.std(ddof=1) / math.sqrt(sq.size)),
            )

    g0, _ = condition(0.0)
    if g0 < 0.0:
        case, phi_star, cond_se = NO_JAM, 0.0, 0.0
    else:
        case = INTERIOR_JAM
        lo, hi = 0.0, PHI_CEIL
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            g, _ = condition(mid)
            if g > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= _PHI_TOL:
                break
        phi_star = 0.5 * (lo + hi)
        resid, cond_se = condition(phi_star)
        if exact:
            if abs(resid) > _RESIDUAL_TOL:
                raise ConvergenceError(f"equilibrium residual {resid:.3e}")
        elif abs(resid) > 3.0 * cond_se:
            raise ConvergenceError(
                f"MC equilibrium residual {resid:.3e} exceeds 3 x {cond_se:.3e}; "
                "increase samples"
            )
    value, value_se = _vector_value(diag0, costs, phi_star, sq)
    estimator = ReprSymbols(mean, mean)
    threshold = costs.c / (1.0 - phi_star)
    return ProactiveSaddle(
        case, phi_star, threshold, estimator, value, value_se, cond_se
    )
