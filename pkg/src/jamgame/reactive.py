"""First-order equilibria of the estimation game against a channel-sensing jammer.

The jammer observes whether the channel is occupied and jams with probability
alpha when idle and beta when occupied.  With the best transmission rule
substituted, the coordinator minimizes and the jammer maximizes

    J(xhat, (alpha, beta)) = E[ min{ beta ||X - xhat1||^2 + c - d beta,
                                     alpha ||X - xhat1||^2
                                     + (1 - alpha) ||X - xhat0||^2 - d alpha } ]

which is nonconvex in the symbol pair and concave in the jam probabilities.
The solver of choice alternates projected gradient ascent for the jammer with
a convex-concave-procedure step for the symbols; the certificate is the
first-order Nash index

    max{ ||grad_xhat J||_2,  max_{p in [0,1]^2} <grad_phi J, p - phi> }

whose second term is a box LP solved componentwise in closed form.  A plain
simultaneous gradient-descent-ascent loop is included as the baseline.

Scalar sources evaluate everything exactly through truncated Gaussian
moments.  Vector sources use Monte Carlo over a common-random-number sample
set frozen per solve, which keeps the convex-concave steps monotone and the
traces bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gaussian import (
    DiagonalGaussian,
    GeneralGaussian,
    ScalarGaussian,
    interval_moments,
    philox_rng,
    sample,
)
from .proactive import GameCosts, ReprSymbols

_FULL_LINE = ((-math.inf, math.inf),)


@dataclass(frozen=True)
class ReactivePolicy:
    """Jam probabilities: `alpha` on an idle channel, `beta` on an occupied one."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name, v in (("alpha", self.alpha), ("beta", self.beta)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


def project_box(candidate) -> ReactivePolicy:
    """Clamp a real pair onto [0,1]^2, the jammer's feasible set."""
    a, b = float(candidate[0]), float(candidate[1])
    return ReactivePolicy(min(max(a, 0.0), 1.0), min(max(b, 0.0), 1.0))


@dataclass(frozen=True, eq=False)
class TransmitRegion:
    """The set {x : q(x) > 0} where the sensor prefers to transmit.

    q(x) = (alpha - beta) ||x - xhat1||^2 + (1 - alpha) ||x - xhat0||^2
           - c - d (alpha - beta).

    For scalar symbols the region is a union of at most two open intervals,
    stored sorted and disjoint in `intervals`.  For vector symbols only the
    predicate `contains` is available.  A quadratic tangent to zero from
    above is reported as the full line; the single non-transmitting point has
    measure zero.
    """

    symbols: ReprSymbols
    policy: ReactivePolicy
    costs: GameCosts
    intervals: tuple[tuple[float, float], ...] | None

    @property
    def dim(self) -> int:
        return self.symbols.dim

    def q(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x) if self.dim > 1 else np.atleast_1d(x)[..., None]
        a, b = self.policy.alpha, self.policy.beta
        d1 = pts - self.symbols.x_hat1
        d0 = pts - self.symbols.x_hat0
        val = (
            (a - b) * np.einsum("ij,ij->i", d1, d1)
            + (1.0 - a) * np.einsum("ij,ij->i", d0, d0)
            - self.costs.c
            - self.costs.d * (a - b)
        )
        return val if np.ndim(x) > (1 if self.dim > 1 else 0) else float(val[0])

    def contains(self, x) -> bool:
        if self.intervals is not None and self.dim == 1:
            xf = float(x)
            return any(lo < xf < hi for lo, hi in self.intervals)
        return bool(self.q(x) > 0.0)

    def complement_intervals(self) -> tuple[tuple[float, float], ...]:
        if self.intervals is None:
            raise ValueError("interval form is only available for scalar symbols")
        edges = [-math.inf]
        for lo, hi in self.intervals:
            edges.extend((lo, hi))
        edges.append(math.inf)
        out = []
        for lo, hi in zip(edges[::2], edges[1::2]):
            if lo < hi:
                out.append((lo, hi))
        return tuple(out)


def transmit_region(
    symbols: ReprSymbols, policy: ReactivePolicy, costs: GameCosts
) -> TransmitRegion:
    """Solve the transmit/stay-silent comparison into an explicit region."""
    if symbols.dim != 1:
        return TransmitRegion(symbols, policy, costs, None)
    a, b = policy.alpha, policy.beta
    x0, x1 = symbols.scalars()
    # q(x) = qa x^2 + qb x + qc
    qa = 1.0 - b
    qb = -2.0 * ((a - b) * x1 + (1.0 - a) * x0)
    qc = (a - b) * x1 * x1 + (1.0 - a) * x0 * x0 - costs.c - costs.d * (a - b)
    if qa == 0.0:
        if qb == 0.0:
            intervals = _FULL_LINE if qc > 0.0 else ()
        elif qb > 0.0:
            intervals = ((-qc / qb, math.inf),)
        else:
            intervals = ((-math.inf, -qc / qb),)
        return TransmitRegion(symbols, policy, costs, intervals)
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        # qa > 0 here, so the parabola never dips below zero
        return TransmitRegion(symbols, policy, costs, _FULL_LINE)
    s = -0.5 * (qb + math.copysign(math.sqrt(disc), qb if qb != 0.0 else 1.0))
    r1, r2 = sorted((s / qa, qc / s))
    return TransmitRegion(
        symbols, policy, costs, ((-math.inf, r1), (r2, math.inf))
    )


def _quad_expectation(source: ScalarGaussian, coeffs, intervals) -> float:
    """E[(a2 X^2 + a1 X + a0) 1(X in union of intervals)] exactly."""
    a2, a1, a0 = coeffs
    total = 0.0
    for lo, hi in intervals:
        p, m1, m2 = interval_moments(source, lo, hi)
        total += a2 * m2 + a1 * m1 + a0 * p
    return total


def _region_moments(source, intervals):
    p = m1 = 0.0
    for lo, hi in intervals:
        pi, m1i, _ = interval_moments(source, lo, hi)
        p += pi
        m1 += m1i
    return p, m1


def box_lp_gap(grad: np.ndarray, point: np.ndarray) -> float:
    """max over p in [0,1]^len of <grad, p - point>, solved per component."""
    grad = np.asarray(grad, dtype=float)
    point = np.asarray(point, dtype=float)
    return float(
        np.sum(np.maximum(grad * (0.0 - point), grad * (1.0 - point)))
    )


class ExactScalarModel:
    """Closed-form objective, gradients and convex-concave pieces for scalars.

    All expectations are truncated Gaussian moments over the transmit region
    and its complement, so every method is deterministic with zero standard
    error (returned for interface parity with the Monte Carlo model).
    """

    def __init__(self, source: ScalarGaussian, costs: GameCosts):
        self.source = source
        self.costs = costs
        self.mean = np.array([source.mean])

    def _pieces(self, symbols, policy):
        region = transmit_region(symbols, policy, self.costs)
        t_ivals = region.intervals
        n_ivals = region.complement_intervals()
        return t_ivals, n_ivals

    def _coeffs(self, symbols, policy):
        a, b = policy.alpha, policy.beta
        x0, x1 = symbols.scalars()
        c, d = self.costs.c, self.costs.d
        f_t = (b, -2.0 * b * x1, b * x1 * x1 + c - d * b)
        f_nt = (
            1.0,
            -2.0 * (a * x1 + (1.0 - a) * x0),
            a * x1 * x1 + (1.0 - a) * x0 * x0 - d * a,
        )
        return f_t, f_nt

    def objective(self, symbols, policy):
        t_ivals, n_ivals = self._pieces(symbols, policy)
        f_t, f_nt = self._coeffs(symbols, policy)
        value = _quad_expectation(self.source, f_t, t_ivals) + _quad_expectation(
            self.source, f_nt, n_ivals
        )
        return value, 0.0

    def dc_concave_part(self, symbols, policy):
        """G = E[max{...}]: the same two quadratics on swapped regions."""
        t_ivals, n_ivals = self._pieces(symbols, policy)
        f_t, f_nt = self._coeffs(symbols, policy)
        value = _quad_expectation(self.source, f_t, n_ivals) + _quad_expectation(
            self.source, f_nt, t_ivals
        )
        return value, 0.0

    def grad_xhat(self, symbols, policy):
        a, b = policy.alpha, policy.beta
        x0, x1 = symbols.scalars()
        t_ivals, n_ivals = self._pieces(symbols, policy)
        p_t, m1_t = _region_moments(self.source, t_ivals)
        p_n, m1_n = _region_moments(self.source, n_ivals)
        g0 = -2.0 * (1.0 - a) * (m1_n - x0 * p_n)
        g1 = -2.0 * b * (m1_t - x1 * p_t) - 2.0 * a * (m1_n - x1 * p_n)
        return np.array([g0, g1]), np.zeros(2)

    def grad_phi(self, symbols, policy):
        x0, x1 = symbols.scalars()
        d = self.costs.d
        t_ivals, n_ivals = self._pieces(symbols, policy)
        g_alpha = _quad_expectation(
            self.source,
            (0.0, 2.0 * (x0 - x1), x1 * x1 - x0 * x0 - d),
            n_ivals,
        )
        g_beta = _quad_expectation(
            self.source, (1.0, -2.0 * x1, x1 * x1 - d), t_ivals
        )
        return np.array([g_alpha, g_beta]), np.zeros(2)

    def ccp_g(self, symbols, policy):
        """Gradient of the concave part G, gating each block on the region
        where its quadratic is the larger branch."""
        a, b = policy.alpha, policy.beta
        x0, x1 = symbols.scalars()
        t_ivals, n_ivals = self._pieces(symbols, policy)
        p_t, m1_t = _region_moments(self.source, t_ivals)
        p_n, m1_n = _region_moments(self.source, n_ivals)
        g0 = -2.0 * (1.0 - a) * (m1_t - x0 * p_t)
        g1 = -2.0 * b * (m1_n - x1 * p_n) - 2.0 * a * (m1_t - x1 * p_t)
        return np.array([g0, g1])

    def ccp_update(self, symbols, policy):
        g = self.ccp_g(symbols, policy)
        return _apply_ccp_inverse(g, policy, self.mean)

    def fne_index(self, symbols, policy):
        gx, _ = self.grad_xhat(symbols, policy)
        gp, _ = self.grad_phi(symbols, policy)
        idx = max(
            float(np.linalg.norm(gx)), box_lp_gap(gp, policy.as_array())
        )
        return idx, 0.0


class McVectorModel:
    """Monte Carlo twin of ExactScalarModel over a frozen sample set.

    The same draws back every expectation for the lifetime of the model
    (common random numbers), so solver trajectories are deterministic given
    (seed, samples) and the convex-concave descent argument applies to the
    sampled objective exactly.
    """

    def __init__(self, source, costs: GameCosts, samples: int = 10_000, seed: int = 0):
        if isinstance(source, ScalarGaussian):
            raise TypeError("use ExactScalarModel for scalar sources")
        if samples < 2:
            raise ValueError("samples must be at least 2")
        self.costs = costs
        self.mean = np.asarray(source.mean, dtype=float)
        self.draws = sample(source, seed, samples)
        self.n = samples

    def _parts(self, symbols, policy):
        a, b = policy.alpha, policy.beta
        c, d = self.costs.c, self.costs.d
        dev0 = self.draws - symbols.x_hat0
        dev1 = self.draws - symbols.x_hat1
        sq0 = np.einsum("ij,ij->i", dev0, dev0)
        sq1 = np.einsum("ij,ij->i", dev1, dev1)
        f_t = b * sq1 + c - d * b
        f_nt = a * sq1 + (1.0 - a) * sq0 - d * a
        transmit = f_nt - f_t > 0.0
        return dev0, dev1, sq0, sq1, f_t, f_nt, transmit

    @staticmethod
    def _mean_se(values: np.ndarray):
        mean = values.mean(axis=0)
        se = values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
        return mean, se

    def objective(self, symbols, policy):
        *_, f_t, f_nt, transmit = self._parts(symbols, policy)
        vals = np.where(transmit, f_t, f_nt)
        mean, se = self._mean_se(vals)
        return float(mean), float(se)

    def dc_concave_part(self, symbols, policy):
        *_, f_t, f_nt, transmit = self._parts(symbols, policy)
        vals = np.where(transmit, f_nt, f_t)
        mean, se = self._mean_se(vals)
        return float(mean), float(se)

    def grad_xhat(self, symbols, policy):
        a, b = policy.alpha, policy.beta
        dev0, dev1, *_, transmit = self._parts(symbols, policy)
        silent = ~transmit
        block0 = -2.0 * (1.0 - a) * dev0 * silent[:, None]
        block1 = -2.0 * b * dev1 * transmit[:, None] - 2.0 * a * dev1 * silent[:, None]
        mean, se = self._mean_se(np.hstack([block0, block1]))
        return mean, se

    def grad_phi(self, symbols, policy):
        d = self.costs.d
        _, _, sq0, sq1, _, _, transmit = self._parts(symbols, policy)
        silent = ~transmit
        per = np.column_stack([(sq1 - sq0 - d) * silent, (sq1 - d) * transmit])
        mean, se = self._mean_se(per)
        return mean, se

    def ccp_g(self, symbols, policy):
        a, b = policy.alpha, policy.beta
        dev0, dev1, *_, transmit = self._parts(symbols, policy)
        silent = ~transmit
        block0 = -2.0 * (1.0 - a) * dev0 * transmit[:, None]
        block1 = -2.0 * b * dev1 * silent[:, None] - 2.0 * a * dev1 * transmit[:, None]
        return np.hstack([block0, block1]).mean(axis=0)

    def ccp_update(self, symbols, policy):
        g = self.ccp_g(symbols, policy)
        return _apply_ccp_inverse(g, policy, self.mean)

    def fne_index(self, symbols, policy):
        gx, gx_se = self.grad_xhat(symbols, policy)
        gp, gp_se = self.grad_phi(symbols, policy)
        idx = max(float(np.linalg.norm(gx)), box_lp_gap(gp, policy.as_array()))
        # conservative: the index is a max of two statistics whose spreads are
        # bounded by the rms of their component standard errors
        se = max(float(np.linalg.norm(gx_se)), float(np.linalg.norm(gp_se)))
        return idx, se


def _apply_ccp_inverse(g: np.ndarray, policy: ReactivePolicy, mean: np.ndarray):
    """x_new = pinv(diag(2(1-alpha) I, 2(alpha+beta) I)) g + (mean, mean).

    A zero diagonal block has an all-zero pseudo-inverse block, which parks
    the corresponding symbol at the mean: the quadratic part of the convex
    component is flat there and the mean is its unconstrained minimizer.
    """
    m = mean.size
    g0, g1 = g[:m], g[m:]
    a0 = 2.0 * (1.0 - policy.alpha)
    a1 = 2.0 * (policy.alpha + policy.beta)
    x0 = mean + g0 / a0 if a0 != 0.0 else mean.copy()
    x1 = mean + g1 / a1 if a1 != 0.0 else mean.copy()
    return ReprSymbols(x0, x1)


# -- module-level exact ops (scalar sources) ---------------------------------

def _exact(source, costs) -> ExactScalarModel:
    if not isinstance(source, ScalarGaussian):
        raise TypeError(
            "closed-form ops take scalar sources; build McVectorModel for vectors"
        )
    return ExactScalarModel(source, costs)


def objective(source, costs, symbols, policy) -> float:
    """Exact game value for a scalar source."""
    return _exact(source, costs).objective(symbols, policy)[0]


def grad_xhat(source, costs, symbols, policy) -> np.ndarray:
    """Exact subgradient in the symbol pair (length 2)."""
    return _exact(source, costs).grad_xhat(symbols, policy)[0]


def grad_phi(source, costs, symbols, policy) -> np.ndarray:
    """Exact subgradient in (alpha, beta)."""
    return _exact(source, costs).grad_phi(symbols, policy)[0]


def ccp_update(source, costs, symbols, policy) -> ReprSymbols:
    """One convex-concave-procedure step on the symbols at a fixed policy."""
    return _exact(source, costs).ccp_update(symbols, policy)


def fne_index(source, costs, symbols, policy) -> float:
    """First-order Nash certificate at a point (0 at an exact equilibrium)."""
    return _exact(source, costs).fne_index(symbols, policy)[0]


# -- solvers -----------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by the two solvers; defaults follow the reference runs."""

    epsilon: float = 1e-5
    max_iters: int = 5000
    pga_step: float = 0.1
    pga_step_rule: str = "constant"  # or "inv_sqrt" for step/sqrt(k)
    gd_step: float = 0.01
    mc_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.pga_step <= 0.0 or self.gd_step <= 0.0:
            raise ValueError("step sizes must be positive")
        if self.pga_step_rule not in ("constant", "inv_sqrt"):
            raise ValueError(f"unknown pga_step_rule {self.pga_step_rule!r}")
        if self.mc_samples < 2:
            raise ValueError("mc_samples must be at least 2")


@dataclass(frozen=True, eq=False)
class TraceRow:
    iteration: int
    fne_index: float
    fne_std_err: float
    objective: float
    alpha: float
    beta: float
    x_hat0: np.ndarray
    x_hat1: np.ndarray


@dataclass(frozen=True, eq=False)
class FneReport:
    """Outcome of one solver run, with the full per-iteration trace."""

    symbols: ReprSymbols
    policy: ReactivePolicy
    fne_index: float
    fne_std_err: float
    iterations: int
    converged: bool
    trace: tuple[TraceRow, ...]

    def iterations_to(self, threshold: float, slack_ses: float = 0.0) -> int | None:
        """First iteration whose index is <= threshold (+ slack_ses * SE)."""
        for row in self.trace:
            if row.fne_index <= threshold + slack_ses * row.fne_std_err:
                return row.iteration
        return None


def _build_model(source, costs, config: SolverConfig):
    if isinstance(source, ScalarGaussian):
        return ExactScalarModel(source, costs)
    if isinstance(source, (DiagonalGaussian, GeneralGaussian)):
        return McVectorModel(source, costs, config.mc_samples, config.seed)
    raise TypeError(f"unsupported source type {type(source).__name__}")


def _source_moments(source):
    if isinstance(source, ScalarGaussian):
        return np.array([source.mean]), np.array([source.std])
    if isinstance(source, DiagonalGaussian):
        return source.mean.copy(), np.sqrt(source.variances)
    return source.mean.copy(), np.sqrt(np.diag(source.covariance))


def default_init(source) -> tuple[ReprSymbols, ReactivePolicy]:
    """Symbols at the mean with a symmetry-breaking 0.1 sigma offset on the
    silent symbol; jam probabilities at the center of the box."""
    mean, std = _source_moments(source)
    return ReprSymbols(mean + 0.1 * std, mean), ReactivePolicy(0.5, 0.5)


def random_init(source, seed: int) -> tuple[ReprSymbols, ReactivePolicy]:
    """Seeded random start: symbols drawn at source scale, policy uniform."""
    mean, std = _source_moments(source)
    rng = philox_rng(seed, 1)
    symbols = ReprSymbols(
        mean + std * rng.standard_normal(mean.size),
        mean + std * rng.standard_normal(mean.size),
    )
    a, b = rng.uniform(0.0, 1.0, size=2)
    return symbols, ReactivePolicy(float(a), float(b))


def _resolve_init(source, config, init):
    if init is None:
        return default_init(source)
    if init == "random":
        return random_init(source, config.seed)
    symbols, policy = init
    return symbols, policy


def _step(config: SolverConfig, k: int) -> float:
    if config.pga_step_rule == "inv_sqrt":
        return config.pga_step / math.sqrt(k)
    return config.pga_step


def _run(source, costs, config, init, update):
    model = _build_model(source, costs, config)
    symbols, policy = _resolve_init(source, config, init)
    trace = []
    converged = False
    for k in range(1, config.max_iters + 1):
        symbols, policy = update(model, symbols, policy, _step(config, k))
        idx, idx_se = model.fne_index(symbols, policy)
        obj, _ = model.objective(symbols, policy)
        trace.append(
            TraceRow(
                k, idx, idx_se, obj,
                policy.alpha, policy.beta,
                symbols.x_hat0.copy(), symbols.x_hat1.copy(),
            )
        )
        if idx <= config.epsilon + 3.0 * idx_se:
            converged = True
            break
    return FneReport(
        symbols, policy, idx, idx_se, len(trace), converged, tuple(trace)
    )


def solve_pga_ccp(source, costs, config: SolverConfig | None = None, init=None) -> FneReport:
    """Alternate projected gradient ascent on the jam probabilities with a
    closed-form convex-concave step on the symbols until the first-order
    certificate drops below epsilon (MC paths allow 3 standard errors)."""
    config = config or SolverConfig()

    def update(model, symbols, policy, step):
        gp, _ = model.grad_phi(symbols, policy)
        policy = project_box(policy.as_array() + step * gp)
        symbols = model.ccp_update(symbols, policy)
        return symbols, policy

    return _run(source, costs, config, init, update)


def solve_gda(source, costs, config: SolverConfig | None = None, init=None) -> FneReport:
    """Baseline: simultaneous projected ascent on the jam probabilities
    (pga_step) and plain descent on the symbols (gd_step)."""
    config = config or SolverConfig()

    def update(model, symbols, policy, step):
        gp, _ = model.grad_phi(symbols, policy)
        gx, _ = model.grad_xhat(symbols, policy)
        new_policy = project_box(policy.as_array() + step * gp)
        flat = np.concatenate([symbols.x_hat0, symbols.x_hat1])
        flat = flat - config.gd_step * gx
        m = symbols.dim
        return ReprSymbols(flat[:m], flat[m:]), new_policy

    return _run(source, costs, config, init, update)
