"""Finite-population analytics and simulation of the shared collision channel.

A round draws one observation per sensor, applies the homogeneous
transmission rule, and resolves the channel: up to `capacity` simultaneous
packets are delivered; more transmissions (intrinsic) or a jam (extrinsic)
produce the collision symbol, after which every estimator falls back to the
collision symbol x_hat1.  Silent sensors on a clean channel are estimated by
x_hat0, delivered ones incur zero error.

The exact finite-n cost of a threshold policy needs only the transmit
probability p and two binomial CDFs of the other n-1 sensors' transmission
count, giving a four-term expression validated here against the Monte Carlo
estimate and, for growing n, against the infinite-population objective.

Reproducibility: draw (trial, stream) is addressed as position `trial` of a
counter-based substream (one per sensor, one for the jammer), with exactly
one uniform consumed per position and normals obtained by inversion.  Costs
are therefore bit-identical however trials are chunked or distributed, and a
single round can be replayed in isolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .gaussian import ScalarGaussian, interval_moments, philox_rng
from .proactive import GameCosts, ReprSymbols
from .reactive import ReactivePolicy, TransmitRegion

_MIN_UNIFORM = 2.0**-54
_CHUNK = 100_000


@dataclass(frozen=True)
class NetworkConfig:
    """Population size and channel capacity; capacity = n only for n = 1."""

    n: int
    capacity: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not (0 < self.capacity <= self.n):
            raise ValueError(
                f"capacity must lie in (0, {self.n}], got {self.capacity}"
            )
        if self.n > 1 and self.capacity >= self.n:
            raise ValueError("capacity must be strictly below n for n > 1")

    @classmethod
    def from_kappa(cls, n: int, kappa_bar: float) -> "NetworkConfig":
        """Capacity ceil(kappa_bar * n): fixed rounding for reproducibility."""
        if not (0.0 < kappa_bar < 1.0):
            raise ValueError(f"kappa_bar must lie in (0, 1), got {kappa_bar}")
        return cls(n, max(1, math.ceil(kappa_bar * n)))


@dataclass(frozen=True)
class ChannelOutcome:
    """One round's channel resolution with collision provenance."""

    kind: str  # "idle" | "delivered" | "collision"
    delivered: tuple[tuple[int, float], ...]
    intrinsic: bool
    extrinsic: bool


@dataclass(frozen=True)
class EmpiricalEstimate:
    mean: float
    std_err: float
    trials: int

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError("at least 2 trials are required")


@dataclass(frozen=True, eq=False)
class RoundPolicies:
    """Homogeneous per-round strategies: one transmission rule (threshold on
    the squared deviation from x_hat0, or an explicit region) and one jammer
    (channel-blind probability phi, or occupancy-dependent (alpha, beta))."""

    symbols: ReprSymbols
    threshold: float | None = None
    region: TransmitRegion | None = None
    jam_phi: float | None = None
    jam_reactive: ReactivePolicy | None = None

    def __post_init__(self):
        if (self.threshold is None) == (self.region is None):
            raise ValueError("exactly one of threshold or region is required")
        if (self.jam_phi is None) == (self.jam_reactive is None):
            raise ValueError("exactly one of jam_phi or jam_reactive is required")
        if self.threshold is not None and self.threshold < 0.0:
            raise ValueError("threshold must be nonnegative")
        if self.jam_phi is not None and not (0.0 <= self.jam_phi <= 1.0):
            raise ValueError(f"jam_phi must lie in [0, 1], got {self.jam_phi}")


def binomial_cdf(n: int, kappa: int, p: float) -> float:
    """P(Bin(n, p) <= kappa); stable for n up to 1e5."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0 <= kappa <= n:
        raise ValueError(f"kappa must lie in [0, {n}], got {kappa}")
    return float(stats.binom.cdf(kappa, n, p))


def jn_analytic(
    source: ScalarGaussian,
    costs: GameCosts,
    config: NetworkConfig,
    threshold: float,
    symbols: ReprSymbols,
    phi: float,
) -> float:
    """Exact per-sensor cost of the homogeneous threshold policy.

    Conditioning each sensor on its own decision and on how many of the
    others transmit yields four terms: the silent-and-clean one weighted by
    F = P(Bin(n-1, p) <= capacity), the silent-but-saturated and the
    transmitting-but-saturated remainders, and the channel-blind jamming
    term that ignores the collision state entirely.
    """
    if not (0.0 <= phi <= 1.0):
        raise ValueError(f"phi must lie in [0, 1], got {phi}")
    if threshold < 0.0:
        raise ValueError("threshold must be nonnegative")
    x0, x1 = symbols.scalars()
    w = math.sqrt(threshold)
    p_in, m1, m2 = interval_moments(source, x0 - w, x0 + w)
    p = 1.0 - p_in
    err0_silent = m2 - 2.0 * x0 * m1 + x0 * x0 * p_in
    err1_silent = m2 - 2.0 * x1 * m1 + x1 * x1 * p_in
    second = source.var + source.mean**2
    err1_total = second - 2.0 * x1 * source.mean + x1 * x1
    err1_transmit = err1_total - err1_silent
    f_cap = binomial_cdf(config.n - 1, config.capacity, p) \
        if config.n > 1 else 1.0
    f_cap_minus = binomial_cdf(config.n - 1, config.capacity - 1, p) \
        if config.n > 1 else 1.0
    return (
        phi * (err1_total - costs.d)
        + costs.c * p
        + (1.0 - phi)
        * (
            err0_silent * f_cap
            + err1_silent * (1.0 - f_cap)
            + err1_transmit * (1.0 - f_cap_minus)
        )
    )


def _uniforms(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    """`count` uniforms at positions [start, start + count) of a substream.

    One double is consumed per position.  Philox advances in counter blocks
    of four 64-bit words (four doubles), so positions are addressed by
    skipping start // 4 blocks and discarding start % 4 leading draws; any
    chunking then reproduces the same values bit for bit.
    """
    gen = philox_rng(seed, stream)
    block, lead = divmod(start, 4)
    if block:
        gen.bit_generator.advance(block)
    u = gen.random(lead + count)[lead:]
    return np.maximum(u, _MIN_UNIFORM)


def _transmit_mask(x: np.ndarray, policies: RoundPolicies) -> np.ndarray:
    if policies.threshold is not None:
        dev = x - policies.symbols.x_hat0
        return dev * dev > policies.threshold
    return np.atleast_1d(policies.region.q(x)) > 0.0


def _trial_costs(
    source: ScalarGaussian,
    costs: GameCosts,
    config: NetworkConfig,
    policies: RoundPolicies,
    seed: int,
    start: int,
    count: int,
):
    """Per-trial costs and channel state for trials [start, start + count)."""
    n = config.n
    x = np.empty((count, n))
    for s in range(n):
        u = _uniforms(seed, s, start, count)
        x[:, s] = source.mean + source.std * special.ndtri(u)
    transmit = np.empty((count, n), dtype=bool)
    for s in range(n):
        transmit[:, s] = _transmit_mask(x[:, s], policies)
    p_count = transmit.sum(axis=1)
    w = _uniforms(seed, n, start, count)
    if policies.jam_phi is not None:
        jam = w < policies.jam_phi
    else:
        if n != 1:
            raise ValueError(
                "a channel-sensing jammer is only supported for n = 1"
            )
        pol = policies.jam_reactive
        jam = w < np.where(transmit[:, 0], pol.beta, pol.alpha)
    intrinsic = p_count > config.capacity
    collision = intrinsic | jam
    x0, x1 = policies.symbols.scalars()
    sq0 = (x - x0) ** 2
    sq1 = (x - x1) ** 2
    err = np.where(
        collision[:, None], sq1, np.where(transmit, 0.0, sq0)
    )
    cost = (err.sum(axis=1) + costs.c * p_count) / n - costs.d * jam
    return cost, x, transmit, p_count, jam, intrinsic


def simulate_round(
    source: ScalarGaussian,
    costs: GameCosts,
    config: NetworkConfig,
    policies: RoundPolicies,
    seed: int,
    trial: int = 0,
) -> tuple[float, ChannelOutcome]:
    """Replay a single round of the addressed trial stream."""
    cost, x, transmit, p_count, jam, intrinsic = _trial_costs(
        source, costs, config, policies, seed, trial, 1
    )
    p = int(p_count[0])
    jammed = bool(jam[0])
    if intrinsic[0] or jammed:
        outcome = ChannelOutcome("collision", (), bool(intrinsic[0]), jammed)
    elif p == 0:
        outcome = ChannelOutcome("idle", (), False, False)
    else:
        packets = tuple(
            (s, float(x[0, s])) for s in range(config.n) if transmit[0, s]
        )
        outcome = ChannelOutcome("delivered", packets, False, False)
    assert len(outcome.delivered) <= config.capacity
    assert (outcome.kind == "collision") == (p > config.capacity or jammed)
    return float(cost[0]), outcome


def estimate_cost(
    source: ScalarGaussian,
    costs: GameCosts,
    config: NetworkConfig,
    policies: RoundPolicies,
    trials: int,
    seed: int,
) -> EmpiricalEstimate:
    """Average the per-round cost over `trials` addressed rounds.

    The per-trial cost array is assembled chunk by chunk and reduced once at
    the end, so the estimate is bit-identical for any chunk size or worker
    split of the same (seed, trials).
    """
    if trials < 2:
        raise ValueError("at least 2 trials are required")
    pieces = []
    for start in range(0, trials, _CHUNK):
        count = min(_CHUNK, trials - start)
        cost, *_ = _trial_costs(
            source, costs, config, policies, seed, start, count
        )
        pieces.append(cost)
    all_costs = np.concatenate(pieces)
    mean = float(all_costs.mean())
    std_err = float(all_costs.std(ddof=1) / math.sqrt(trials))
    return EmpiricalEstimate(mean, std_err, trials)


def chernoff_upper_bound(n: int, p: float, kind: str, delta: float) -> float:
    """Multiplicative Chernoff bound for Bin(n, p) with mean mu = n p.

    kind "upper": P(S > (1 + delta) mu) <= exp(-mu delta^2 / (2 + delta)),
    any delta > 0.  kind "lower": P(S <= (1 - delta) mu) <=
    exp(-mu delta^2 / 2), delta in (0, 1).
    """
    mu = n * p
    if mu <= 0.0:
        raise ValueError("n * p must be positive")
    if kind == "upper":
        if delta <= 0.0:
            raise ValueError("upper-tail delta must be positive")
        return math.exp(-mu * delta * delta / (2.0 + delta))
    if kind == "lower":
        if not (0.0 < delta < 1.0):
            raise ValueError("lower-tail delta must lie in (0, 1)")
        return math.exp(-mu * delta * delta / 2.0)
    raise ValueError(f"kind must be 'upper' or 'lower', got {kind!r}")


def convergence_probe(
    source: ScalarGaussian,
    threshold: float,
    kappa_bar: float,
    n_grid,
) -> list[tuple[int, float, float]]:
    """Both capacity CDF sequences along n_grid for the threshold policy.

    p is the transmit probability of the centered threshold rule; each row
    holds (n, P(Bin(n-1, p) <= kappa(n)), P(Bin(n-1, p) <= kappa(n) - 1))
    with kappa(n) = ceil(kappa_bar n).  As n grows both approach the
    indicator of p <= kappa_bar; the boundary p = kappa_bar is excluded.
    """
    if not (0.0 < kappa_bar < 1.0):
        raise ValueError(f"kappa_bar must lie in (0, 1), got {kappa_bar}")
    w = math.sqrt(threshold)
    centered = source.centered()
    p = 1.0 - interval_moments(centered, -w, w)[0]
    if abs(p - kappa_bar) < 1e-6:
        warnings.warn(
            "transmit probability sits on the capacity boundary; the CDF "
            "sequences do not converge to an indicator there",
            RuntimeWarning,
            stacklevel=2,
        )
    rows = []
    for n in n_grid:
        kappa = math.ceil(kappa_bar * n)
        rows.append(
            (
                int(n),
                binomial_cdf(n - 1, min(kappa, n - 1), p) if n > 1 else 1.0,
                binomial_cdf(n - 1, kappa - 1, p) if n > 1 else 1.0,
            )
        )
    return rows
