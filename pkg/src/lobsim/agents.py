"""Trader behaviours: zero-intelligence baseline and demand-driven traders.

Demand-driven traders (fundamental / momentum / noise / random-sign) map the
shared market state to a signed demand D(t); |D| scales the per-step limit and
market submission probabilities and sign(D) picks the side. Placement (depth,
volume, duration) is sampled verbatim from bucketed historical tuples.

Draw discipline: every trader consumes a fixed, state-independent number of
baseline draws per step (limit Bernoulli first, then market Bernoulli, plus
any demand-specific draws), and additional draws only per emitted intent.
Two runs with identical streams and identical market states therefore produce
identical intents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .book import BUY, SELL
from .errors import ConfigurationError
from .rng import BufferedStream

SPREAD_BUCKET_MAX = 5          # spreads >= 5 ticks share one bucket
TIME_BUCKET_MINUTES = 30


def spread_bucket(spread: float) -> int:
    s = int(spread)
    if s < 1:
        return 1
    return s if s < SPREAD_BUCKET_MAX else SPREAD_BUCKET_MAX


def time_bucket(minute_of_day: int) -> int:
    return int(minute_of_day) // TIME_BUCKET_MINUTES


# --------------------------------------------------------------------- params


@dataclass
class ZIParams:
    """Zero-intelligence trader: constant per-step probabilities."""

    alpha: float = 0.1        # limit submission probability per step
    mu: float = 0.02          # market submission probability per step
    delta: float = 0.01       # per-step cancellation probability
    depth_rate: float = 0.3   # exponential depth rate (ticks^-1)
    order_qty: int = 1

    def __post_init__(self):
        for name in ("alpha", "mu", "delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"ZIParams.{name} must be in [0, 1], got {v}")
        if self.depth_rate <= 0:
            raise ConfigurationError("ZIParams.depth_rate must be positive")


@dataclass
class ChiarellaParams:
    """Hidden behavioural parameters of the demand-driven traders.

    Defaults are the values calibrated for a liquid index-futures day.
    """

    kappa: float = 0.011       # fundamental demand gain per tick
    beta_h: float = 0.530      # high-frequency momentum scale
    gamma_h: float = 290000.0  # high-frequency momentum saturation
    eta_h: float = 0.98        # high-frequency EWMA weight
    beta_l: float = 1.976      # low-frequency momentum scale
    gamma_l: float = 5.26      # low-frequency momentum saturation
    eta_l: float = 1.7e-4      # low-frequency EWMA weight
    sigma: float = 0.249       # noise demand scale

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        for name in ("beta_h", "gamma_h", "beta_l", "gamma_l"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("eta_h", "eta_l"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigurationError(f"{name} must be in (0, 1]")
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")

    def asdict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("kappa", "beta_h", "gamma_h", "eta_h",
                 "beta_l", "gamma_l", "eta_l", "sigma")}


@dataclass
class FundamentalState:
    """Exogenous value V, reflexive adjustment X, and their sum.

    X accumulates the single-trade impact of realised excess demand, so the
    perceived value responds to informed-looking order flow while V stays
    exogenous.
    """

    v: float
    x: float = 0.0
    drift: float = 0.0         # per-step drift g_V (0 for risk use)
    sigma_v: float = 0.0       # per-step volatility

    @property
    def vtilde(self) -> float:
        return self.v + self.x

    def advance(self, w: float) -> float:
        """One exogenous random-walk increment; returns the new V."""
        self.v += self.drift + self.sigma_v * w
        return self.v


@dataclass
class MomentumState:
    """EWMA of mid-price changes."""

    m: float = 0.0


@dataclass
class RateProfile:
    """Per-minute limit/market arrival intensities, scaled to per-step use."""

    minutes: np.ndarray          # wall-clock minute-of-day per session minute
    alpha: np.ndarray            # limit arrivals per minute
    mu: np.ndarray               # market arrivals per minute
    steps_per_minute: int = 3000

    def __post_init__(self):
        self.minutes = np.asarray(self.minutes, dtype=np.int32)
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if not (len(self.minutes) == len(self.alpha) == len(self.mu)):
            raise ConfigurationError("RateProfile arrays must have equal length")
        if (self.alpha < 0).any() or (self.mu < 0).any():
            raise ConfigurationError("arrival rates must be non-negative")

    def per_step(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step probabilities on the session-minute grid."""
        return self.alpha / self.steps_per_minute, self.mu / self.steps_per_minute

    def step_arrays(self, session) -> tuple[np.ndarray, np.ndarray]:
        """Expand to one (alpha, mu) per step of the session day."""
        a, m = self.per_step()
        if len(self.minutes) != session.minutes_per_day:
            raise ConfigurationError(
                f"rate profile covers {len(self.minutes)} minutes, "
                f"session has {session.minutes_per_day}")
        spm = session.steps_per_minute
        return np.repeat(a, spm), np.repeat(m, spm)

    @classmethod
    def flat(cls, session, limit_per_minute: float, market_per_minute: float) -> "RateProfile":
        mins = session.session_minutes()
        return cls(minutes=mins,
                   alpha=np.full(len(mins), float(limit_per_minute)),
                   mu=np.full(len(mins), float(market_per_minute)),
                   steps_per_minute=session.steps_per_minute)


# --------------------------------------------------- empirical order placement


class EmpiricalOrderDistribution:
    """Bucketed historical order tuples for conditional resampling.

    Limit buckets hold (depth, volume, duration) tuples and market buckets
    hold volumes, keyed by (spread bucket, 30-minute time bucket). Lookup
    falls back: exact bucket -> same spread any time -> any spread same time
    -> global pool. Sampled tuples are returned verbatim, never interpolated.
    """

    def __init__(self, limit_buckets: dict, market_buckets: dict):
        self._limit = {k: (np.asarray(v[0], dtype=np.int64),
                           np.asarray(v[1], dtype=np.int64),
                           np.asarray(v[2], dtype=np.int64))
                       for k, v in limit_buckets.items() if len(v[0])}
        self._market = {k: np.asarray(v, dtype=np.int64)
                        for k, v in market_buckets.items() if len(v)}
        if not self._limit or not self._market:
            raise ConfigurationError("empirical order distribution has no data "
                                     "in any limit or market bucket")
        self._limit_cache: dict = {}
        self._market_cache: dict = {}
        self._limit_global = self._concat_limit(self._limit.values())
        self._market_global = np.concatenate(list(self._market.values()))

    @staticmethod
    def _concat_limit(groups):
        groups = list(groups)
        return (np.concatenate([g[0] for g in groups]),
                np.concatenate([g[1] for g in groups]),
                np.concatenate([g[2] for g in groups]))

    @classmethod
    def from_records(cls, limit_records, market_records) -> "EmpiricalOrderDistribution":
        """Build from (spread, minute, depth, volume, duration) and
        (spread, minute, volume) record iterables."""
        lb: dict = {}
        for spread, minute, dp, qty, dur in limit_records:
            key = (spread_bucket(spread), time_bucket(minute))
            lb.setdefault(key, ([], [], []))
            lb[key][0].append(int(dp))
            lb[key][1].append(int(qty))
            lb[key][2].append(int(dur))
        mb: dict = {}
        for spread, minute, qty in market_records:
            key = (spread_bucket(spread), time_bucket(minute))
            mb.setdefault(key, []).append(int(qty))
        return cls(lb, mb)

    def _resolve_limit(self, key):
        hit = self._limit_cache.get(key)
        if hit is not None:
            return hit
        sb, tb = key
        if key in self._limit:
            pool = self._limit[key]
        else:
            same_spread = [v for k, v in self._limit.items() if k[0] == sb]
            if same_spread:
                pool = self._concat_limit(same_spread)
            else:
                same_time = [v for k, v in self._limit.items() if k[1] == tb]
                pool = self._concat_limit(same_time) if same_time else self._limit_global
        self._limit_cache[key] = pool
        return pool

    def _resolve_market(self, key):
        hit = self._market_cache.get(key)
        if hit is not None:
            return hit
        sb, tb = key
        if key in self._market:
            pool = self._market[key]
        else:
            same_spread = [v for k, v in self._market.items() if k[0] == sb]
            if same_spread:
                pool = np.concatenate(same_spread)
            else:
                same_time = [v for k, v in self._market.items() if k[1] == tb]
                pool = np.concatenate(same_time) if same_time else self._market_global
        self._market_cache[key] = pool
        return pool

    def sample_limit(self, spread, minute, u: float):
        """Uniform draw of one (depth, volume, duration) tuple."""
        dp, qty, dur = self._resolve_limit((spread_bucket(spread), time_bucket(minute)))
        i = int(u * len(dp))
        return int(dp[i]), int(qty[i]), int(dur[i])

    def sample_market(self, spread, minute, u: float) -> int:
        pool = self._resolve_market((spread_bucket(spread), time_bucket(minute)))
        return int(pool[int(u * len(pool))])

    def occupancy(self) -> dict:
        """Bucket occupancy report."""
        return {
            "limit": {f"{k[0]}:{k[1]}": len(v[0]) for k, v in sorted(self._limit.items())},
            "market": {f"{k[0]}:{k[1]}": len(v) for k, v in sorted(self._market.items())},
            "limit_total": int(sum(len(v[0]) for v in self._limit.values())),
            "market_total": int(sum(len(v) for v in self._market.values())),
        }

    def iter_limit_rows(self):
        for (sb, tb), (dp, qty, dur) in sorted(self._limit.items()):
            for i in range(len(dp)):
                yield sb, tb, int(dp[i]), int(qty[i]), int(dur[i])

    def iter_market_rows(self):
        for (sb, tb), pool in sorted(self._market.items()):
            for q in pool:
                yield sb, tb, int(q)


# --------------------------------------------------------------- demand rules


def fundamental_demand(v: float, vtilde: float, bb: float, ba: float,
                       kappa: float) -> float:
    """Value-distortion demand: conditions on the exogenous V, values on V+X."""
    if v > ba:
        return kappa * (vtilde - ba)
    if v < bb:
        return kappa * (vtilde - bb)
    return 0.0


def update_reflexive(x: float, q_signed: float, impact_fn) -> float:
    """Accumulate single-trade impact of the last step's excess demand."""
    if q_signed > 0:
        return x + impact_fn(q_signed)
    if q_signed < 0:
        return x - impact_fn(-q_signed)
    return x


def momentum_update(m: float, dmid: float, eta: float) -> float:
    return (1.0 - eta) * m + eta * dmid


def momentum_demand(m: float, beta: float, gamma: float) -> float:
    return beta * math.tanh(gamma * m)


def noise_demand(sigma: float, stream: BufferedStream) -> float:
    return sigma * stream.n()


def demand_to_intents(d: float, alpha_t: float, mu_t: float,
                      stream: BufferedStream) -> tuple[bool, bool, int]:
    """Bernoulli intent draws: (submit_limit, submit_market, side).

    Both draws are always consumed (limit first). Probabilities are
    clamp(rate*|D|, 0, 1); side is sign(D), 0 meaning no intent.
    """
    u_limit = stream.u()
    u_market = stream.u()
    if d > 0.0:
        side, mag = BUY, d
    elif d < 0.0:
        side, mag = SELL, -d
    else:
        return False, False, 0
    return u_limit < alpha_t * mag, u_market < mu_t * mag, side


def limit_price_from_depth(bb: float, ba: float, depth: int, side: int) -> int:
    """Depth is measured from the opposite best: buys below the ask, sells
    above the bid."""
    price = round(ba) - depth if side == BUY else round(bb) + depth
    return price if price >= 1 else 1


def sample_placement(dist: EmpiricalOrderDistribution, spread, minute, side: int,
                     stream: BufferedStream, bb: float, ba: float):
    """Draw one historical limit tuple and price it off the previous bests."""
    dp, qty, dur = dist.sample_limit(spread, minute, stream.u())
    return limit_price_from_depth(bb, ba, dp, side), qty, dur


def zi_price_from_mid(mid: float, depth: float, side: int) -> int:
    """Round to the nearest tick, away from the market on exact ties."""
    raw = mid - depth if side == BUY else mid + depth
    f = math.floor(raw)
    frac = raw - f
    if frac > 0.5:
        price = f + 1
    elif frac < 0.5:
        price = f
    else:
        price = f if side == BUY else f + 1
    return price if price >= 1 else 1


def geometric_duration(u: float, delta: float) -> int | None:
    """Order lifetime equivalent to per-step cancellation probability delta.

    Implemented by drawing an exponential variate and discretising:
    floor(E)+1 with E ~ Exp(-ln(1-delta)) is exactly Geometric(delta).
    """
    if delta <= 0.0:
        return None
    e = -math.log1p(-u)                  # Exp(1)
    rate = -math.log1p(-delta)
    return int(e / rate) + 1


def zi_step(params: ZIParams, mid: float, step: int, stream: BufferedStream):
    """One zero-intelligence decision; returns (limit_intent, market_intent).

    Consumes exactly the two Bernoulli draws when nothing is submitted.
    Limit intent is (side, price, qty, duration); market intent (side, qty).
    """
    u_limit = stream.u()
    u_market = stream.u()
    limit_intent = None
    market_intent = None
    if u_limit < params.alpha:
        side = BUY if stream.u() < 0.5 else SELL
        depth = -math.log1p(-stream.u()) / params.depth_rate
        price = zi_price_from_mid(mid, depth, side)
        duration = geometric_duration(stream.u(), params.delta)
        limit_intent = (side, price, params.order_qty, duration)
    if u_market < params.mu:
        side = BUY if stream.u() < 0.5 else SELL
        market_intent = (side, params.order_qty)
    return limit_intent, market_intent


# -------------------------------------------------------------------- traders


class MarketView:
    """Per-step market state visible to every trader (previous-step values,
    so all traders in a step act on the same information)."""

    __slots__ = ("mid", "dmid", "bb", "ba", "spread", "minute",
                 "alpha", "mu", "v", "vtilde")

    def __init__(self):
        self.mid = 0.0
        self.dmid = 0.0
        self.bb = 0.0
        self.ba = 0.0
        self.spread = 1
        self.minute = 0
        self.alpha = 0.0
        self.mu = 0.0
        self.v = 0.0
        self.vtilde = 0.0


class DemandTrader:
    """Base class wiring demand to submission intents.

    ``step`` returns None or a tuple of intents; a limit intent is
    (False, side, price, qty, duration) and a market intent
    (True, side, None, qty, None).
    """

    __slots__ = ("agent_id", "stream", "placement")

    def __init__(self, agent_id: int, stream: BufferedStream,
                 placement: EmpiricalOrderDistribution):
        self.agent_id = agent_id
        self.stream = stream
        self.placement = placement

    def demand(self, view: MarketView) -> float:
        raise NotImplementedError

    def step(self, view: MarketView):
        d = self.demand(view)
        stream = self.stream
        u_limit = stream.u()
        u_market = stream.u()
        if d > 0.0:
            side, mag = BUY, d
        elif d < 0.0:
            side, mag = SELL, -d
        else:
            return None
        intents = None
        if u_limit < view.alpha * mag:
            dp, qty, dur = self.placement.sample_limit(view.spread, view.minute,
                                                       stream.u())
            price = limit_price_from_depth(view.bb, view.ba, dp, side)
            intents = ((False, side, price, qty, dur),)
        if u_market < view.mu * mag:
            qty = self.placement.sample_market(view.spread, view.minute, stream.u())
            market_intent = (True, side, None, qty, None)
            intents = intents + (market_intent,) if intents else (market_intent,)
        return intents


class FundamentalTrader(DemandTrader):
    __slots__ = ("kappa",)

    def __init__(self, agent_id, stream, placement, kappa: float):
        super().__init__(agent_id, stream, placement)
        self.kappa = kappa

    def demand(self, view):
        return fundamental_demand(view.v, view.vtilde, view.bb, view.ba, self.kappa)


class MomentumTrader(DemandTrader):
    __slots__ = ("beta", "gamma", "eta", "m")

    def __init__(self, agent_id, stream, placement, beta, gamma, eta):
        super().__init__(agent_id, stream, placement)
        self.beta = beta
        self.gamma = gamma
        self.eta = eta
        self.m = 0.0

    def demand(self, view):
        self.m = (1.0 - self.eta) * self.m + self.eta * view.dmid
        return self.beta * math.tanh(self.gamma * self.m)


class NoiseTrader(DemandTrader):
    __slots__ = ("sigma",)

    def __init__(self, agent_id, stream, placement, sigma: float):
        super().__init__(agent_id, stream, placement)
        self.sigma = sigma

    def demand(self, view):
        return self.sigma * self.stream.n()


class RandomTrader(DemandTrader):
    """Data-driven baseline: random unit demand, so submission rates equal
    the calibrated arrival profile."""

    __slots__ = ()

    def demand(self, view):
        return 1.0 if self.stream.u() < 0.5 else -1.0


class ZITrader:
    """Pure zero-intelligence trader (constant rates, exponential depths)."""

    __slots__ = ("agent_id", "stream", "params")

    def __init__(self, agent_id: int, stream: BufferedStream, params: ZIParams):
        self.agent_id = agent_id
        self.stream = stream
        self.params = params

    def step(self, view: MarketView):
        limit_intent, market_intent = zi_step(self.params, view.mid, 0, self.stream)
        intents = None
        if limit_intent is not None:
            side, price, qty, dur = limit_intent
            intents = ((False, side, price, qty, dur),)
        if market_intent is not None:
            side, qty = market_intent
            mi = (True, side, None, qty, None)
            intents = intents + (mi,) if intents else (mi,)
        return intents
