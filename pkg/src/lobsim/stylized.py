"""Stylized-fact extraction and the calibration distance.

The facts compared between the historical and simulated markets: per-minute
limit/market arrival rates, the spread distribution, distributions and
autocorrelations of 1 s and 60 s returns and absolute returns, and the
autocorrelation of market-order signs. Returns are mid-price differences in
ticks (prices are integer tick counts throughout).

Histograms for the two markets must share bin grids; grids are derived once
from the reference (historical) series and carried inside the fact vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateDataError

ACF_LAGS_1S = 20
ACF_LAGS_60S = 10
ACF_LAGS_SIGN = 50


@dataclass
class FactGrids:
    """Shared bin edges for the histogram facts."""

    spread_edges: np.ndarray
    r1_edges: np.ndarray
    r60_edges: np.ndarray
    a1_edges: np.ndarray
    a60_edges: np.ndarray

    @staticmethod
    def _symmetric_edges(x: np.ndarray, n_bins: int = 41) -> np.ndarray:
        span = max(1.0, float(np.quantile(np.abs(x), 0.999))) if len(x) else 1.0
        return np.linspace(-span, span, n_bins + 1)

    @staticmethod
    def _abs_edges(x: np.ndarray, n_bins: int = 21) -> np.ndarray:
        span = max(1.0, float(np.quantile(np.abs(x), 0.999))) if len(x) else 1.0
        return np.linspace(0.0, span, n_bins + 1)

    @classmethod
    def from_reference(cls, r1: np.ndarray, r60: np.ndarray,
                       spread: np.ndarray) -> "FactGrids":
        max_spread = int(max(5, np.quantile(spread, 0.999))) if len(spread) else 5
        return cls(
            spread_edges=np.arange(0.5, max_spread + 1.5),
            r1_edges=cls._symmetric_edges(r1),
            r60_edges=cls._symmetric_edges(r60),
            a1_edges=cls._abs_edges(r1),
            a60_edges=cls._abs_edges(r60),
        )

    def equals(self, other: "FactGrids") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("spread_edges", "r1_edges", "r60_edges",
                             "a1_edges", "a60_edges"))


def autocorrelation(x: np.ndarray, max_lag: int) -> tuple[np.ndarray, bool]:
    """Sample autocorrelation at lags 1..max_lag; flagged True if degenerate."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < max_lag + 2:
        return np.zeros(max_lag), True
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:
        return np.zeros(max_lag), True
    out = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        out[k - 1] = float(xc[:-k] @ xc[k:]) / denom
    return out, False


def _hist(x: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Normalized histogram; out-of-range mass is clipped into the end bins."""
    if len(x) == 0:
        return np.zeros(len(edges) - 1)
    clipped = np.clip(x, edges[0] + 1e-12, edges[-1] - 1e-12)
    counts, _ = np.histogram(clipped, bins=edges)
    total = counts.sum()
    return counts / total if total else counts.astype(float)


@dataclass
class StylizedFactVector:
    """All calibration target statistics for one market on one grid set."""

    rate_alpha: np.ndarray
    rate_mu: np.ndarray
    spread_hist: np.ndarray
    r1_hist: np.ndarray
    r60_hist: np.ndarray
    a1_hist: np.ndarray
    a60_hist: np.ndarray
    acf_r1: np.ndarray
    acf_r60: np.ndarray
    acf_a1: np.ndarray
    acf_a60: np.ndarray
    acf_sign: np.ndarray
    flags: dict = field(default_factory=dict)
    grids: FactGrids | None = None


def compute_stylized_facts(mid: np.ndarray, spread: np.ndarray,
                           minute_limit_count: np.ndarray,
                           minute_market_count: np.ndarray,
                           order_signs: np.ndarray,
                           steps_per_second: int,
                           grids: FactGrids | None = None,
                           warmup_steps: int = 0) -> StylizedFactVector:
    """Compute the fact vector for one market.

    Degenerate statistics (zero-variance returns, too few order signs) are
    flagged rather than invented. Raises if the series cannot support a 60 s
    return at all.
    """
    mid = np.asarray(mid, dtype=np.float64)[warmup_steps:]
    spread = np.asarray(spread, dtype=np.float64)[warmup_steps:]
    if len(mid) < 2 * 60 * steps_per_second:
        raise DegenerateDataError(
            f"series too short for 60s returns: {len(mid)} steps")
    r1 = np.diff(mid[::steps_per_second])
    r60 = np.diff(mid[::60 * steps_per_second])
    if grids is None:
        grids = FactGrids.from_reference(r1, r60, spread)
    flags = {}
    acf_r1, f = autocorrelation(r1, ACF_LAGS_1S)
    flags["acf_r1"] = f
    acf_r60, f = autocorrelation(r60, ACF_LAGS_60S)
    flags["acf_r60"] = f
    acf_a1, f = autocorrelation(np.abs(r1), ACF_LAGS_1S)
    flags["acf_a1"] = f
    acf_a60, f = autocorrelation(np.abs(r60), ACF_LAGS_60S)
    flags["acf_a60"] = f
    acf_sign, f = autocorrelation(np.asarray(order_signs, dtype=np.float64),
                                  ACF_LAGS_SIGN)
    flags["acf_sign"] = f
    return StylizedFactVector(
        rate_alpha=np.asarray(minute_limit_count, dtype=np.float64),
        rate_mu=np.asarray(minute_market_count, dtype=np.float64),
        spread_hist=_hist(spread, grids.spread_edges),
        r1_hist=_hist(r1, grids.r1_edges),
        r60_hist=_hist(r60, grids.r60_edges),
        a1_hist=_hist(np.abs(r1), grids.a1_edges),
        a60_hist=_hist(np.abs(r60), grids.a60_edges),
        acf_r1=acf_r1, acf_r60=acf_r60, acf_a1=acf_a1, acf_a60=acf_a60,
        acf_sign=acf_sign, flags=flags, grids=grids)


@dataclass
class FactWeights:
    rates: float = 1.0
    spread: float = 1.0
    returns: float = 1.0
    abs_returns: float = 1.0
    acf_returns: float = 1.0
    acf_abs: float = 1.0
    acf_sign: float = 1.0


def _wasserstein(pa: np.ndarray, pb: np.ndarray, edges: np.ndarray) -> float:
    """1-Wasserstein distance between two histograms on one grid."""
    widths = np.diff(edges)
    return float(np.abs(np.cumsum(pa - pb)) @ widths)


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _curve_term(a: StylizedFactVector, b: StylizedFactVector, name: str) -> float:
    fa, fb = a.flags.get(name, False), b.flags.get(name, False)
    if fa and fb:
        return 0.0
    if fa or fb:
        return 1.0       # degenerate vs. healthy: fixed penalty
    return _rmse(getattr(a, name), getattr(b, name))


def facts_distance(a: StylizedFactVector, b: StylizedFactVector,
                   weights: FactWeights | None = None) -> float:
    """Weighted sum of per-fact distances; zero iff componentwise equal."""
    weights = weights or FactWeights()
    if a.grids is None or b.grids is None or not a.grids.equals(b.grids):
        raise ConfigurationError("fact vectors computed on different grids")
    if len(a.rate_alpha) != len(b.rate_alpha):
        raise ConfigurationError("fact vectors cover different session lengths")
    g = a.grids
    d = 0.0
    d += weights.rates * (_rmse(a.rate_alpha, b.rate_alpha)
                          + _rmse(a.rate_mu, b.rate_mu))
    d += weights.spread * _wasserstein(a.spread_hist, b.spread_hist, g.spread_edges)
    d += weights.returns * (_wasserstein(a.r1_hist, b.r1_hist, g.r1_edges)
                            + _wasserstein(a.r60_hist, b.r60_hist, g.r60_edges))
    d += weights.abs_returns * (_wasserstein(a.a1_hist, b.a1_hist, g.a1_edges)
                                + _wasserstein(a.a60_hist, b.a60_hist, g.a60_edges))
    d += weights.acf_returns * (_curve_term(a, b, "acf_r1")
                                + _curve_term(a, b, "acf_r60"))
    d += weights.acf_abs * (_curve_term(a, b, "acf_a1")
                            + _curve_term(a, b, "acf_a60"))
    d += weights.acf_sign * _curve_term(a, b, "acf_sign")
    return d
