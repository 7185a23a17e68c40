"""Model-input fitting: arrival rates, placement distributions, the
single-trade impact model, the exogenous fundamental proxy, and the hidden
behavioural parameters via surrogate optimization over stylized facts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit

from .agents import ChiarellaParams, EmpiricalOrderDistribution, RateProfile
from .errors import ConfigurationError, DegenerateDataError
from .session import SessionSpec
from .stylized import FactWeights, StylizedFactVector, facts_distance
from .surrogate import minimize_surrogate

# calibrated parameter order for the surrogate search (eta_h/eta_l stay fixed)
CHIARELLA_FREE_PARAMS = ("kappa", "beta_l", "gamma_l", "beta_h", "gamma_h", "sigma")


def estimate_rates(limit_orders: pd.DataFrame, market_orders: pd.DataFrame,
                   session: SessionSpec) -> RateProfile:
    """Per-minute arrival counts over the session; empty minutes are rate 0."""
    minutes = session.session_minutes()
    index = {m: i for i, m in enumerate(minutes.tolist())}
    alpha = np.zeros(len(minutes))
    mu = np.zeros(len(minutes))
    for m, cnt in limit_orders["minute"].value_counts().items():
        i = index.get(int(m))
        if i is not None:
            alpha[i] = cnt
    for m, cnt in market_orders["minute"].value_counts().items():
        i = index.get(int(m))
        if i is not None:
            mu[i] = cnt
    return RateProfile(minutes=minutes, alpha=alpha, mu=mu,
                       steps_per_minute=session.steps_per_minute)


def market_volume_profile(market_orders: pd.DataFrame,
                          session: SessionSpec) -> np.ndarray:
    """Per-minute traded market volume, used by the VWAP slicer."""
    minutes = session.session_minutes()
    index = {m: i for i, m in enumerate(minutes.tolist())}
    vol = np.zeros(len(minutes))
    grouped = market_orders.groupby("minute")["volume"].sum()
    for m, v in grouped.items():
        i = index.get(int(m))
        if i is not None:
            vol[i] = v
    return vol


def build_distributions(limit_orders: pd.DataFrame,
                        market_orders: pd.DataFrame) -> EmpiricalOrderDistribution:
    """Bucket the extracted orders for conditional resampling."""
    if limit_orders.empty or market_orders.empty:
        raise DegenerateDataError("no extracted orders to build distributions from")
    limit_records = zip(limit_orders["spread"].tolist(),
                        limit_orders["minute"].tolist(),
                        limit_orders["depth"].tolist(),
                        limit_orders["volume"].tolist(),
                        limit_orders["duration_steps"].tolist())
    market_records = zip(market_orders["spread"].tolist(),
                         market_orders["minute"].tolist(),
                         market_orders["volume"].tolist())
    return EmpiricalOrderDistribution.from_records(limit_records, market_records)


# ----------------------------------------------------------------- impact fit


@dataclass
class ImpactModel:
    """Aggregate single-trade impact: price moves lam * |Q|^gam per window."""

    lam: float
    gam: float
    r2: float = float("nan")
    method: str = "loglog"
    n_windows: int = 0
    loglog_params: tuple | None = None
    nls_params: tuple | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigurationError(f"impact scale must be positive, got {self.lam}")
        if not 0.0 < self.gam < 1.5:
            raise ConfigurationError(f"impact exponent must be in (0, 1.5), got {self.gam}")

    def __call__(self, q_abs: float) -> float:
        return self.lam * q_abs ** self.gam


def aggregate_impact_windows(steps: np.ndarray, signed_volume: np.ndarray,
                             mid: np.ndarray, steps_per_second: int,
                             window_seconds: int = 1):
    """Per-window signed volume imbalance and same-window mid change.

    Windows with no trades are dropped.
    """
    steps = np.asarray(steps, dtype=np.int64)
    signed_volume = np.asarray(signed_volume, dtype=np.float64)
    wlen = window_seconds * steps_per_second
    n_windows = len(mid) // wlen
    if n_windows < 2:
        raise DegenerateDataError("series too short for impact aggregation")
    win = steps // wlen
    keep = win < n_windows
    q = np.bincount(win[keep], weights=signed_volume[keep], minlength=n_windows)
    has_trade = np.bincount(win[keep], minlength=n_windows) > 0
    ends = mid[wlen - 1::wlen][:n_windows]
    starts = np.concatenate([[mid[0]], ends[:-1]])
    dp = ends - starts
    return q[has_trade], dp[has_trade]


def fit_impact(q: np.ndarray, dp: np.ndarray, min_windows: int = 100) -> ImpactModel:
    """Least-squares power-law fit of window mid change on signed imbalance.

    Primary: OLS on (log|Q|, log(sign(Q) * dp)) over sign-consistent windows.
    Fallback (and always reported): direct nonlinear least squares on
    dp = sign(Q) * lam * |Q|^gam over all nonzero-Q windows.
    """
    q = np.asarray(q, dtype=np.float64)
    dp = np.asarray(dp, dtype=np.float64)
    nz = q != 0
    q, dp = q[nz], dp[nz]
    if len(q) < min_windows:
        raise DegenerateDataError(
            f"need >= {min_windows} nonzero-imbalance windows, got {len(q)}")
    signed_dp = np.sign(q) * dp
    consistent = signed_dp > 0
    loglog = None
    r2 = float("nan")
    if consistent.sum() >= 3:
        lx = np.log(np.abs(q[consistent]))
        ly = np.log(signed_dp[consistent])
        A = np.vstack([lx, np.ones_like(lx)]).T
        (gam, loglam), res, *_ = np.linalg.lstsq(A, ly, rcond=None)
        ss_tot = float(((ly - ly.mean()) ** 2).sum())
        ss_res = float(res[0]) if len(res) else float(((ly - A @ [gam, loglam]) ** 2).sum())
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        loglog = (float(np.exp(loglam)), float(gam))

    nls = None
    try:
        p0 = loglog if loglog is not None else (1.0, 0.5)
        popt, _ = curve_fit(lambda qq, lam, gam: np.sign(qq) * lam * np.abs(qq) ** gam,
                            q, dp, p0=p0, maxfev=10000)
        if popt[0] > 0 and 0 < popt[1] < 1.5:
            nls = (float(popt[0]), float(popt[1]))
    except RuntimeError:
        nls = None

    if loglog is not None and 0 < loglog[1] < 1.5:
        lam, gam = loglog
        method = "loglog"
    elif nls is not None:
        lam, gam = nls
        method = "nls"
    else:
        raise DegenerateDataError("impact fit failed on both routes")
    return ImpactModel(lam=lam, gam=gam, r2=r2, method=method,
                       n_windows=int(len(q)), loglog_params=loglog,
                       nls_params=nls)


def fit_impact_from_extraction(market_orders: pd.DataFrame, mid: np.ndarray,
                               steps_per_second: int,
                               min_windows: int = 100) -> ImpactModel:
    if market_orders.empty:
        raise DegenerateDataError("no market orders to fit impact from")
    q, dp = aggregate_impact_windows(
        market_orders["step"].to_numpy(),
        (market_orders["side"] * market_orders["volume"]).to_numpy(dtype=np.float64),
        mid, steps_per_second)
    return fit_impact(q, dp, min_windows=min_windows)


# --------------------------------------------------------- fundamental proxy


def extract_fundamental_proxy(mid: np.ndarray, impact: ImpactModel,
                              trade_steps: np.ndarray,
                              trade_signed_volume: np.ndarray):
    """Strip cumulative single-trade impact from the price path.

    Returns (v_hat per step, sigma_v) where sigma_v is the per-step standard
    deviation of the proxy's increments under the zero-drift assumption.
    Adding the cumulative impact back reproduces the input exactly.
    """
    mid = np.asarray(mid, dtype=np.float64)
    q_step = np.zeros(len(mid))
    steps = np.asarray(trade_steps, dtype=np.int64)
    if len(steps):
        np.add.at(q_step, steps, np.asarray(trade_signed_volume, dtype=np.float64))
    increments = np.sign(q_step) * impact.lam * np.abs(q_step) ** impact.gam
    v_hat = mid - np.cumsum(increments)
    dv = np.diff(v_hat)
    sigma_v = float(dv.std(ddof=1)) if len(dv) > 1 else 0.0
    return v_hat, sigma_v


# ------------------------------------------------------ behavioural calibration


@dataclass
class CalibrationResult:
    params: ChiarellaParams
    distance: float
    log: list = field(default_factory=list)    # (trial, params dict, distance)

    def log_frame(self) -> pd.DataFrame:
        rows = [{"trial": i, **dict(zip(CHIARELLA_FREE_PARAMS, x)), "distance": f}
                for i, (x, f) in enumerate(self.log)]
        return pd.DataFrame(rows)


DEFAULT_CHIARELLA_BOUNDS = {
    "kappa": (0.001, 0.5),
    "beta_l": (0.05, 3.0),
    "gamma_l": (0.05, 10.0),
    "beta_h": (0.05, 3.0),
    "gamma_h": (0.5, 500000.0),
    "sigma": (0.01, 1.0),
}


def calibrate_chiarella(target_facts: StylizedFactVector, simulate_facts,
                        bounds: dict | None = None, budget: int = 60,
                        seed: int = 0, n_seeds: int = 5,
                        eta_h: float = 0.98, eta_l: float = 1.7e-4,
                        weights: FactWeights | None = None) -> CalibrationResult:
    """Search the hidden behavioural parameters with the surrogate optimizer.

    ``simulate_facts(params, run_seed)`` must return a StylizedFactVector on
    the target's grids. Each candidate is scored by the distance averaged
    over ``n_seeds`` fixed seeds to tame the stochastic objective.
    """
    bounds = {**DEFAULT_CHIARELLA_BOUNDS, **(bounds or {})}
    box = np.array([bounds[name] for name in CHIARELLA_FREE_PARAMS])

    def to_params(x) -> ChiarellaParams:
        kw = dict(zip(CHIARELLA_FREE_PARAMS, (float(v) for v in x)))
        return ChiarellaParams(eta_h=eta_h, eta_l=eta_l, **kw)

    def objective(x) -> float:
        params = to_params(x)
        total = 0.0
        for r in range(n_seeds):
            facts = simulate_facts(params, r)
            total += facts_distance(target_facts, facts, weights)
        return total / n_seeds

    res = minimize_surrogate(objective, box, budget=budget, seed=seed)
    return CalibrationResult(params=to_params(res.x_best),
                             distance=res.f_best, log=res.log)
