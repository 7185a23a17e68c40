"""Synthetic desk-scale market data for tests, examples and benchmarks.

Proprietary tick history is not redistributable, so calibration and risk
workflows are exercised on days generated by the simulator itself: a run's
event log is exported to the canonical orders/trades CSVs, with each
intra-step event given a distinct nanosecond offset so the reconstruction
recovers the exact event sequence (and trades of one market order share its
submission timestamp).
"""

from __future__ import annotations

import os

import numpy as np

from .agents import ChiarellaParams, EmpiricalOrderDistribution, RateProfile
from .book import (BUY, SELL, EV_CANCEL, EV_EXPIRE, EV_LIMIT, EV_MARKET,
                   EV_TRADE, side_name)
from .errors import ConfigurationError
from .session import SessionSpec
from .simulator import MarketSetup, SimResult, chiarella_agent_specs

DESK_PRICE = 20000


def synthetic_placement_records(seed: int = 0, n: int = 5000, dp_max: int = 8,
                                q_max: int = 11, dur_lo: int = 150,
                                dur_hi: int = 2600, session: SessionSpec | None = None):
    """Random placement tuples: depths concentrated near the touch, modest
    volumes, lifetimes of a few seconds to a minute."""
    rng = np.random.default_rng(seed)
    minutes = (session.session_minutes() if session is not None
               else np.arange(555, 990))
    dp = np.clip(1 + rng.geometric(0.45, n), 1, dp_max)
    spreads = rng.integers(1, 6, n)
    mins = rng.choice(minutes, n)
    qty = rng.integers(1, q_max + 1, n)
    dur = rng.integers(dur_lo, dur_hi + 1, n)
    limit_records = list(zip(spreads.tolist(), mins.tolist(), dp.tolist(),
                             qty.tolist(), dur.tolist()))
    mq = np.clip(1 + rng.geometric(0.35, n), 1, 10)
    market_records = list(zip(rng.integers(1, 6, n).tolist(),
                              rng.choice(minutes, n).tolist(), mq.tolist()))
    return limit_records, market_records


def desk_placement(session: SessionSpec, seed: int = 0) -> EmpiricalOrderDistribution:
    lrec, mrec = synthetic_placement_records(seed=seed, session=session)
    return EmpiricalOrderDistribution.from_records(lrec, mrec)


def desk_opening_book(p0: int = DESK_PRICE, depth_levels: int = 10,
                      level_qty: int = 30) -> list:
    return ([(BUY, p0 - 1 - i, level_qty) for i in range(depth_levels)]
            + [(SELL, p0 + 1 + i, level_qty) for i in range(depth_levels)])


def desk_chiarella_params() -> ChiarellaParams:
    """Stable desk-scale behavioural parameters (see tests for the regime:
    emergent impact decays to a significantly nonzero plateau)."""
    return ChiarellaParams(kappa=0.15, beta_h=0.2, gamma_h=5.0, eta_h=0.98,
                           beta_l=0.4, gamma_l=0.5, eta_l=2e-4, sigma=0.25)


def desk_session(minutes: int = 22, step_ms: int = 20) -> SessionSpec:
    start_s = 9 * 3600 + 15 * 60
    end_s = start_s + minutes * 60
    return SessionSpec(windows=((start_s, end_s),), step_ms=step_ms)


def desk_setup(session: SessionSpec | None = None, seed: int = 0,
               params: ChiarellaParams | None = None,
               alpha_per_step: float = 0.22, mu_per_step: float = 0.02,
               sigma_v: float = 0.01, impact_lam: float = 0.02,
               impact_gam: float = 0.5, n_days: int = 1,
               counts: dict | None = None) -> MarketSetup:
    """Tuned, stable demand-driven market used across the test suite."""
    session = session or desk_session()
    spd = session.steps_per_day
    params = params or desk_chiarella_params()
    return MarketSetup(
        session=session,
        agents=chiarella_agent_specs(params, counts),
        placement=desk_placement(session, seed),
        alpha_step=np.full(spd, alpha_per_step),
        mu_step=np.full(spd, mu_per_step),
        opening_book=desk_opening_book(),
        v0=DESK_PRICE,
        sigma_v=sigma_v,
        impact_lam=impact_lam,
        impact_gam=impact_gam,
        n_days=n_days,
    )


def generator_setup(session: SessionSpec, profile: RateProfile, seed: int = 0,
                    n_agents: int = 1) -> MarketSetup:
    """Data-driven baseline generator: random-sign unit demand, so aggregate
    submission rates equal the profile times the agent count."""
    alpha_step, mu_step = profile.step_arrays(session)
    return MarketSetup(
        session=session,
        agents=[("random", {})] * n_agents,
        placement=desk_placement(session, seed),
        alpha_step=alpha_step,
        mu_step=mu_step,
        opening_book=desk_opening_book(),
        v0=DESK_PRICE,
        sigma_v=0.0,
    )


def export_tick_files(result: SimResult, session: SessionSpec, out_dir: str,
                      prefix: str = "synthetic"):
    """Write a run's event log as canonical orders/trades CSVs.

    Every event within a step gets a distinct nanosecond offset; the trades
    of one submission inherit that submission's timestamp so reconstruction
    groups them into a single inferred market order.
    """
    if result.events is None:
        raise ConfigurationError("run was not recorded with record_events=True")
    if result.n_steps > session.steps_per_day:
        raise ConfigurationError("tick export supports single-day runs only")
    start_ns = session.step_start_ns()
    orders_path = os.path.join(out_dir, f"{prefix}_orders.csv")
    trades_path = os.path.join(out_dir, f"{prefix}_trades.csv")
    os.makedirs(out_dir, exist_ok=True)
    cur_step = -1
    k = 0
    anchor_ts = 0
    # a marketable limit is exported as its fills (anchored trades) plus a
    # residual-quantity new op, which is what reconstruction can see
    pending = None      # (ts, oid, side, price, qty, filled)
    with open(orders_path, "w") as fo, open(trades_path, "w") as ft:
        fo.write("timestamp_ns,order_id,action,side,price,qty\n")
        ft.write("timestamp_ns,price,qty\n")

        def flush():
            nonlocal pending
            if pending is None:
                return
            ts, oid, side, price, qty, filled = pending
            residual = qty - filled
            if residual > 0:
                fo.write(f"{ts},{oid},new,{side_name(side)},{price},{residual}\n")
            pending = None

        for step, etype, oid, agent, side, price, qty in result.events:
            if step != cur_step:
                cur_step = step
                k = 0
            ts = int(start_ns[step]) + k
            k += 1
            if etype == EV_TRADE:
                if pending is not None:
                    pending = pending[:5] + (pending[5] + qty,)
                ft.write(f"{anchor_ts},{price},{qty}\n")
                continue
            flush()
            if etype == EV_LIMIT:
                anchor_ts = ts
                pending = (ts, oid, side, price, qty, 0)
            elif etype == EV_MARKET:
                anchor_ts = ts
            elif etype in (EV_CANCEL, EV_EXPIRE):
                fo.write(f"{ts},{oid},cancel,{side_name(side)},{price},{qty}\n")
        flush()
    return orders_path, trades_path
