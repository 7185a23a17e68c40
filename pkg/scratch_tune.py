"""Scratch tuning harness: throwaway."""
import sys
import time

import numpy as np

from lobsim.agents import ChiarellaParams, EmpiricalOrderDistribution
from lobsim.book import BUY, SELL
from lobsim.rng import SeedSet
from lobsim.session import SessionSpec
from lobsim.simulator import MarketSetup, chiarella_agent_specs, run_market


def make_dist(seed=0, dp_max=8, q_max=12, dur_lo=100, dur_hi=3000, n=5000):
    rng = np.random.default_rng(seed)
    # geometric-ish depths concentrated near the touch
    dp = 1 + rng.geometric(0.45, n)
    limit_records = [(int(s), int(m), int(d), int(q), int(du))
                     for s, m, d, q, du in zip(
                         rng.integers(1, 6, n), rng.integers(555, 990, n),
                         np.clip(dp, 1, dp_max), rng.integers(1, q_max, n),
                         rng.integers(dur_lo, dur_hi, n))]
    mq = np.clip(1 + rng.geometric(0.35, n), 1, 10)
    market_records = [(int(s), int(m), int(q)) for s, m, q in zip(
        rng.integers(1, 6, n), rng.integers(555, 990, n), mq)]
    return EmpiricalOrderDistribution.from_records(limit_records, market_records)


def build(kappa, beta_h, gamma_h, beta_l, gamma_l, sigma, lam, alpha, mu,
          sigma_v=0.01, minutes=60, seed=0, n_fund=1, dp_max=8, q_max=12,
          dur_lo=100, dur_hi=3000, depth0=30):
    session = SessionSpec.from_strings([("09:15", str(9 + (15 + minutes) // 60).zfill(2) + ":" + str((15 + minutes) % 60).zfill(2))], step_ms=20)
    spd = session.steps_per_day
    p0 = 20000
    opening = ([(BUY, p0 - 1 - i, depth0) for i in range(10)]
               + [(SELL, p0 + 1 + i, depth0) for i in range(10)])
    params = ChiarellaParams(kappa=kappa, beta_h=beta_h, gamma_h=gamma_h, eta_h=0.98,
                             beta_l=beta_l, gamma_l=gamma_l, eta_l=2e-4, sigma=sigma)
    setup = MarketSetup(
        session=session,
        agents=chiarella_agent_specs(params, {"fundamental": n_fund}),
        placement=make_dist(seed, dp_max=dp_max, q_max=q_max,
                            dur_lo=dur_lo, dur_hi=dur_hi),
        alpha_step=np.full(spd, alpha),
        mu_step=np.full(spd, mu),
        opening_book=opening,
        v0=p0,
        sigma_v=sigma_v,
        impact_lam=lam,
        impact_gam=0.5,
    )
    return setup


def report(tag, setup, seed=1):
    t0 = time.time()
    res = run_market(setup, SeedSet(seed, 0))
    dt = time.time() - t0
    mid = res.mid
    n = len(mid)
    marks = [mid[int(f * (n - 1))] for f in (0, 0.25, 0.5, 0.75, 1.0)]
    print(f"{tag}: {dt:.1f}s mids={[f'{m:.0f}' for m in marks]} "
          f"carried={res.carried.mean():.4f} trades={len(res.trade_step)} "
          f"limits={res.minute_limit_count.sum()} mkts={res.minute_market_count.sum()} "
          f"x_final={res.x_final:.1f} spread_mean={res.spread.mean():.2f}")
    return res


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "a"
    if which == "a":
        # gentle: weak reflexivity, weak momentum
        s = build(kappa=0.05, beta_h=0.2, gamma_h=5.0, beta_l=0.4, gamma_l=0.5,
                  sigma=0.3, lam=0.01, alpha=0.15, mu=0.02)
        for seed in (1, 2, 3):
            report(f"a seed{seed}", s, seed)
    elif which == "b":
        s = build(kappa=0.1, beta_h=0.3, gamma_h=5.0, beta_l=0.5, gamma_l=0.5,
                  sigma=0.5, lam=0.05, alpha=0.2, mu=0.03)
        for seed in (1, 2, 3):
            report(f"b seed{seed}", s, seed)
    elif which == "c":
        s = build(kappa=0.2, beta_h=0.3, gamma_h=5.0, beta_l=0.5, gamma_l=0.5,
                  sigma=0.5, lam=0.05, alpha=0.2, mu=0.03, n_fund=2)
        for seed in (1, 2, 3):
            report(f"c seed{seed}", s, seed)
