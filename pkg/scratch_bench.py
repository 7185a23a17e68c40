"""Scratch benchmark: throwaway, not part of the package."""
import time

import numpy as np

from lobsim.agents import ChiarellaParams, EmpiricalOrderDistribution
from lobsim.book import BUY, SELL
from lobsim.rng import SeedSet
from lobsim.session import SessionSpec
from lobsim.simulator import MarketSetup, chiarella_agent_specs, run_market

rng = np.random.default_rng(0)
n = 5000
limit_records = [(int(s), int(m), int(dp), int(q), int(d))
                 for s, m, dp, q, d in zip(
                     rng.integers(1, 6, n), rng.integers(555, 990, n),
                     rng.integers(1, 8, n), rng.integers(1, 12, n),
                     rng.integers(50, 5000, n))]
market_records = [(int(s), int(m), int(q)) for s, m, q in zip(
    rng.integers(1, 6, n), rng.integers(555, 990, n), rng.integers(1, 8, n))]
dist = EmpiricalOrderDistribution.from_records(limit_records, market_records)

session = SessionSpec.from_strings([("09:15", "16:30")], step_ms=20)
spd = session.steps_per_day
print("steps/day:", spd)

p0 = 20000
opening = [(BUY, p0 - 1 - i, 20) for i in range(10)] + [(SELL, p0 + 1 + i, 20) for i in range(10)]

params = ChiarellaParams(kappa=0.02, beta_h=0.5, gamma_h=10.0, eta_h=0.98,
                         beta_l=1.0, gamma_l=1.0, eta_l=0.01, sigma=0.4)
setup = MarketSetup(
    session=session,
    agents=chiarella_agent_specs(params),
    placement=dist,
    alpha_step=np.full(spd, 0.5),
    mu_step=np.full(spd, 0.05),
    opening_book=opening,
    v0=p0,
    sigma_v=0.02,
    impact_lam=0.1,
    impact_gam=0.5,
)

t0 = time.time()
res = run_market(setup, SeedSet(42, 0))
dt = time.time() - t0
print(f"{spd} steps in {dt:.1f}s -> {dt / spd * 1e6:.1f} us/step")
print("orders:", res.minute_limit_count.sum(), "markets:", res.minute_market_count.sum(),
      "trades:", len(res.trade_step))
print("mid range:", res.mid.min(), res.mid.max(), "final:", res.mid[-1])
print("carried steps:", res.carried.sum())
