"""Run configuration: one YAML file drives every command.

All randomness flows from the single master seed; every emitted CSV records
it (with the config hash) in a leading comment row so runs are auditable.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import yaml

from .book import BUY, SELL
from .errors import ConfigurationError
from .execution import MetaOrder, build_daily_schedule, build_uniform_schedule
from .session import SessionSpec

EXAMPLE_CONFIG = """\
# lobsim run configuration (every default shown explicitly)

session:
  windows: [["09:15", "16:30"]]   # trading windows, HH:MM, ordered
  step_ms: 20                     # simulation step length
  tick_size: 1.0                  # price units per tick (informational)

data:                             # inputs for `ingest`
  orders_csv: data/orders.csv     # timestamp_ns,order_id,action,side,price,qty
  trades_csv: data/trades.csv     # timestamp_ns,price,qty

ingest:
  out_dir: out/extraction         # l2.csv, limit_orders.csv, market_orders.csv

calibrate:
  extraction_dir: out/extraction
  bundle_dir: out/bundle
  surrogate_budget: 0             # 0 skips the search and keeps `chiarella` below
  surrogate_seeds: 3              # simulation seeds averaged per evaluation
  chiarella:                      # initial / fixed behavioural parameters
    kappa: 0.011
    beta_h: 0.530
    gamma_h: 290000.0
    eta_h: 0.98
    beta_l: 1.976
    gamma_l: 5.26
    eta_l: 0.00017
    sigma: 0.249
  bounds:                         # search box per free parameter
    kappa: [0.001, 0.5]
    beta_l: [0.05, 3.0]
    gamma_l: [0.05, 10.0]
    beta_h: [0.05, 3.0]
    gamma_h: [0.5, 500000.0]
    sigma: [0.01, 1.0]

simulate:
  bundle_dir: out/bundle
  n_days: 1
  warmup_steps: 1000
  agent_counts: {fundamental: 1, momentum_hf: 1, momentum_lf: 1, noise: 1}

strategy:                         # meta-order for `simulate` / `impact`
  type: uniform                   # uniform | daily_vwap
  side: sell
  quantity: 2000
  start: 30000                    # step index of the first slice
  horizon: 15000                  # steps (uniform type)
  interval_s: 10                  # slice spacing (uniform type)
  fractions: [0.2, 0.2, 0.2, 0.2, 0.2]   # per-day split (daily_vwap type)

impact:
  n_pairs: 50
  post_horizon_steps: 15000       # recorded tail after the last slice

surface:
  horizons_s: [60, 120, 300]      # execution horizons (seconds)
  sizes: [250, 500, 1000, 2000]   # meta-order sizes (contracts)
  n_runs: 50                      # Monte Carlo pairs per cell (paper-scale: 400)
  start: 30000
  interval_s: 5

frontier:
  n_runs: 50
  n_days: 5
  quantity: 3000
  start: 30000
  lambda_grid: [0.0, 0.1, 1.0, 10.0]
  strategies:
    A: {type: daily_vwap, fractions: [0.70, 0.20, 0.05, 0.03, 0.02]}
    B: {type: daily_vwap, fractions: [0.20, 0.20, 0.20, 0.20, 0.20]}
    C: {type: daily_vwap, fractions: [0.02, 0.03, 0.05, 0.20, 0.70]}

bloomberg:                        # optional TC baseline comparison column
  sigma_daily: 432.7              # daily volatility, price units
  adv: 150000                     # average daily volume, contracts
  spread: 2.0                     # average bid-ask spread, price units

seed: 12345
threads: 1
out_dir: out
"""


@dataclass
class RunConfig:
    raw: dict
    path: str | None = None
    config_hash: str = ""

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        with open(path, "rb") as fh:
            blob = fh.read()
        try:
            raw = yaml.safe_load(blob)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config parse error in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigurationError(f"config root must be a mapping: {path}")
        return cls(raw=raw, path=path,
                   config_hash=hashlib.sha256(blob).hexdigest()[:16])

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        blob = yaml.safe_dump(raw).encode()
        return cls(raw=raw, config_hash=hashlib.sha256(blob).hexdigest()[:16])

    def section(self, name: str, required: bool = False) -> dict:
        value = self.raw.get(name, {})
        if required and not value:
            raise ConfigurationError(f"config section missing: {name}")
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ConfigurationError(f"config section {name} must be a mapping")
        return value

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def threads(self) -> int:
        return int(self.raw.get("threads", 1))

    @property
    def out_dir(self) -> str:
        return str(self.raw.get("out_dir", "out"))

    def session(self) -> SessionSpec:
        sec = self.section("session")
        windows = sec.get("windows", [["09:15", "16:30"]])
        return SessionSpec.from_strings(windows, step_ms=int(sec.get("step_ms", 20)))

    @property
    def tick_size(self) -> float:
        return float(self.section("session").get("tick_size", 1.0))


def parse_side(text) -> int:
    s = str(text).strip().lower()
    if s in ("buy", "b", "1"):
        return BUY
    if s in ("sell", "s", "-1"):
        return SELL
    raise ConfigurationError(f"bad side: {text!r}")


def schedule_from_spec(spec: dict, session: SessionSpec, volume_profile,
                       strategy_id: str = "meta", n_days: int = 1,
                       quantity: int | None = None, start: int | None = None):
    """Build an execution schedule from a strategy config block."""
    stype = spec.get("type", "uniform")
    side = parse_side(spec.get("side", "sell"))
    qty = int(spec.get("quantity", quantity if quantity is not None else 0))
    if qty <= 0:
        raise ConfigurationError("strategy quantity must be positive")
    start = int(spec.get("start", start if start is not None else 0))
    if stype == "uniform":
        horizon = int(spec.get("horizon", 0))
        if horizon <= 0:
            raise ConfigurationError("uniform strategy needs a positive horizon")
        interval = int(float(spec.get("interval_s", 10)) * session.steps_per_second)
        meta = MetaOrder(side, qty, start, horizon, strategy_id)
        return build_uniform_schedule(meta, interval)
    if stype == "daily_vwap":
        fractions = spec.get("fractions")
        if not fractions:
            raise ConfigurationError("daily_vwap strategy needs fractions")
        horizon = session.steps_per_day * max(n_days, len(fractions)) - start
        meta = MetaOrder(side, qty, start, horizon, strategy_id)
        return build_daily_schedule(meta, fractions, session, volume_profile,
                                    slice_seconds=int(spec.get("interval_s", 5)))
    raise ConfigurationError(f"unknown strategy type: {stype!r}")
