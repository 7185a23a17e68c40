"""The calibration bundle: every fitted model input, persisted as a directory.

Files:
    bundle.json       scalars: tick size, step length, session windows, v0,
                      sigma_v, ADV, daily sigma, impact parameters
    rates.csv         minute,alpha,mu            (per-minute arrival counts)
    placement.csv     kind,spread_bucket,time_bucket,depth,qty,duration
    impact.csv        lambda,gamma,r2,method,n_windows
    fundamental.csv   step,v_hat                 (exogenous value proxy)
    chiarella.csv     param,value (+ eval_log.csv when a search ran)
    opening_book.csv  side,price,qty             (warm-up seed levels)
    vwap_profile.csv  minute,market_volume       (VWAP slicer weights)

Every downstream command loads through ``CalibrationBundle.load`` which fails
fast naming any missing artifact.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .agents import ChiarellaParams, EmpiricalOrderDistribution, RateProfile
from .book import BUY, SELL
from .calibration import ImpactModel
from .errors import ConfigurationError
from .session import SessionSpec

REQUIRED_FILES = ("bundle.json", "rates.csv", "placement.csv", "impact.csv",
                  "fundamental.csv", "chiarella.csv", "opening_book.csv",
                  "vwap_profile.csv")


@dataclass
class CalibrationBundle:
    session: SessionSpec
    tick_size: float
    rates: RateProfile
    placement: EmpiricalOrderDistribution
    impact: ImpactModel
    chiarella: ChiarellaParams
    v0: float
    sigma_v: float
    opening_book: list                      # [(side, price, qty), ...]
    vwap_volume: np.ndarray                 # per session minute
    v_hat: np.ndarray | None = None
    adv: float | None = None
    sigma_daily: float | None = None
    eval_log: pd.DataFrame | None = None

    def save(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        meta = {
            "tick_size": self.tick_size,
            "step_ms": self.session.step_ms,
            "windows": [list(w) for w in self.session.windows],
            "v0": self.v0,
            "sigma_v": self.sigma_v,
            "adv": self.adv,
            "sigma_daily": self.sigma_daily,
            "impact": {"lam": self.impact.lam, "gam": self.impact.gam},
        }
        with open(os.path.join(out_dir, "bundle.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        pd.DataFrame({"minute": self.rates.minutes, "alpha": self.rates.alpha,
                      "mu": self.rates.mu}).to_csv(
            os.path.join(out_dir, "rates.csv"), index=False)
        rows = [("limit", sb, tb, dp, q, d)
                for sb, tb, dp, q, d in self.placement.iter_limit_rows()]
        rows += [("market", sb, tb, 0, q, 0)
                 for sb, tb, q in self.placement.iter_market_rows()]
        pd.DataFrame(rows, columns=["kind", "spread_bucket", "time_bucket",
                                    "depth", "qty", "duration"]).to_csv(
            os.path.join(out_dir, "placement.csv"), index=False)
        pd.DataFrame([{"lambda": self.impact.lam, "gamma": self.impact.gam,
                       "r2": self.impact.r2, "method": self.impact.method,
                       "n_windows": self.impact.n_windows}]).to_csv(
            os.path.join(out_dir, "impact.csv"), index=False)
        v_hat = self.v_hat if self.v_hat is not None else np.array([self.v0])
        pd.DataFrame({"step": np.arange(len(v_hat)), "v_hat": v_hat}).to_csv(
            os.path.join(out_dir, "fundamental.csv"), index=False)
        pd.DataFrame(list(self.chiarella.asdict().items()),
                     columns=["param", "value"]).to_csv(
            os.path.join(out_dir, "chiarella.csv"), index=False)
        pd.DataFrame([(s, p, q) for s, p, q in self.opening_book],
                     columns=["side", "price", "qty"]).to_csv(
            os.path.join(out_dir, "opening_book.csv"), index=False)
        pd.DataFrame({"minute": self.rates.minutes,
                      "market_volume": self.vwap_volume}).to_csv(
            os.path.join(out_dir, "vwap_profile.csv"), index=False)
        if self.eval_log is not None:
            self.eval_log.to_csv(os.path.join(out_dir, "eval_log.csv"), index=False)

    @classmethod
    def load(cls, bundle_dir: str) -> "CalibrationBundle":
        for name in REQUIRED_FILES:
            path = os.path.join(bundle_dir, name)
            if not os.path.exists(path):
                raise ConfigurationError(f"calibration bundle artifact missing: {path}")
        with open(os.path.join(bundle_dir, "bundle.json")) as fh:
            meta = json.load(fh)
        session = SessionSpec(windows=tuple(tuple(w) for w in meta["windows"]),
                              step_ms=int(meta["step_ms"]))
        rates_df = pd.read_csv(os.path.join(bundle_dir, "rates.csv"))
        rates = RateProfile(minutes=rates_df["minute"].to_numpy(),
                            alpha=rates_df["alpha"].to_numpy(),
                            mu=rates_df["mu"].to_numpy(),
                            steps_per_minute=session.steps_per_minute)
        pl = pd.read_csv(os.path.join(bundle_dir, "placement.csv"))
        limit_buckets: dict = {}
        market_buckets: dict = {}
        for kind, sb, tb, dp, q, dur in pl.itertuples(index=False):
            key = (int(sb), int(tb))
            if kind == "limit":
                limit_buckets.setdefault(key, ([], [], []))
                limit_buckets[key][0].append(int(dp))
                limit_buckets[key][1].append(int(q))
                limit_buckets[key][2].append(int(dur))
            else:
                market_buckets.setdefault(key, []).append(int(q))
        placement = EmpiricalOrderDistribution(limit_buckets, market_buckets)
        imp = pd.read_csv(os.path.join(bundle_dir, "impact.csv")).iloc[0]
        impact = ImpactModel(lam=float(imp["lambda"]), gam=float(imp["gamma"]),
                             r2=float(imp["r2"]), method=str(imp["method"]),
                             n_windows=int(imp["n_windows"]))
        fund = pd.read_csv(os.path.join(bundle_dir, "fundamental.csv"))
        ch = pd.read_csv(os.path.join(bundle_dir, "chiarella.csv"))
        chiarella = ChiarellaParams(**{str(r["param"]): float(r["value"])
                                       for _, r in ch.iterrows()})
        ob = pd.read_csv(os.path.join(bundle_dir, "opening_book.csv"))
        opening = [(int(s), int(p), int(q))
                   for s, p, q in ob.itertuples(index=False)]
        vwap = pd.read_csv(os.path.join(bundle_dir, "vwap_profile.csv"))
        eval_log_path = os.path.join(bundle_dir, "eval_log.csv")
        eval_log = pd.read_csv(eval_log_path) if os.path.exists(eval_log_path) else None
        return cls(session=session, tick_size=float(meta["tick_size"]),
                   rates=rates, placement=placement, impact=impact,
                   chiarella=chiarella, v0=float(meta["v0"]),
                   sigma_v=float(meta["sigma_v"]), opening_book=opening,
                   vwap_volume=vwap["market_volume"].to_numpy(dtype=np.float64),
                   v_hat=fund["v_hat"].to_numpy(dtype=np.float64),
                   adv=meta.get("adv"), sigma_daily=meta.get("sigma_daily"),
                   eval_log=eval_log)
