"""Paired Monte Carlo execution-cost analysis.

A pair is one baseline run (no execution) and one counterfactual run (same
seeds, same exogenous value path, plus the execution agent). Implementation
shortfall against the shared pre-start mid decomposes exactly into a
market-risk part (baseline prices at the fill steps) and a market-impact
part (counterfactual minus baseline prices), and the per-step mid difference
is the price impact series. Pairs over a (horizon x size) grid build the
liquidity risk surface; pairs over a strategy set build the efficient
frontier.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .book import BUY, SELL
from .bundle import CalibrationBundle
from .errors import ConfigurationError
from .execution import (ExecutionSchedule, MetaOrder, build_daily_schedule,
                        build_uniform_schedule)
from .rng import SeedSet
from .simulator import MarketSetup, SimResult, chiarella_agent_specs, run_market

run_simulation = run_market      # a run with no schedule has no execution agent


def market_setup_from_bundle(bundle: CalibrationBundle, n_days: int = 1,
                             counts: dict | None = None,
                             warmup_steps: int = 1000) -> MarketSetup:
    alpha_step, mu_step = bundle.rates.step_arrays(bundle.session)
    return MarketSetup(
        session=bundle.session,
        agents=chiarella_agent_specs(bundle.chiarella, counts),
        placement=bundle.placement,
        alpha_step=alpha_step,
        mu_step=mu_step,
        opening_book=bundle.opening_book,
        v0=bundle.v0,
        sigma_v=bundle.sigma_v,
        impact_lam=bundle.impact.lam,
        impact_gam=bundle.impact.gam,
        n_days=n_days,
        warmup_steps=warmup_steps,
        tick_size=bundle.tick_size,
    )


# ------------------------------------------------------------------ shortfall


def implementation_shortfall(fill_prices, fill_qtys, p_ref: float, side: int) -> float:
    """Volume-weighted fill price versus the reference, positive-adverse.

    Buy cost = VWAP - p_ref; sell cost = p_ref - VWAP.
    """
    fill_prices = np.asarray(fill_prices, dtype=np.float64)
    fill_qtys = np.asarray(fill_qtys, dtype=np.float64)
    total = fill_qtys.sum()
    if total <= 0:
        raise ConfigurationError("implementation shortfall needs at least one fill")
    vwap = float(fill_prices @ fill_qtys) / total
    return side * (vwap - p_ref)


def decompose(fill_steps, fill_prices, fill_qtys, baseline_mid: np.ndarray,
              p_ref: float, side: int) -> tuple[float, float]:
    """Split the shortfall into market-risk and market-impact parts.

    Market risk re-prices the fills at the baseline mid of each fill step;
    market impact is the fill-price excess over those baseline mids. Both
    carry the same positive-adverse sign convention, so their sum equals the
    total shortfall exactly.
    """
    fill_steps = np.asarray(fill_steps, dtype=np.int64)
    fill_prices = np.asarray(fill_prices, dtype=np.float64)
    fill_qtys = np.asarray(fill_qtys, dtype=np.float64)
    if len(fill_steps) == 0:
        raise ConfigurationError("decompose needs at least one fill")
    if fill_steps.max() >= len(baseline_mid):
        raise ConfigurationError("fill steps extend past the baseline series")
    total = fill_qtys.sum()
    base_at_fills = baseline_mid[fill_steps]
    mr = side * (float(base_at_fills @ fill_qtys) / total - p_ref)
    mi = side * float((fill_prices - base_at_fills) @ fill_qtys) / total
    return mr, mi


@dataclass
class CostRecord:
    run_index: int
    p_ref: float
    cost_ticks: float
    mr_ticks: float
    mi_ticks: float
    executed_fraction: float
    flagged: bool = False

    @property
    def cost_bps(self) -> float:
        return 1e4 * self.cost_ticks / self.p_ref

    @property
    def mr_bps(self) -> float:
        return 1e4 * self.mr_ticks / self.p_ref

    @property
    def mi_bps(self) -> float:
        return 1e4 * self.mi_ticks / self.p_ref


@dataclass
class PairResult:
    baseline: SimResult
    counterfactual: SimResult
    cost: CostRecord
    impact: np.ndarray        # counterfactual mid minus baseline mid, per step


def run_paired(setup: MarketSetup, seeds: SeedSet,
               schedule: ExecutionSchedule) -> PairResult:
    """One baseline/counterfactual pair sharing every random stream."""
    baseline = run_market(setup, seeds)
    counterfactual = run_market(setup, seeds, schedule=schedule)
    impact = counterfactual.mid - baseline.mid
    record = counterfactual.execution
    start = min(s for s, _ in schedule.slices) if schedule.slices else 0
    p_ref = float(baseline.mid[start - 1]) if start > 0 else float(setup.v0)
    if record is None or record.executed_quantity == 0:
        cost = CostRecord(seeds.run_index, p_ref, float("nan"), float("nan"),
                          float("nan"), 0.0, flagged=True)
    else:
        total = implementation_shortfall(record.fill_prices, record.fill_qtys,
                                         p_ref, schedule.side)
        mr, mi = decompose(record.fill_steps, record.fill_prices,
                           record.fill_qtys, baseline.mid, p_ref, schedule.side)
        cost = CostRecord(seeds.run_index, p_ref, total, mr, mi,
                          record.executed_fraction)
    return PairResult(baseline, counterfactual, cost, impact)


# ------------------------------------------------------------- parallel pairs

_WORKER_SETUP: MarketSetup | None = None


def _init_worker(setup: MarketSetup):
    global _WORKER_SETUP
    _WORKER_SETUP = setup


def _pair_task(args):
    key, master_seed, run_index, schedule, keep_impact = args
    seeds = SeedSet(master_seed, run_index)
    pair = run_paired(_WORKER_SETUP, seeds, schedule)
    cost = pair.cost
    impact = None
    if keep_impact:
        impact = (pair.impact, pair.baseline.mid, pair.counterfactual.mid)
    return (key, run_index, cost.p_ref, cost.cost_ticks, cost.mr_ticks,
            cost.mi_ticks, cost.executed_fraction, cost.flagged, impact)


def run_pair_grid(setup: MarketSetup, tasks: list, master_seed: int,
                  threads: int = 1, keep_impact: bool = False) -> dict:
    """Run (key, run_index, schedule) pair tasks, serially or across processes.

    Per-run seeds depend only on (master seed, run index), and results are
    reduced in sorted task order, so the output is identical for any worker
    count >= 1.
    """
    args = [(key, master_seed, run_index, schedule, keep_impact)
            for key, run_index, schedule in tasks]
    if threads <= 1:
        _init_worker(setup)
        raw = [_pair_task(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                                 initargs=(setup,)) as pool:
            raw = list(pool.map(_pair_task, args, chunksize=1))
    raw.sort(key=lambda r: (str(r[0]), r[1]))
    grouped: dict = {}
    for key, run_index, p_ref, cost, mr, mi, frac, flagged, impact in raw:
        rec = CostRecord(run_index, p_ref, cost, mr, mi, frac, flagged)
        grouped.setdefault(key, []).append((rec, impact))
    return grouped


# ----------------------------------------------------------------- surfaces


@dataclass
class SurfaceCell:
    horizon_steps: int
    size: int
    mean_cost_mi_bps: float
    std_cost_bps: float
    pct_executed: float
    n_runs: int
    extrapolated: bool = False
    bloomberg_bps: float | None = None


@dataclass
class LiquidityRiskSurface:
    cells: list = field(default_factory=list)

    def rows(self):
        for c in self.cells:
            yield {"horizon_steps": c.horizon_steps, "size": c.size,
                   "mean_cost_mi_bps": c.mean_cost_mi_bps,
                   "std_cost_bps": c.std_cost_bps,
                   "pct_executed": c.pct_executed, "n_runs": c.n_runs,
                   "extrapolated": c.extrapolated,
                   "bloomberg_bps": c.bloomberg_bps}


@dataclass
class BloombergTCParams:
    """Power-law transaction cost baseline with spread cost."""

    sigma_daily: float
    adv: float
    spread: float
    alpha_b: float = 1.0 / 3.0
    delta_b: float = 1.0
    gamma_b: float = 0.5
    beta_b: float = 0.5

    def __post_init__(self):
        if self.adv <= 0:
            raise ConfigurationError("ADV must be positive")


def bloomberg_tc(q: float, params: BloombergTCParams) -> float:
    """Cost in price units: alpha * sigma^delta * (Q/ADV)^gamma + beta * spread."""
    impact = params.alpha_b * params.sigma_daily ** params.delta_b \
        * (q / params.adv) ** params.gamma_b
    return impact + params.beta_b * params.spread


def build_surface(setup: MarketSetup, horizons_steps, sizes, n_runs: int,
                  master_seed: int, start_step: int = 1000,
                  interval_steps: int = 250, side: int = SELL,
                  threads: int = 1,
                  bloomberg: BloombergTCParams | None = None) -> LiquidityRiskSurface:
    """Mean impact cost, total-cost dispersion and executed fraction per
    (horizon, size) cell; partially executed cells are re-estimated by a
    natural cubic spline along the size axis and flagged."""
    if n_runs < 2:
        raise ConfigurationError("surface needs n_runs >= 2")
    horizons_steps = list(horizons_steps)
    sizes = list(sizes)
    if not horizons_steps or not sizes:
        raise ConfigurationError("surface grid must be non-empty")
    tasks = []
    run_index = itertools.count()
    for hi, horizon in enumerate(horizons_steps):
        for si, size in enumerate(sizes):
            meta = MetaOrder(side, int(size), start_step, int(horizon),
                             f"cell_{hi}_{si}")
            sched = build_uniform_schedule(meta, min(interval_steps, horizon))
            for _ in range(n_runs):
                tasks.append(((hi, si), next(run_index), sched))
    grouped = run_pair_grid(setup, tasks, master_seed, threads=threads)

    surface = LiquidityRiskSurface()
    grid_mi = np.full((len(horizons_steps), len(sizes)), np.nan)
    cells = {}
    for hi, horizon in enumerate(horizons_steps):
        for si, size in enumerate(sizes):
            recs = [rec for rec, _ in grouped[(hi, si)]]
            ok = [r for r in recs if not r.flagged]
            mi = float(np.mean([r.mi_bps for r in ok])) if ok else float("nan")
            std = float(np.std([r.cost_bps for r in ok], ddof=1)) if len(ok) > 1 else float("nan")
            pct = float(np.mean([r.executed_fraction for r in recs]))
            p_ref = float(np.mean([r.p_ref for r in recs]))
            bb = (1e4 * bloomberg_tc(size, bloomberg) / p_ref
                  if bloomberg is not None else None)
            cell = SurfaceCell(int(horizon), int(size), mi, std, pct,
                               len(recs), bloomberg_bps=bb)
            cells[(hi, si)] = cell
            grid_mi[hi, si] = mi

    # cubic-spline re-estimate along the size axis where execution was partial
    sizes_arr = np.asarray(sizes, dtype=np.float64)
    for hi, horizon in enumerate(horizons_steps):
        complete = [si for si in range(len(sizes))
                    if cells[(hi, si)].pct_executed >= 1.0 - 1e-9]
        partial = [si for si in range(len(sizes)) if si not in complete]
        if not partial:
            continue
        xs = sizes_arr[complete]
        ys = grid_mi[hi, complete]
        for si in partial:
            cell = cells[(hi, si)]
            cell.extrapolated = True
            if len(complete) >= 3:
                spline = CubicSpline(xs, ys, bc_type="natural")
                cell.mean_cost_mi_bps = float(spline(sizes_arr[si]))
            elif len(complete) == 2:
                cell.mean_cost_mi_bps = float(np.interp(
                    sizes_arr[si], xs, ys)) if xs[0] <= sizes_arr[si] <= xs[1] else \
                    float(np.polyval(np.polyfit(xs, ys, 1), sizes_arr[si]))
            # with < 2 complete cells the raw estimate stands, still flagged
    surface.cells = [cells[(hi, si)] for hi in range(len(horizons_steps))
                     for si in range(len(sizes))]
    return surface


# ----------------------------------------------------------------- frontier


@dataclass
class FrontierPoint:
    strategy_id: str
    mean_cost_bps: float
    var_cost_bps2: float
    n_runs: int
    pct_executed: float
    on_envelope: bool = False


def lower_envelope_flags(means, variances) -> list:
    """A strategy is on the lower envelope iff it minimizes E + lambda * V
    for some lambda >= 0 (dense log-grid check)."""
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    winners = set()
    for lam in np.concatenate([[0.0], np.logspace(-9, 9, 1000)]):
        winners.add(int(np.argmin(means + lam * variances)))
    return [i in winners for i in range(len(means))]


def efficient_frontier(setup: MarketSetup, schedules: dict, n_runs: int,
                       master_seed: int, lambda_grid=(0.0, 0.5, 1.0, 2.0),
                       threads: int = 1):
    """Mean/variance of total cost per strategy plus per-lambda minimizers."""
    if len(schedules) < 2:
        raise ConfigurationError("frontier needs at least two strategies")
    tasks = []
    run_index = itertools.count()
    for sid, sched in schedules.items():
        for _ in range(n_runs):
            tasks.append((sid, next(run_index), sched))
    grouped = run_pair_grid(setup, tasks, master_seed, threads=threads)
    points = []
    for sid in schedules:
        recs = [rec for rec, _ in grouped[sid] if not rec.flagged]
        costs = np.array([r.cost_bps for r in recs])
        points.append(FrontierPoint(
            strategy_id=sid,
            mean_cost_bps=float(costs.mean()),
            var_cost_bps2=float(costs.var(ddof=1)),
            n_runs=len(recs),
            pct_executed=float(np.mean([r.executed_fraction for r in recs]))))
    flags = lower_envelope_flags([p.mean_cost_bps for p in points],
                                 [p.var_cost_bps2 for p in points])
    for p, f in zip(points, flags):
        p.on_envelope = f
    winners = {}
    for lam in lambda_grid:
        util = [p.mean_cost_bps + lam * p.var_cost_bps2 for p in points]
        winners[lam] = points[int(np.argmin(util))].strategy_id
    return points, winners


@dataclass
class ImpactCurves:
    mean_impact: np.ndarray
    mean_baseline_mid: np.ndarray
    mean_counterfactual_mid: np.ndarray
    impacts: np.ndarray              # one row per pair
    records: list


def mean_impact_curves(setup: MarketSetup, schedule: ExecutionSchedule,
                       n_pairs: int, master_seed: int,
                       threads: int = 1) -> ImpactCurves:
    """Per-step means over pairs of baseline mid, counterfactual mid, and the
    price impact series (their difference)."""
    tasks = [("impact", r, schedule) for r in range(n_pairs)]
    grouped = run_pair_grid(setup, tasks, master_seed, threads=threads,
                            keep_impact=True)
    rows = grouped["impact"]
    impacts = np.stack([imp[0] for _, imp in rows])
    base = np.stack([imp[1] for _, imp in rows]).mean(axis=0)
    cf = np.stack([imp[2] for _, imp in rows]).mean(axis=0)
    return ImpactCurves(mean_impact=impacts.mean(axis=0),
                        mean_baseline_mid=base,
                        mean_counterfactual_mid=cf,
                        impacts=impacts,
                        records=[rec for rec, _ in rows])
