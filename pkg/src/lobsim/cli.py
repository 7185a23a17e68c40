"""Command-line entry point.

Commands: ingest, calibrate, simulate, impact, surface, frontier, config.
Every command is a pure function of (config file, seed, input files); reruns
write byte-identical CSV artifacts. Exit codes: 0 success, 1 degenerate-data
error, 2 usage/IO error.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time

import click
import numpy as np
import pandas as pd

from . import __version__
from .book import write_event_log
from .bundle import CalibrationBundle
from .calibration import (build_distributions, calibrate_chiarella,
                          estimate_rates, extract_fundamental_proxy,
                          fit_impact_from_extraction, market_volume_profile)
from .agents import ChiarellaParams
from .config import EXAMPLE_CONFIG, RunConfig, schedule_from_spec
from .errors import ConfigurationError, DegenerateDataError, LobsimError
from .marketdata import (ExtractionResult, l2_mid_series, parse_tick_file,
                         parse_trades_file, rebuild_book)
from .risk import (BloombergTCParams, SeedSet, build_surface,
                   efficient_frontier, market_setup_from_bundle,
                   mean_impact_curves, run_market)
from .stylized import compute_stylized_facts

EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _stamp(cfg: RunConfig) -> str:
    return f"# master_seed={cfg.seed} config={cfg.config_hash}\n"


def _write_csv(df: pd.DataFrame, path: str, cfg: RunConfig):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(_stamp(cfg))
        df.to_csv(fh, index=False)
    return path


def _manifest(cfg: RunConfig, command: str, outputs: list, t0: float):
    meta = {
        "command": command,
        "config_hash": cfg.config_hash,
        "master_seed": cfg.seed,
        "versions": {
            "lobsim": __version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": outputs,
    }
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"manifest_{command}.json")
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _load_config(path: str, seed, threads, out) -> RunConfig:
    cfg = RunConfig.from_file(path)
    if seed is not None:
        cfg.raw["seed"] = int(seed)
    if threads is not None:
        cfg.raw["threads"] = int(threads)
    if out is not None:
        cfg.raw["out_dir"] = out
    return cfg


def _config_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="YAML run configuration.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the master seed.")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker process cap for parallel runs.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Override the output directory.")(fn)
    return fn


@click.group()
def main():
    """Agent-based limit order book simulator and liquidity risk calculator."""


@main.command("config")
@click.option("--example", is_flag=True, help="Print a fully documented example config.")
def config_cmd(example):
    """Configuration helpers."""
    if example:
        click.echo(EXAMPLE_CONFIG, nl=False)
    else:
        raise click.UsageError("nothing to do; try --example")


@main.command()
@_config_options
def ingest(config_path, seed, threads, out):
    """Parse tick files, rebuild the book, write extraction artifacts."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    data = cfg.section("data", required=True)
    section = cfg.section("ingest")
    out_dir = section.get("out_dir", os.path.join(cfg.out_dir, "extraction"))
    session = cfg.session()
    ops = parse_tick_file(str(data.get("orders_csv", "")))
    trades = parse_trades_file(str(data.get("trades_csv", "")))
    result = rebuild_book(ops, trades, session)
    result.save(out_dir)
    report = {"parse_errors": ops.errors, "diagnostics": result.diagnostics,
              "n_ops": len(ops), "n_trades": int(len(trades)),
              "n_limit_records": int(len(result.limit_orders)),
              "n_market_records": int(len(result.market_orders))}
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _manifest(cfg, "ingest", [out_dir], t0)
    click.echo(f"extraction written to {out_dir}")


def _historical_facts(extraction: ExtractionResult, session, cfg):
    mid, spread = l2_mid_series(extraction.l2, session)
    rates = estimate_rates(extraction.limit_orders, extraction.market_orders, session)
    signs = extraction.market_orders["side"].to_numpy(dtype=np.float64)
    return compute_stylized_facts(mid, spread, rates.alpha, rates.mu, signs,
                                  session.steps_per_second), mid, spread, rates


@main.command()
@_config_options
def calibrate(config_path, seed, threads, out):
    """Fit every model input from an extraction directory."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    section = cfg.section("calibrate", required=True)
    extraction = ExtractionResult.load(
        str(section.get("extraction_dir", os.path.join(cfg.out_dir, "extraction"))))
    bundle_dir = str(section.get("bundle_dir", os.path.join(cfg.out_dir, "bundle")))
    session = cfg.session()

    facts_hist, mid, spread, rates = _historical_facts(extraction, session, cfg)
    volume_profile = market_volume_profile(extraction.market_orders, session)
    placement = build_distributions(extraction.limit_orders, extraction.market_orders)
    impact = fit_impact_from_extraction(extraction.market_orders, mid,
                                        session.steps_per_second,
                                        min_windows=int(section.get("impact_min_windows", 100)))
    signed = (extraction.market_orders["side"]
              * extraction.market_orders["volume"]).to_numpy(dtype=np.float64)
    v_hat, sigma_v = extract_fundamental_proxy(
        mid, impact, extraction.market_orders["step"].to_numpy(), signed)

    row0 = extraction.l2.iloc[0]
    opening = []
    for i in range(1, 11):
        if row0[f"bid_px_{i}"] > 0:
            opening.append((1, int(row0[f"bid_px_{i}"]), int(row0[f"bid_qty_{i}"])))
        if row0[f"ask_px_{i}"] > 0:
            opening.append((-1, int(row0[f"ask_px_{i}"]), int(row0[f"ask_qty_{i}"])))

    r1min = np.diff(mid[::session.steps_per_minute])
    sigma_daily = float(r1min.std(ddof=1) * math.sqrt(session.minutes_per_day))
    adv = float(extraction.market_orders["volume"].sum())

    chiarella = ChiarellaParams(**{k: float(v) for k, v in
                                   section.get("chiarella", {}).items()}) \
        if section.get("chiarella") else ChiarellaParams()
    budget = int(section.get("surrogate_budget", 0))
    eval_log = None
    if budget > 0:
        from .risk import market_setup_from_bundle as _setup
        from .simulator import chiarella_agent_specs, MarketSetup

        alpha_step, mu_step = rates.step_arrays(session)

        def simulate_facts(params, run_seed):
            setup = MarketSetup(
                session=session, agents=chiarella_agent_specs(params),
                placement=placement, alpha_step=alpha_step, mu_step=mu_step,
                opening_book=opening, v0=float(v_hat[0]), sigma_v=sigma_v,
                impact_lam=impact.lam, impact_gam=impact.gam)
            res = run_market(setup, SeedSet(cfg.seed, run_seed))
            return compute_stylized_facts(
                res.mid, res.spread, res.minute_limit_count,
                res.minute_market_count, res.market_order_sign,
                session.steps_per_second, grids=facts_hist.grids)

        bounds = {k: tuple(v) for k, v in section.get("bounds", {}).items()}
        result = calibrate_chiarella(
            facts_hist, simulate_facts, bounds=bounds, budget=budget,
            seed=cfg.seed, n_seeds=int(section.get("surrogate_seeds", 3)),
            eta_h=chiarella.eta_h, eta_l=chiarella.eta_l)
        chiarella = result.params
        eval_log = result.log_frame()
    else:
        click.echo("warning: surrogate_budget is 0; carrying configured "
                   "behavioural parameters unchanged", err=True)

    bundle = CalibrationBundle(
        session=session, tick_size=cfg.tick_size, rates=rates,
        placement=placement, impact=impact, chiarella=chiarella,
        v0=float(v_hat[0]), sigma_v=sigma_v, opening_book=opening,
        vwap_volume=volume_profile, v_hat=v_hat, adv=adv,
        sigma_daily=sigma_daily, eval_log=eval_log)
    bundle.save(bundle_dir)
    _manifest(cfg, "calibrate", [bundle_dir], t0)
    click.echo(f"calibration bundle written to {bundle_dir}")


def _bundle_and_setup(cfg: RunConfig, n_days: int = 1):
    sim = cfg.section("simulate")
    bundle_dir = str(sim.get("bundle_dir", os.path.join(cfg.out_dir, "bundle")))
    bundle = CalibrationBundle.load(bundle_dir)
    counts = sim.get("agent_counts")
    warmup = int(sim.get("warmup_steps", 1000))
    setup = market_setup_from_bundle(bundle, n_days=n_days, counts=counts,
                                     warmup_steps=warmup)
    return bundle, setup


@main.command()
@_config_options
def simulate(config_path, seed, threads, out):
    """One full simulation run; writes the mid-price path (and fills)."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    sim = cfg.section("simulate")
    n_days = int(sim.get("n_days", 1))
    bundle, setup = _bundle_and_setup(cfg, n_days=n_days)
    schedule = None
    strat = cfg.section("strategy")
    if strat and int(strat.get("quantity", 0)) > 0:
        schedule = schedule_from_spec(strat, bundle.session, bundle.vwap_volume,
                                      n_days=n_days)
    record_events = bool(sim.get("record_events", False))
    res = run_market(setup, SeedSet(cfg.seed, 0), schedule=schedule,
                     record_events=record_events)
    outputs = []
    path_df = pd.DataFrame({
        "step": np.arange(res.n_steps), "mid": res.mid,
        "best_bid": res.best_bid, "best_ask": res.best_ask,
        "spread": res.spread})
    outputs.append(_write_csv(path_df, os.path.join(cfg.out_dir, "path.csv"), cfg))
    if schedule is not None and res.execution is not None:
        rec = res.execution
        fills = pd.DataFrame({"run_id": 0, "step": rec.fill_steps,
                              "price": rec.fill_prices, "qty": rec.fill_qtys})
        outputs.append(_write_csv(fills, os.path.join(cfg.out_dir, "fills.csv"), cfg))
    if record_events:
        ev_path = os.path.join(cfg.out_dir, "events.csv")
        write_event_log(res.events, ev_path)
        outputs.append(ev_path)
    _manifest(cfg, "simulate", outputs, t0)
    click.echo(f"simulation outputs written to {cfg.out_dir}")


@main.command()
@_config_options
def impact(config_path, seed, threads, out):
    """Mean baseline/counterfactual mid curves over paired runs."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    section = cfg.section("impact")
    n_pairs = int(section.get("n_pairs", 50))
    post = int(section.get("post_horizon_steps", 15000))
    strategies = section.get("strategies")
    if not strategies:
        strategies = {"meta": cfg.section("strategy", required=True)}
    frames = []
    max_day = 1
    bundle, _ = _bundle_and_setup(cfg)
    scheds = {}
    for sid, spec in strategies.items():
        sched = schedule_from_spec(spec, bundle.session, bundle.vwap_volume,
                                   strategy_id=str(sid))
        scheds[sid] = sched
        last = max(s for s, _ in sched.slices)
        max_day = max(max_day, (last + post) // bundle.session.steps_per_day + 1)
    _, setup = _bundle_and_setup(cfg, n_days=max_day)
    for sid, sched in scheds.items():
        curves = mean_impact_curves(setup, sched, n_pairs, cfg.seed,
                                    threads=cfg.threads)
        first = min(s for s, _ in sched.slices)
        last = max(s for s, _ in sched.slices)
        lo = max(0, first - 1000)
        hi = min(setup.n_steps, last + post)
        steps = np.arange(lo, hi)
        frames.append(pd.DataFrame({
            "strategy_id": str(sid), "step": steps,
            "mid_baseline": curves.mean_baseline_mid[lo:hi],
            "mid_counterfactual": curves.mean_counterfactual_mid[lo:hi],
            "impact_ticks": curves.mean_impact[lo:hi]}))
    out_path = _write_csv(pd.concat(frames, ignore_index=True),
                          os.path.join(cfg.out_dir, "impact.csv"), cfg)
    _manifest(cfg, "impact", [out_path], t0)
    click.echo(f"impact curves written to {out_path}")


@main.command()
@_config_options
def surface(config_path, seed, threads, out):
    """Liquidity risk surface over a (horizon x size) grid."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    section = cfg.section("surface", required=True)
    horizons_s = section.get("horizons_s", [60, 300])
    sizes = section.get("sizes", [500, 1000])
    n_runs = int(section.get("n_runs", 50))
    start = int(section.get("start", 30000))
    interval_s = float(section.get("interval_s", 5))
    bundle, _ = _bundle_and_setup(cfg)
    sps = bundle.session.steps_per_second
    horizons = [int(h * sps) for h in horizons_s]
    n_days = (start + max(horizons) + 1000) // bundle.session.steps_per_day + 1
    _, setup = _bundle_and_setup(cfg, n_days=n_days)
    bb_cfg = cfg.section("bloomberg")
    bloomberg = None
    if bb_cfg:
        bloomberg = BloombergTCParams(sigma_daily=float(bb_cfg["sigma_daily"]),
                                      adv=float(bb_cfg["adv"]),
                                      spread=float(bb_cfg["spread"]))
    surf = build_surface(setup, horizons, sizes, n_runs, cfg.seed,
                         start_step=start,
                         interval_steps=max(1, int(interval_s * sps)),
                         threads=cfg.threads, bloomberg=bloomberg)
    df = pd.DataFrame(list(surf.rows()))
    out_path = _write_csv(df, os.path.join(cfg.out_dir, "surface.csv"), cfg)
    _manifest(cfg, "surface", [out_path], t0)
    click.echo(f"surface written to {out_path}")


@main.command()
@_config_options
def frontier(config_path, seed, threads, out):
    """Mean/variance frontier across execution strategies."""
    t0 = time.time()
    cfg = _load_config(config_path, seed, threads, out)
    section = cfg.section("frontier", required=True)
    n_runs = int(section.get("n_runs", 50))
    n_days = int(section.get("n_days", 5))
    quantity = int(section.get("quantity", 3000))
    start = int(section.get("start", 30000))
    lambda_grid = [float(x) for x in section.get("lambda_grid", [0.0, 1.0])]
    strategies = section.get("strategies")
    if not strategies or len(strategies) < 2:
        raise ConfigurationError("frontier needs >= 2 strategies in config")
    bundle, setup = _bundle_and_setup(cfg, n_days=n_days)
    schedules = {
        str(sid): schedule_from_spec(spec, bundle.session, bundle.vwap_volume,
                                     strategy_id=str(sid), n_days=n_days,
                                     quantity=quantity, start=start)
        for sid, spec in strategies.items()}
    points, winners = efficient_frontier(setup, schedules, n_runs, cfg.seed,
                                         lambda_grid=lambda_grid,
                                         threads=cfg.threads)
    df = pd.DataFrame([{
        "strategy_id": p.strategy_id, "mean_cost_bps": p.mean_cost_bps,
        "var_cost_bps2": p.var_cost_bps2, "n_runs": p.n_runs,
        "pct_executed": p.pct_executed, "on_envelope": p.on_envelope}
        for p in points])
    out_path = _write_csv(df, os.path.join(cfg.out_dir, "frontier.csv"), cfg)
    lam_df = pd.DataFrame([{"lambda_risk": lam, "strategy_id": sid}
                           for lam, sid in winners.items()])
    lam_path = _write_csv(lam_df, os.path.join(cfg.out_dir, "frontier_lambda.csv"), cfg)
    _manifest(cfg, "frontier", [out_path, lam_path], t0)
    click.echo(f"frontier written to {out_path}")


def entrypoint(argv=None) -> int:
    """Console entry with the documented exit-code mapping."""
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except ConfigurationError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except DegenerateDataError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN
    except LobsimError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(entrypoint())
