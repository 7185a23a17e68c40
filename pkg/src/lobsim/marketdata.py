"""Tick-data ingestion and limit order book reconstruction.

The rebuild maintains its own naive price-level book (no matching): New ops
add volume, Cancel ops remove it, and trades from the trades file consume
resting volume FIFO at the traded price. This keeps the reconstruction fully
independent of the matching engine, so replaying the extracted operations
through the engine is a genuine cross-check.

Canonical input schemas (one trading day per file pair):
    orders CSV:  timestamp_ns,order_id,action,side,price,qty
                 action in {new, amend, cancel}; side in {buy, sell}
    trades CSV:  timestamp_ns,price,qty

Trades sharing one timestamp are treated as the fills of a single inferred
market order, with the aggressor side taken from the traded price versus the
prevailing mid (above -> buy, below -> sell, equal -> last mid move, else buy).
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .agents import spread_bucket, time_bucket
from .book import BUY, SELL
from .errors import ConfigurationError, DegenerateDataError
from .session import SessionSpec

ORDER_COLUMNS = ["timestamp_ns", "order_id", "action", "side", "price", "qty"]
TRADE_COLUMNS = ["timestamp_ns", "price", "qty"]

_ACTIONS = {"new": 0, "amend": 1, "cancel": 2}
_SIDES = {"buy": BUY, "sell": SELL, "b": BUY, "s": SELL}


@dataclass
class TickOperations:
    """Parsed limit-order operation stream (column arrays)."""

    timestamp_ns: np.ndarray
    order_id: np.ndarray
    action: np.ndarray          # 0 new, 1 amend, 2 cancel
    side: np.ndarray            # +1 buy, -1 sell
    price: np.ndarray
    qty: np.ndarray
    errors: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.timestamp_ns)


def parse_tick_file(path: str) -> TickOperations:
    """Parse an orders CSV; malformed rows are skipped and counted."""
    if not os.path.exists(path):
        raise ConfigurationError(f"tick file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except Exception as exc:
        raise ConfigurationError(f"unreadable tick file {path}: {exc}") from exc
    if list(df.columns) != ORDER_COLUMNS:
        raise ConfigurationError(
            f"schema mismatch in {path}: expected {ORDER_COLUMNS}, got {list(df.columns)}")
    errors = {"bad_numeric": 0, "bad_action": 0, "bad_side": 0,
              "nonpositive_qty": 0, "unsorted": 0}

    ts = pd.to_numeric(df["timestamp_ns"], errors="coerce")
    oid = pd.to_numeric(df["order_id"], errors="coerce")
    price = pd.to_numeric(df["price"], errors="coerce")
    qty = pd.to_numeric(df["qty"], errors="coerce")
    action = df["action"].str.strip().str.lower().map(_ACTIONS)
    side = df["side"].str.strip().str.lower().map(_SIDES)

    ok = ts.notna() & oid.notna() & price.notna() & qty.notna()
    errors["bad_numeric"] = int((~ok).sum())
    bad_action = action.isna() & ok
    errors["bad_action"] = int(bad_action.sum())
    bad_side = side.isna() & ok & ~bad_action
    errors["bad_side"] = int(bad_side.sum())
    ok &= action.notna() & side.notna()
    bad_qty = ok & (qty <= 0)
    errors["nonpositive_qty"] = int(bad_qty.sum())
    ok &= ~bad_qty

    ops = TickOperations(
        timestamp_ns=ts[ok].to_numpy(dtype=np.int64),
        order_id=oid[ok].to_numpy(dtype=np.int64),
        action=action[ok].to_numpy(dtype=np.int8),
        side=side[ok].to_numpy(dtype=np.int8),
        price=price[ok].to_numpy(dtype=np.int64),
        qty=qty[ok].to_numpy(dtype=np.int64),
        errors=errors,
    )
    if len(ops) and (np.diff(ops.timestamp_ns) < 0).any():
        errors["unsorted"] = int((np.diff(ops.timestamp_ns) < 0).sum())
        order = np.argsort(ops.timestamp_ns, kind="stable")
        for name in ("timestamp_ns", "order_id", "action", "side", "price", "qty"):
            setattr(ops, name, getattr(ops, name)[order])
    return ops


def parse_trades_file(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise ConfigurationError(f"trades file not found: {path}")
    df = pd.read_csv(path)
    if list(df.columns) != TRADE_COLUMNS:
        raise ConfigurationError(
            f"schema mismatch in {path}: expected {TRADE_COLUMNS}, got {list(df.columns)}")
    return df.astype(np.int64)


class _LevelBook:
    """Plain price-level book used for reconstruction (no matching)."""

    __slots__ = ("bids", "asks", "loc")

    def __init__(self):
        self.bids: dict[int, deque] = {}
        self.asks: dict[int, deque] = {}
        self.loc: dict[int, list] = {}     # oid -> [side, price, remaining]

    def add(self, oid, side, price, qty):
        levels = self.bids if side == BUY else self.asks
        levels.setdefault(price, deque()).append(oid)
        self.loc[oid] = [side, price, qty]

    def remove(self, oid):
        rec = self.loc.pop(oid, None)
        if rec is None:
            return 0
        side, price, remaining = rec
        levels = self.bids if side == BUY else self.asks
        q = levels.get(price)
        if q is not None:
            try:
                q.remove(oid)
            except ValueError:
                pass
            if not q:
                del levels[price]
        return remaining

    def shrink(self, oid, new_remaining):
        rec = self.loc.get(oid)
        if rec is not None:
            rec[2] = new_remaining

    def consume_at(self, side, price, qty):
        """FIFO-consume resting volume at one price; returns fills and shortfall."""
        levels = self.bids if side == BUY else self.asks
        q = levels.get(price)
        fills = []
        while qty > 0 and q:
            oid = q[0]
            rec = self.loc[oid]
            take = min(rec[2], qty)
            rec[2] -= take
            qty -= take
            fills.append((oid, take))
            if rec[2] == 0:
                q.popleft()
                del self.loc[oid]
        if q is not None and not q:
            del levels[price]
        return fills, qty

    def best_bid(self):
        return max(self.bids) if self.bids else None

    def best_ask(self):
        return min(self.asks) if self.asks else None

    def volume(self, side, price):
        levels = self.bids if side == BUY else self.asks
        q = levels.get(price)
        if not q:
            return 0
        return sum(self.loc[oid][2] for oid in q)

    def l2(self, depth=10):
        bid_px = sorted(self.bids, reverse=True)[:depth]
        ask_px = sorted(self.asks)[:depth]
        return ([(p, self.volume(BUY, p)) for p in bid_px],
                [(p, self.volume(SELL, p)) for p in ask_px])


@dataclass
class ExtractionResult:
    """Rebuilt L2 series plus the extracted order records for calibration."""

    l2: pd.DataFrame
    limit_orders: pd.DataFrame
    market_orders: pd.DataFrame
    diagnostics: dict

    def save(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        self.l2.to_csv(os.path.join(out_dir, "l2.csv"), index=False)
        self.limit_orders.to_csv(os.path.join(out_dir, "limit_orders.csv"), index=False)
        self.market_orders.to_csv(os.path.join(out_dir, "market_orders.csv"), index=False)

    @classmethod
    def load(cls, out_dir: str) -> "ExtractionResult":
        paths = {name: os.path.join(out_dir, f"{name}.csv")
                 for name in ("l2", "limit_orders", "market_orders")}
        for name, p in paths.items():
            if not os.path.exists(p):
                raise ConfigurationError(f"extraction artifact missing: {p}")
        return cls(l2=pd.read_csv(paths["l2"]),
                   limit_orders=pd.read_csv(paths["limit_orders"]),
                   market_orders=pd.read_csv(paths["market_orders"]),
                   diagnostics={})


def _l2_columns(depth=10):
    cols = ["ts_ns"]
    cols += [f"bid_px_{i}" for i in range(1, depth + 1)]
    cols += [f"bid_qty_{i}" for i in range(1, depth + 1)]
    cols += [f"ask_px_{i}" for i in range(1, depth + 1)]
    cols += [f"ask_qty_{i}" for i in range(1, depth + 1)]
    return cols


def rebuild_book(ops: TickOperations, trades: pd.DataFrame,
                 session: SessionSpec, depth: int = 10) -> ExtractionResult:
    """Rebuild the book and extract calibration records.

    Emits one L2 row per event (operation or inferred market order). Limit
    orders are annotated with depth from the opposite best, spread and minute
    at submission, and duration in steps until cancel or full fill (orders
    alive at the end are censored at the last event's step).
    """
    trade_ts = trades["timestamp_ns"].to_numpy(dtype=np.int64)
    trade_px = trades["price"].to_numpy(dtype=np.int64)
    trade_qty = trades["qty"].to_numpy(dtype=np.int64)
    op_steps = session.step_of_timestamp_ns(ops.timestamp_ns)
    trade_steps = session.step_of_timestamp_ns(trade_ts)
    minute_of_step = session.minute_of_step()

    book = _LevelBook()
    diagnostics = {"stale_ops": 0, "crossed_new": 0, "trade_mismatch": 0,
                   "unanchored_skipped": 0}

    # open limit-order records: oid -> [submit_step, side, price, depth, qty,
    #                                   spread, minute, remaining]
    open_rec: dict[int, list] = {}
    limit_rows = []
    market_rows = []
    l2_rows = []
    last_mid = None
    last_spread = None
    last_move = 0

    def bests():
        return book.best_bid(), book.best_ask()

    def mid_spread():
        nonlocal last_mid, last_spread
        bb, ba = bests()
        if bb is not None and ba is not None:
            last_mid = (bb + ba) / 2.0
            last_spread = ba - bb
        return last_mid, last_spread

    def snapshot(ts):
        bid_levels, ask_levels = book.l2(depth)
        row = np.zeros(1 + 4 * depth, dtype=np.int64)
        row[0] = ts
        for i, (p, v) in enumerate(bid_levels):
            row[1 + i] = p
            row[1 + depth + i] = v
        for i, (p, v) in enumerate(ask_levels):
            row[1 + 2 * depth + i] = p
            row[1 + 3 * depth + i] = v
        l2_rows.append(row)

    def close_record(oid, step):
        rec = open_rec.pop(oid, None)
        if rec is None:
            return
        submit_step, side, price, dp, qty, spread, minute, _rem, ts = rec
        limit_rows.append((ts, submit_step, side, price, dp, qty,
                           max(0, step - submit_step), spread, minute))

    def open_record(oid, step, side, price, qty, ts):
        bb, ba = bests()
        if bb is None or ba is None:
            diagnostics["unanchored_skipped"] += 1
            return
        dp = ba - price if side == BUY else price - bb
        mid, spread = last_mid, last_spread
        if spread is None:
            diagnostics["unanchored_skipped"] += 1
            return
        minute = int(minute_of_step[step])
        open_rec[oid] = [step, side, price, dp, qty, spread, minute, qty, ts]

    n_ops = len(ops)
    n_trades = len(trade_ts)
    i = j = 0
    last_step = 0
    while i < n_ops or j < n_trades:
        take_op = j >= n_trades or (i < n_ops and ops.timestamp_ns[i] <= trade_ts[j])
        if take_op:
            ts = int(ops.timestamp_ns[i])
            step = int(op_steps[i])
            last_step = step
            action = ops.action[i]
            oid = int(ops.order_id[i])
            side = int(ops.side[i])
            price = int(ops.price[i])
            qty = int(ops.qty[i])
            mid_spread()
            if action == 0:      # new
                bb, ba = bests()
                if side == BUY and ba is not None and price >= ba:
                    diagnostics["crossed_new"] += 1
                elif side == SELL and bb is not None and price <= bb:
                    diagnostics["crossed_new"] += 1
                open_record(oid, step, side, price, qty, ts)
                book.add(oid, side, price, qty)
            elif action == 2:    # cancel
                if oid in book.loc:
                    book.remove(oid)
                    close_record(oid, step)
                else:
                    diagnostics["stale_ops"] += 1
            else:                # amend: shrink keeps the record, else re-enter
                rec = book.loc.get(oid)
                if rec is None:
                    diagnostics["stale_ops"] += 1
                else:
                    old_side, old_price, old_rem = rec
                    if price == old_price and qty <= old_rem:
                        book.shrink(oid, qty)
                        if oid in open_rec:
                            open_rec[oid][7] = qty
                    else:
                        book.remove(oid)
                        close_record(oid, step)
                        open_record(oid, step, old_side, price, qty, ts)
                        book.add(oid, old_side, price, qty)
            snapshot(ts)
            i += 1
        else:
            # one inferred market order: all trades sharing this timestamp
            ts = int(trade_ts[j])
            step = int(trade_steps[j])
            last_step = step
            k = j
            while k < n_trades and trade_ts[k] == ts:
                k += 1
            mid, spread = mid_spread()
            first_px = int(trade_px[j])
            if mid is None:
                aggressor = BUY
            elif first_px > mid:
                aggressor = BUY
            elif first_px < mid:
                aggressor = SELL
            else:
                aggressor = BUY if last_move >= 0 else SELL
            maker_side = SELL if aggressor == BUY else BUY
            total = 0
            for idx in range(j, k):
                px = int(trade_px[idx])
                q = int(trade_qty[idx])
                total += q
                fills, short = book.consume_at(maker_side, px, q)
                if short:
                    diagnostics["trade_mismatch"] += 1
                for oid, _take in fills:
                    if oid not in book.loc:      # fully filled
                        close_record(oid, step)
            minute = int(minute_of_step[step])
            market_rows.append((ts, step, aggressor, total,
                                spread if spread is not None else 0,
                                minute))
            new_mid, _ = mid_spread()
            if mid is not None and new_mid is not None:
                if new_mid > mid:
                    last_move = 1
                elif new_mid < mid:
                    last_move = -1
            snapshot(ts)
            j = k

    # censor records still open at the end of the data
    for oid in list(open_rec):
        close_record(oid, last_step)

    l2 = pd.DataFrame(np.vstack(l2_rows) if l2_rows else
                      np.zeros((0, 1 + 4 * depth), dtype=np.int64),
                      columns=_l2_columns(depth))
    limit_orders = pd.DataFrame(
        limit_rows, columns=["submit_ts_ns", "submit_step", "side", "price",
                             "depth", "volume", "duration_steps", "spread",
                             "minute"])
    market_orders = pd.DataFrame(
        market_rows, columns=["ts_ns", "step", "side", "volume", "spread",
                              "minute"])
    if not limit_orders.empty:
        limit_orders = limit_orders.astype(np.int64)
    if not market_orders.empty:
        market_orders = market_orders.astype(np.int64)
    return ExtractionResult(l2=l2, limit_orders=limit_orders,
                            market_orders=market_orders,
                            diagnostics=diagnostics)


def l2_mid_series(l2: pd.DataFrame, session: SessionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Resample per-event L2 rows to the per-step (mid, spread) grid.

    Steps before the first event carry the first valid values; later steps
    carry the last event at or before them.
    """
    if l2.empty:
        raise DegenerateDataError("empty L2 series")
    ts = l2["ts_ns"].to_numpy(dtype=np.int64)
    bb = l2["bid_px_1"].to_numpy(dtype=np.float64)
    ba = l2["ask_px_1"].to_numpy(dtype=np.float64)
    valid = (bb > 0) & (ba > 0)
    mid = np.where(valid, 0.5 * (bb + ba), np.nan)
    spread = np.where(valid, ba - bb, np.nan)
    # forward-fill invalid rows
    mid = pd.Series(mid).ffill().bfill().to_numpy()
    spread = pd.Series(spread).ffill().bfill().to_numpy()
    steps = session.step_of_timestamp_ns(ts)
    grid_mid = np.empty(session.steps_per_day)
    grid_spread = np.empty(session.steps_per_day)
    idx = np.searchsorted(steps, np.arange(session.steps_per_day), side="right") - 1
    idx = np.clip(idx, 0, len(steps) - 1)
    grid_mid[:] = mid[idx]
    grid_spread[:] = spread[idx]
    return grid_mid, grid_spread
