"""Meta-order slicing and the execution agent.

A meta-order (side, total size, start, horizon, strategy) becomes a timed
schedule of child market orders. During a counterfactual run the execution
agent submits each due slice; whatever the book cannot fill is recorded as
residual, never re-queued, so cost stays comparable across runs while the
executed fraction reports completeness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .book import BUY, SELL, Order
from .errors import ConfigurationError

EXEC_AGENT_ID = -2


@dataclass(frozen=True)
class MetaOrder:
    side: int                  # BUY or SELL
    quantity: int
    start_step: int
    horizon_steps: int
    strategy_id: str = "meta"

    def __post_init__(self):
        if self.quantity <= 0:
            raise ConfigurationError("meta-order quantity must be positive")
        if self.horizon_steps < 1:
            raise ConfigurationError("meta-order horizon must be >= 1 step")
        if self.side not in (BUY, SELL):
            raise ConfigurationError("meta-order side must be BUY or SELL")


@dataclass(frozen=True)
class ExecutionSchedule:
    """Ordered (step, quantity) market-order slices; residuals are dropped."""

    side: int
    slices: tuple            # ((step, qty), ...) sorted by step
    strategy_id: str = "meta"

    @property
    def total(self) -> int:
        return sum(q for _, q in self.slices)

    def as_dict(self) -> dict:
        return dict(self.slices)

    def validate_within(self, start_step: int, horizon_steps: int):
        for step, qty in self.slices:
            if qty <= 0:
                raise ConfigurationError("schedule slice quantities must be positive")
            if not (start_step <= step <= start_step + horizon_steps):
                raise ConfigurationError("schedule slice outside the meta-order horizon")


def largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Exact by construction: floors plus the largest fractional remainders
    (ties broken by earlier index).
    """
    weights = np.asarray(weights, dtype=np.float64)
    if total == 0 or len(weights) == 0:
        return np.zeros(len(weights), dtype=np.int64)
    wsum = weights.sum()
    if wsum <= 0:
        weights = np.ones(len(weights))
        wsum = float(len(weights))
    exact = total * weights / wsum
    base = np.floor(exact).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        frac = exact - base
        order = np.lexsort((np.arange(len(frac)), -frac))
        base[order[:short]] += 1
    return base


def build_uniform_schedule(meta: MetaOrder, interval_steps: int) -> ExecutionSchedule:
    """Equal slices at fixed intervals; any remainder goes to the earliest slices."""
    if interval_steps <= 0:
        raise ConfigurationError("slice interval must be positive")
    n_slices = max(1, meta.horizon_steps // interval_steps)
    n_slices = min(n_slices, meta.quantity)
    base, rem = divmod(meta.quantity, n_slices)
    slices = []
    for i in range(n_slices):
        qty = base + (1 if i < rem else 0)
        if qty > 0:
            slices.append((meta.start_step + i * interval_steps, qty))
    return ExecutionSchedule(meta.side, tuple(slices), meta.strategy_id)


def build_vwap_slices(day_quantity: int, volume_per_minute: np.ndarray,
                      session, slice_seconds: int = 5,
                      first_minute_index: int = 0) -> list:
    """Slice one day's quantity every ``slice_seconds``, proportional to the
    historical per-minute market volume profile (uniform fallback when the
    profile is flat zero). Returns [(day_step, qty), ...] summing exactly.
    """
    if slice_seconds <= 0 or slice_seconds > 60 or 60 % slice_seconds != 0:
        raise ConfigurationError("slice_seconds must divide one minute")
    volume_per_minute = np.asarray(volume_per_minute, dtype=np.float64)
    per_min = volume_per_minute[first_minute_index:]
    bins_per_minute = 60 // slice_seconds
    weights = np.repeat(per_min / bins_per_minute, bins_per_minute)
    qtys = largest_remainder(day_quantity, weights)
    steps_per_slice = slice_seconds * session.steps_per_second
    start = first_minute_index * session.steps_per_minute
    return [(start + i * steps_per_slice, int(q))
            for i, q in enumerate(qtys) if q > 0]


def build_daily_schedule(meta: MetaOrder, daily_fractions, session,
                         volume_per_minute: np.ndarray,
                         slice_seconds: int = 5) -> ExecutionSchedule:
    """Spread the meta-order over consecutive days, each day executed
    intraday by the VWAP slicer.

    ``meta.start_step`` must lie within day 0; the first day's slices start
    at that step's minute.
    """
    fractions = np.asarray(daily_fractions, dtype=np.float64)
    if abs(fractions.sum() - 1.0) > 1e-9:
        raise ConfigurationError(f"daily fractions must sum to 1, got {fractions.sum()!r}")
    if (fractions < 0).any():
        raise ConfigurationError("daily fractions must be non-negative")
    spd = session.steps_per_day
    if not 0 <= meta.start_step < spd:
        raise ConfigurationError("meta-order start must fall on day 0")
    daily_qty = largest_remainder(meta.quantity, fractions)
    start_minute = meta.start_step // session.steps_per_minute
    slices = []
    for day, qty in enumerate(daily_qty):
        if qty == 0:
            continue
        first_minute = start_minute if day == 0 else 0
        day_slices = build_vwap_slices(int(qty), volume_per_minute, session,
                                       slice_seconds, first_minute_index=first_minute)
        offset = day * spd
        slices.extend((offset + s, q) for s, q in day_slices)
    return ExecutionSchedule(meta.side, tuple(slices), meta.strategy_id)


@dataclass
class ExecutionRecord:
    """Fill-by-fill outcome of one executed schedule."""

    strategy_id: str
    side: int
    total_quantity: int
    fill_steps: np.ndarray
    fill_prices: np.ndarray
    fill_qtys: np.ndarray
    residual: int

    @property
    def executed_quantity(self) -> int:
        return int(self.fill_qtys.sum())

    @property
    def executed_fraction(self) -> float:
        return self.executed_quantity / self.total_quantity


class ExecutionAgent:
    """Submits due schedule slices as market orders; placed last in the agent
    order so it reacts to same-step book state. Consumes no randomness."""

    __slots__ = ("side", "strategy_id", "total", "_due", "fill_steps",
                 "fill_prices", "fill_qtys", "residual")

    def __init__(self, schedule: ExecutionSchedule):
        self.side = schedule.side
        self.strategy_id = schedule.strategy_id
        self.total = schedule.total
        self._due = schedule.as_dict()
        self.fill_steps: list = []
        self.fill_prices: list = []
        self.fill_qtys: list = []
        self.residual = 0

    def step(self, t: int, book, next_order_id: int):
        """Returns (next_order_id, trades or None)."""
        qty = self._due.get(t)
        if qty is None:
            return next_order_id, None
        next_order_id += 1
        order = Order(next_order_id, EXEC_AGENT_ID, self.side, None, qty, t,
                      is_market=True)
        trades = book.submit_market(order, t)
        for tr in trades:
            self.fill_steps.append(tr.step)
            self.fill_prices.append(tr.price)
            self.fill_qtys.append(tr.quantity)
        self.residual += order.remaining
        return next_order_id, trades

    def record(self) -> ExecutionRecord:
        return ExecutionRecord(
            strategy_id=self.strategy_id,
            side=self.side,
            total_quantity=self.total,
            fill_steps=np.asarray(self.fill_steps, dtype=np.int64),
            fill_prices=np.asarray(self.fill_prices, dtype=np.int64),
            fill_qtys=np.asarray(self.fill_qtys, dtype=np.int64),
            residual=self.residual,
        )
