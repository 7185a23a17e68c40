"""Continuous double auction with price-time priority.

Buy and sell limit order books are kept as price -> FIFO level maps with lazy
best-price heaps. All prices are integer tick counts; quantities are integer
contract counts. Matching follows strict price-time priority and trades are
priced at the resting (earlier) order. Unmatched market order quantity is
cancelled, never queued.

The engine is a deterministic single-threaded state machine: an identical
event sequence produces bit-identical trades, events and snapshots.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field

BUY = 1
SELL = -1

# event type tags used in the engine event log
EV_LIMIT = "limit"
EV_MARKET = "market"
EV_TRADE = "trade"
EV_QUEUE = "queue"
EV_CANCEL = "cancel"
EV_EXPIRE = "expire"
EV_AMEND = "amend"
EV_REJECT = "reject"
EV_STALE = "stale"
EV_MARKET_CANCEL = "market_cancel"


def side_name(side: int) -> str:
    return "buy" if side == BUY else "sell"


class Order:
    """A limit or market order.

    ``remaining`` tracks the unfilled quantity; a resting order with
    ``remaining == 0`` is dead and skipped lazily during matching.
    """

    __slots__ = ("order_id", "agent_id", "side", "price", "quantity",
                 "remaining", "submit_step", "expiry_step", "is_market")

    def __init__(self, order_id: int, agent_id: int, side: int, price: int | None,
                 quantity: int, submit_step: int, expiry_step: int | None = None,
                 is_market: bool = False):
        self.order_id = order_id
        self.agent_id = agent_id
        self.side = side
        self.price = price
        self.quantity = quantity
        self.remaining = quantity
        self.submit_step = submit_step
        self.expiry_step = expiry_step
        self.is_market = is_market

    @property
    def kind(self) -> str:
        return "market" if self.is_market else "limit"

    def __repr__(self):  # pragma: no cover - debugging aid
        return (f"Order({self.order_id}, {side_name(self.side)}, px={self.price}, "
                f"qty={self.quantity}, rem={self.remaining})")


class Trade:
    """A single fill. Priced at the resting (maker) order."""

    __slots__ = ("price", "quantity", "aggressor_side", "maker_order_id",
                 "taker_order_id", "step")

    def __init__(self, price: int, quantity: int, aggressor_side: int,
                 maker_order_id: int, taker_order_id: int, step: int):
        self.price = price
        self.quantity = quantity
        self.aggressor_side = aggressor_side
        self.maker_order_id = maker_order_id
        self.taker_order_id = taker_order_id
        self.step = step

    def astuple(self):
        return (self.price, self.quantity, self.aggressor_side,
                self.maker_order_id, self.taker_order_id, self.step)

    def __eq__(self, other):
        return isinstance(other, Trade) and self.astuple() == other.astuple()

    def __repr__(self):  # pragma: no cover
        return (f"Trade(px={self.price}, qty={self.quantity}, "
                f"aggr={side_name(self.aggressor_side)}, maker={self.maker_order_id}, "
                f"taker={self.taker_order_id}, step={self.step})")


class _Level:
    """One price level: FIFO queue of resting orders plus cached live volume."""

    __slots__ = ("queue", "volume")

    def __init__(self):
        self.queue = deque()
        self.volume = 0


@dataclass
class L2Snapshot:
    """Top-of-book snapshot: up to ``depth`` (price, volume) pairs per side.

    ``mid``/``spread`` carry the last valid values (flagged via ``carried``)
    when either side is empty; ``best_bid``/``best_ask`` are None for an
    empty side.
    """

    step: int
    bids: list = field(default_factory=list)   # (price, volume), descending
    asks: list = field(default_factory=list)   # (price, volume), ascending
    best_bid: int | None = None
    best_ask: int | None = None
    mid: float | None = None
    spread: int | None = None
    carried: bool = False


class OrderBook:
    """Matching engine for one instrument.

    Parameters
    ----------
    record_events:
        When True, every engine event is appended to ``self.events`` as a
        ``(step, event_type, order_id, agent_id, side, price, qty)`` tuple.
    track_duplicates:
        When True (default) submissions reusing any previously seen order id
        are rejected. The simulator disables this since its ids come from a
        private counter.
    """

    def __init__(self, record_events: bool = False, track_duplicates: bool = True):
        self.bids: dict[int, _Level] = {}
        self.asks: dict[int, _Level] = {}
        self._bid_heap: list[int] = []   # negated prices
        self._ask_heap: list[int] = []
        self.index: dict[int, Order] = {}
        self._expiry_heap: list = []     # (expiry_step, tiebreak, Order)
        self._expiry_seq = itertools.count()
        self.record_events = record_events
        self.events: list[tuple] = []
        self._track_duplicates = track_duplicates
        self._seen_ids: set[int] = set()
        self._last_mid: float | None = None
        self._last_spread: int | None = None

    # ------------------------------------------------------------------ events

    def _event(self, step, etype, order_id, agent_id, side, price, qty):
        if self.record_events:
            self.events.append((step, etype, order_id, agent_id, side, price, qty))

    # ------------------------------------------------------------------ bests

    def best_bid(self) -> int | None:
        heap = self._bid_heap
        bids = self.bids
        while heap:
            p = -heap[0]
            if p in bids:
                return p
            heapq.heappop(heap)
        return None

    def best_ask(self) -> int | None:
        heap = self._ask_heap
        asks = self.asks
        while heap:
            p = heap[0]
            if p in asks:
                return p
            heapq.heappop(heap)
        return None

    # ------------------------------------------------------------------ admission

    def _reject(self, order: Order, step: int) -> bool:
        """True if the order must be rejected (duplicate id / bad quantity)."""
        if order.quantity <= 0:
            self._event(step, EV_REJECT, order.order_id, order.agent_id,
                        order.side, order.price, order.quantity)
            return True
        if self._track_duplicates:
            if order.order_id in self._seen_ids:
                self._event(step, EV_REJECT, order.order_id, order.agent_id,
                            order.side, order.price, order.quantity)
                return True
            self._seen_ids.add(order.order_id)
        return False

    # ------------------------------------------------------------------ matching

    def _match(self, order: Order, step: int, limit_price: int | None) -> list[Trade]:
        """Fill ``order`` against the opposite side while it crosses.

        ``limit_price`` None means a market order (no price bound).
        """
        trades: list[Trade] = []
        side = order.side
        if side == BUY:
            levels, get_best = self.asks, self.best_ask
        else:
            levels, get_best = self.bids, self.best_bid
        rem = order.remaining
        index = self.index
        while rem > 0:
            best = get_best()
            if best is None:
                break
            if limit_price is not None:
                # crossing: buy price >= best ask / sell price <= best bid
                if (best - limit_price) * side > 0:
                    break
            level = levels[best]
            q = level.queue
            while q and rem > 0:
                maker = q[0]
                mrem = maker.remaining
                if mrem == 0:           # lazily dropped cancel/expire leftover
                    q.popleft()
                    continue
                fill = mrem if mrem < rem else rem
                maker.remaining = mrem - fill
                rem -= fill
                level.volume -= fill
                trades.append(Trade(best, fill, side, maker.order_id,
                                    order.order_id, step))
                self._event(step, EV_TRADE, order.order_id, order.agent_id,
                            side, best, fill)
                if maker.remaining == 0:
                    q.popleft()
                    index.pop(maker.order_id, None)
            if level.volume == 0:
                del levels[best]
        order.remaining = rem
        return trades

    def _queue(self, order: Order, step: int):
        """Rest the order at the tail of its price level."""
        side_levels = self.bids if order.side == BUY else self.asks
        level = side_levels.get(order.price)
        if level is None:
            level = _Level()
            side_levels[order.price] = level
            if order.side == BUY:
                heapq.heappush(self._bid_heap, -order.price)
            else:
                heapq.heappush(self._ask_heap, order.price)
        level.queue.append(order)
        level.volume += order.remaining
        self.index[order.order_id] = order
        if order.expiry_step is not None:
            heapq.heappush(self._expiry_heap,
                           (order.expiry_step, next(self._expiry_seq), order))
        self._event(step, EV_QUEUE, order.order_id, order.agent_id,
                    order.side, order.price, order.remaining)

    # ------------------------------------------------------------------ public ops

    def submit_limit(self, order: Order, step: int) -> list[Trade]:
        """Match a limit order while it crosses, then queue any residual.

        Returns the trades generated; a rejected order returns [] and leaves
        the book unchanged (a reject event is logged).
        """
        if self._reject(order, step):
            return []
        self._event(step, EV_LIMIT, order.order_id, order.agent_id,
                    order.side, order.price, order.quantity)
        trades = self._match(order, step, order.price)
        if order.remaining > 0:
            self._queue(order, step)
        return trades

    def submit_market(self, order: Order, step: int) -> list[Trade]:
        """Consume the opposite side best-first; unfilled remainder is cancelled."""
        if self._reject(order, step):
            return []
        self._event(step, EV_MARKET, order.order_id, order.agent_id,
                    order.side, None, order.quantity)
        trades = self._match(order, step, None)
        if order.remaining > 0:
            self._event(step, EV_MARKET_CANCEL, order.order_id, order.agent_id,
                        order.side, None, order.remaining)
        return trades

    def cancel(self, order_id: int, step: int) -> bool:
        """Remove a resting order. Returns False (stale event) if unknown/filled."""
        order = self.index.pop(order_id, None)
        if order is None or order.remaining == 0:
            self._event(step, EV_STALE, order_id, -1, 0, None, 0)
            return False
        self._remove_resting(order)
        self._event(step, EV_CANCEL, order.order_id, order.agent_id,
                    order.side, order.price, order.remaining)
        order.remaining = 0
        return True

    def _remove_resting(self, order: Order):
        """Drop a live resting order's volume; delete its level if emptied."""
        side_levels = self.bids if order.side == BUY else self.asks
        level = side_levels.get(order.price)
        if level is not None:
            level.volume -= order.remaining
            if level.volume == 0:
                del side_levels[order.price]
        # the Order object stays in the level deque and is skipped lazily

    def amend(self, order_id: int, step: int, new_quantity: int | None = None,
              new_price: int | None = None) -> tuple[bool, list[Trade]]:
        """Amend a resting order.

        Quantity decrease keeps time priority. A price change or quantity
        increase loses priority: the order re-enters as if newly submitted
        (and may therefore cross, producing trades). Unknown or filled ids
        are a stale no-op.
        """
        order = self.index.get(order_id)
        if order is None or order.remaining == 0:
            self._event(step, EV_STALE, order_id, -1, 0, new_price, new_quantity or 0)
            return False, []
        if new_quantity is None:
            new_quantity = order.quantity
        if new_price is None:
            new_price = order.price
        filled = order.quantity - order.remaining
        new_remaining = new_quantity - filled
        self._event(step, EV_AMEND, order.order_id, order.agent_id,
                    order.side, new_price, new_quantity)
        if new_price == order.price and new_quantity <= order.quantity:
            # in-place shrink keeps FIFO position
            if new_remaining <= 0:
                self.index.pop(order_id, None)
                self._remove_resting(order)
                order.remaining = 0
                return True, []
            delta = order.remaining - new_remaining
            level = (self.bids if order.side == BUY else self.asks)[order.price]
            level.volume -= delta
            order.quantity = new_quantity
            order.remaining = new_remaining
            return True, []
        # price change or size increase: pull and resubmit at the tail;
        # the old object stays in its deque, zeroed so matching skips it
        self.index.pop(order_id, None)
        self._remove_resting(order)
        order.remaining = 0
        if new_remaining <= 0:
            return True, []
        renewed = Order(order.order_id, order.agent_id, order.side, new_price,
                        new_quantity, step, expiry_step=order.expiry_step)
        renewed.remaining = new_remaining
        trades = self._match(renewed, step, renewed.price)
        if renewed.remaining > 0:
            self._queue(renewed, step)
        return True, trades

    def expire_orders(self, step: int) -> int:
        """Remove every resting order with expiry_step <= step. Returns count."""
        heap = self._expiry_heap
        n = 0
        while heap and heap[0][0] <= step:
            _, _, order = heapq.heappop(heap)
            if order.remaining > 0 and self.index.get(order.order_id) is order:
                self.index.pop(order.order_id, None)
                self._remove_resting(order)
                self._event(step, EV_EXPIRE, order.order_id, order.agent_id,
                            order.side, order.price, order.remaining)
                order.remaining = 0
                n += 1
        return n

    # ------------------------------------------------------------------ data

    def l2_snapshot(self, step: int, depth: int = 10) -> L2Snapshot:
        """Aggregate the top ``depth`` levels per side.

        mid/spread carry the last valid values (flagged) when a side is empty.
        """
        bid_prices = sorted(self.bids, reverse=True)[:depth]
        ask_prices = sorted(self.asks)[:depth]
        snap = L2Snapshot(
            step=step,
            bids=[(p, self.bids[p].volume) for p in bid_prices],
            asks=[(p, self.asks[p].volume) for p in ask_prices],
        )
        bb = bid_prices[0] if bid_prices else None
        ba = ask_prices[0] if ask_prices else None
        snap.best_bid = bb
        snap.best_ask = ba
        if bb is not None and ba is not None:
            snap.mid = (bb + ba) / 2.0
            snap.spread = ba - bb
            self._last_mid = snap.mid
            self._last_spread = snap.spread
        else:
            snap.mid = self._last_mid
            snap.spread = self._last_spread
            snap.carried = True
        return snap

    def depth(self, side: int) -> int:
        """Total live resting volume on one side."""
        levels = self.bids if side == BUY else self.asks
        return sum(level.volume for level in levels.values())

    def n_resting(self) -> int:
        return len(self.index)


def write_event_log(events, path, step_ms: int = 20):
    """Persist engine events as CSV: step,event_type,order_id,agent_id,side,price,qty."""
    with open(path, "w") as fh:
        fh.write("step,event_type,order_id,agent_id,side,price,qty\n")
        for step, etype, oid, agent, side, price, qty in events:
            side_s = side_name(side) if side in (BUY, SELL) else ""
            price_s = "" if price is None else str(price)
            fh.write(f"{step},{etype},{oid},{agent},{side_s},{price_s},{qty}\n")
