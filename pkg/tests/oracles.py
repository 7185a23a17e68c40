"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (flat lists, repeated scans) and shares
no code with src/lobsim. The brute-force matcher re-derives price-time
priority from first principles so the fast engine can be checked against it.
"""

from __future__ import annotations

BUY = 1
SELL = -1


class RefOrder:
    def __init__(self, order_id, agent_id, side, price, qty, seq, total=None):
        self.order_id = order_id
        self.agent_id = agent_id
        self.side = side
        self.price = price
        self.qty = qty                           # remaining
        self.total = total if total is not None else qty  # original OrderQty
        self.seq = seq                           # arrival sequence, lower = earlier


class BruteForceBook:
    """O(n^2) matcher: every lookup scans the full resting list."""

    def __init__(self):
        self.resting: list[RefOrder] = []
        self._seq = 0
        self._seen = set()

    def _next_seq(self):
        self._seq += 1
        return self._seq

    def _best_opposite(self, side):
        """Best resting order on the opposite side: best price, then earliest."""
        best = None
        for o in self.resting:
            if o.side == side or o.qty == 0:
                continue
            if best is None:
                best = o
                continue
            if side == BUY:      # opposite side is sells: lowest price wins
                if o.price < best.price or (o.price == best.price and o.seq < best.seq):
                    best = o
            else:                # opposite side is buys: highest price wins
                if o.price > best.price or (o.price == best.price and o.seq < best.seq):
                    best = o
        return best

    def submit_limit(self, order_id, agent_id, side, price, qty, step):
        if qty <= 0 or order_id in self._seen:
            return []
        self._seen.add(order_id)
        trades = []
        remaining = qty
        while remaining > 0:
            maker = self._best_opposite(side)
            if maker is None:
                break
            crosses = maker.price <= price if side == BUY else maker.price >= price
            if not crosses:
                break
            fill = min(maker.qty, remaining)
            maker.qty -= fill
            remaining -= fill
            trades.append((maker.price, fill, side, maker.order_id, order_id, step))
        self.resting = [o for o in self.resting if o.qty > 0]
        if remaining > 0:
            self.resting.append(RefOrder(order_id, agent_id, side, price,
                                         remaining, self._next_seq(), total=qty))
        return trades

    def submit_market(self, order_id, agent_id, side, qty, step):
        if qty <= 0 or order_id in self._seen:
            return []
        self._seen.add(order_id)
        trades = []
        remaining = qty
        while remaining > 0:
            maker = self._best_opposite(side)
            if maker is None:
                break
            fill = min(maker.qty, remaining)
            maker.qty -= fill
            remaining -= fill
            trades.append((maker.price, fill, side, maker.order_id, order_id, step))
        self.resting = [o for o in self.resting if o.qty > 0]
        return trades

    def cancel(self, order_id):
        before = len(self.resting)
        self.resting = [o for o in self.resting if o.order_id != order_id]
        return len(self.resting) != before

    def amend(self, order_id, step, new_qty=None, new_price=None):
        """Mirror of the engine rule: shrink keeps priority, else re-enter."""
        target = None
        for o in self.resting:
            if o.order_id == order_id:
                target = o
                break
        if target is None:
            return []
        if new_qty is None:
            new_qty = target.total
        if new_price is None:
            new_price = target.price
        filled = target.total - target.qty
        new_remaining = new_qty - filled
        if new_price == target.price and new_qty <= target.total:
            if new_remaining <= 0:
                self.resting.remove(target)
            else:
                target.qty = new_remaining
                target.total = new_qty
            return []
        self.resting.remove(target)
        if new_remaining <= 0:
            return []
        # re-entry behaves like a fresh submission but keeps id and fill history
        self._seen.discard(order_id)
        trades = self.submit_limit(order_id, target.agent_id, target.side,
                                   new_price, new_remaining, step)
        for o in self.resting:
            if o.order_id == order_id:
                o.total = new_qty
        return trades

    def best_bid(self):
        prices = [o.price for o in self.resting if o.side == BUY and o.qty > 0]
        return max(prices) if prices else None

    def best_ask(self):
        prices = [o.price for o in self.resting if o.side == SELL and o.qty > 0]
        return min(prices) if prices else None

    def level_volume(self, side, price):
        return sum(o.qty for o in self.resting if o.side == side and o.price == price)

    def l2(self, depth=10):
        bids = {}
        asks = {}
        for o in self.resting:
            if o.qty == 0:
                continue
            target = bids if o.side == BUY else asks
            target[o.price] = target.get(o.price, 0) + o.qty
        bid_levels = sorted(bids.items(), key=lambda kv: -kv[0])[:depth]
        ask_levels = sorted(asks.items())[:depth]
        return bid_levels, ask_levels


def random_op_stream(rng, n_ops, p_limit=0.55, p_market=0.2, p_cancel=0.15,
                     p_amend=0.10, mid=1000, px_span=30, max_qty=20):
    """Generate a reproducible mixed op stream for oracle comparisons.

    Yields tuples: ("L", oid, side, price, qty, step), ("M", oid, side, qty, step),
    ("C", oid, step), ("A", oid, new_qty_or_None, new_price_or_None, step).
    """
    total = p_limit + p_market + p_cancel + p_amend
    p_limit, p_market, p_cancel = (p_limit / total, p_market / total,
                                   p_cancel / total)
    ops = []
    live_ids = []
    oid = 0
    for step in range(n_ops):
        u = rng.random()
        if u < p_limit or not live_ids:
            oid += 1
            side = BUY if rng.random() < 0.5 else SELL
            price = mid + int(rng.integers(-px_span, px_span + 1))
            qty = int(rng.integers(1, max_qty + 1))
            ops.append(("L", oid, side, price, qty, step))
            live_ids.append(oid)
        elif u < p_limit + p_market:
            oid += 1
            side = BUY if rng.random() < 0.5 else SELL
            qty = int(rng.integers(1, max_qty + 1))
            ops.append(("M", oid, side, qty, step))
        elif u < p_limit + p_market + p_cancel:
            target = live_ids[int(rng.integers(0, len(live_ids)))]
            ops.append(("C", target, step))
        else:
            target = live_ids[int(rng.integers(0, len(live_ids)))]
            new_qty = int(rng.integers(1, max_qty + 1)) if rng.random() < 0.7 else None
            new_price = (mid + int(rng.integers(-px_span, px_span + 1))
                         if rng.random() < 0.5 else None)
            if new_qty is None and new_price is None:
                new_qty = 1
            ops.append(("A", target, new_qty, new_price, step))
    return ops


def replay_reference(ops):
    """Run an op stream through the brute-force book; returns the trade list."""
    book = BruteForceBook()
    trades = []
    for op in ops:
        if op[0] == "L":
            _, oid, side, price, qty, step = op
            trades.extend(book.submit_limit(oid, 0, side, price, qty, step))
        elif op[0] == "M":
            _, oid, side, qty, step = op
            trades.extend(book.submit_market(oid, 0, side, qty, step))
        elif op[0] == "C":
            _, oid, step = op
            book.cancel(oid)
        else:
            _, oid, new_qty, new_price, step = op
            trades.extend(book.amend(oid, step, new_qty, new_price))
    return book, trades
