"""Matching engine unit and property tests against the brute-force oracle."""

import numpy as np
import pytest

from lobsim.book import (BUY, SELL, EV_CANCEL, EV_EXPIRE, EV_MARKET_CANCEL,
                         EV_REJECT, EV_STALE, Order, OrderBook)

from oracles import BruteForceBook, random_op_stream, replay_reference


def limit(oid, side, price, qty, step=0, agent=0, expiry=None):
    return Order(oid, agent, side, price, qty, step, expiry_step=expiry)


def market(oid, side, qty, step=0, agent=0):
    return Order(oid, agent, side, None, qty, step, is_market=True)


def replay_engine(ops, record_events=False):
    book = OrderBook(record_events=record_events, track_duplicates=True)
    trades = []
    for op in ops:
        if op[0] == "L":
            _, oid, side, price, qty, step = op
            trades.extend(book.submit_limit(limit(oid, side, price, qty, step), step))
        elif op[0] == "M":
            _, oid, side, qty, step = op
            trades.extend(book.submit_market(market(oid, side, qty, step), step))
        elif op[0] == "C":
            _, oid, step = op
            book.cancel(oid, step)
        else:
            _, oid, new_qty, new_price, step = op
            _, tr = book.amend(oid, step, new_quantity=new_qty, new_price=new_price)
            trades.extend(tr)
    return book, trades


class TestSubmitLimit:
    def test_empty_book_queues(self):
        book = OrderBook()
        trades = book.submit_limit(limit(1, BUY, 19000, 10), 0)
        assert trades == []
        assert book.best_bid() == 19000
        assert book.bids[19000].volume == 10

    def test_crossing_priced_at_resting(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 19000, 5), 0)
        trades = book.submit_limit(limit(2, BUY, 19001, 10), 1)
        assert len(trades) == 1
        assert (trades[0].price, trades[0].quantity) == (19000, 5)
        assert trades[0].maker_order_id == 1 and trades[0].taker_order_id == 2
        # residual queued at its own limit
        assert book.best_bid() == 19001
        assert book.bids[19001].volume == 5
        assert book.best_ask() is None

    def test_duplicate_id_rejected(self):
        book = OrderBook(record_events=True)
        book.submit_limit(limit(1, BUY, 100, 5), 0)
        trades = book.submit_limit(limit(1, BUY, 101, 5), 1)
        assert trades == []
        assert book.best_bid() == 100
        assert any(ev[1] == EV_REJECT for ev in book.events)

    def test_nonpositive_quantity_rejected(self):
        book = OrderBook(record_events=True)
        assert book.submit_limit(limit(1, BUY, 100, 0), 0) == []
        assert book.best_bid() is None
        assert any(ev[1] == EV_REJECT for ev in book.events)

    def test_price_time_priority_within_level(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 100, 3), 0)
        book.submit_limit(limit(2, SELL, 100, 3), 1)
        trades = book.submit_market(market(3, BUY, 4), 2)
        assert [(t.maker_order_id, t.quantity) for t in trades] == [(1, 3), (2, 1)]


class TestSubmitMarket:
    def test_empty_book_full_cancel(self):
        book = OrderBook(record_events=True)
        trades = book.submit_market(market(1, BUY, 10), 0)
        assert trades == []
        cancels = [ev for ev in book.events if ev[1] == EV_MARKET_CANCEL]
        assert len(cancels) == 1 and cancels[0][6] == 10

    def test_best_first_consumption(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 19000, 5), 0)
        book.submit_limit(limit(2, SELL, 19001, 5), 0)
        trades = book.submit_market(market(3, BUY, 8), 1)
        assert [(t.price, t.quantity) for t in trades] == [(19000, 5), (19001, 3)]

    def test_remainder_never_queued(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 19000, 5), 0)
        book.submit_market(market(2, BUY, 9), 1)
        assert book.best_bid() is None
        assert book.best_ask() is None


class TestCancelAmend:
    def test_cancel_removes_volume(self):
        book = OrderBook(record_events=True)
        book.submit_limit(limit(1, BUY, 100, 10), 0)
        book.submit_limit(limit(2, BUY, 100, 7), 0)
        assert book.cancel(1, 1)
        assert book.bids[100].volume == 7
        assert any(ev[1] == EV_CANCEL and ev[2] == 1 for ev in book.events)

    def test_cancel_unknown_is_stale_noop(self):
        book = OrderBook(record_events=True)
        assert not book.cancel(42, 0)
        assert any(ev[1] == EV_STALE for ev in book.events)

    def test_amend_shrink_keeps_priority(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 100, 10), 0)
        book.submit_limit(limit(2, SELL, 100, 10), 0)
        ok, trades = book.amend(1, 1, new_quantity=4)
        assert ok and trades == []
        fills = book.submit_market(market(3, BUY, 4), 2)
        assert [t.maker_order_id for t in fills] == [1]

    def test_amend_price_reenters_at_tail(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 100, 5), 0)
        book.submit_limit(limit(2, SELL, 101, 5), 0)
        ok, _ = book.amend(1, 1, new_price=101)
        assert ok
        fills = book.submit_market(market(3, BUY, 6), 2)
        assert [t.maker_order_id for t in fills] == [2, 1]

    def test_amend_price_can_cross(self):
        book = OrderBook()
        book.submit_limit(limit(1, BUY, 99, 5), 0)
        book.submit_limit(limit(2, SELL, 101, 5), 0)
        ok, trades = book.amend(2, 1, new_price=99)
        assert ok and len(trades) == 1
        assert trades[0].price == 99  # priced at the resting buy

    def test_amend_increase_loses_priority(self):
        book = OrderBook()
        book.submit_limit(limit(1, SELL, 100, 5), 0)
        book.submit_limit(limit(2, SELL, 100, 5), 0)
        book.amend(1, 1, new_quantity=8)
        fills = book.submit_market(market(3, BUY, 5), 2)
        assert [t.maker_order_id for t in fills] == [2]


class TestExpiry:
    def test_expiry_removes_before_arrivals(self):
        book = OrderBook(record_events=True)
        book.submit_limit(limit(1, BUY, 100, 5, step=100, expiry=103), 100)
        book.expire_orders(102)
        assert book.best_bid() == 100
        book.expire_orders(103)
        assert book.best_bid() is None
        assert any(ev[1] == EV_EXPIRE for ev in book.events)

    def test_no_expiring_orders_is_identity(self):
        book = OrderBook()
        book.submit_limit(limit(1, BUY, 100, 5, expiry=50), 0)
        assert book.expire_orders(10) == 0
        assert book.bids[100].volume == 5

    def test_filled_order_not_expired_again(self):
        book = OrderBook(record_events=True)
        book.submit_limit(limit(1, SELL, 100, 5, expiry=10), 0)
        book.submit_market(market(2, BUY, 5), 1)
        assert book.expire_orders(10) == 0


class TestSnapshot:
    def test_mid_and_spread(self):
        book = OrderBook()
        book.submit_limit(limit(1, BUY, 19000, 5), 0)
        book.submit_limit(limit(2, SELL, 19002, 2), 0)
        snap = book.l2_snapshot(0)
        assert snap.mid == 19001 and snap.spread == 2
        assert snap.bids == [(19000, 5)] and snap.asks == [(19002, 2)]
        assert not snap.carried

    def test_truncated_to_ten_levels(self):
        book = OrderBook()
        for i in range(12):
            book.submit_limit(limit(i + 1, BUY, 19000 - i, 1), 0)
        snap = book.l2_snapshot(0)
        assert len(snap.bids) == 10
        assert snap.bids[0][0] == 19000 and snap.bids[-1][0] == 18991

    def test_carry_last_valid_mid(self):
        book = OrderBook()
        book.submit_limit(limit(1, BUY, 100, 5), 0)
        book.submit_limit(limit(2, SELL, 102, 5), 0)
        book.l2_snapshot(0)
        book.cancel(2, 1)
        snap = book.l2_snapshot(1)
        assert snap.carried
        assert snap.mid == 101.0 and snap.spread == 2
        assert snap.best_ask is None and snap.best_bid == 100


class TestOracleEquivalence:
    """Randomized streams must match the brute-force matcher exactly."""

    @pytest.mark.parametrize("seed", range(12))
    def test_mixed_streams(self, seed):
        rng = np.random.default_rng(7000 + seed)
        ops = random_op_stream(rng, n_ops=400)
        ref_book, ref_trades = replay_reference(ops)
        eng_book, eng_trades = replay_engine(ops)
        assert [t.astuple() for t in eng_trades] == ref_trades
        ref_bids, ref_asks = ref_book.l2(depth=10)
        snap = eng_book.l2_snapshot(0)
        assert snap.bids == ref_bids and snap.asks == ref_asks

    def test_thousand_order_stream(self):
        rng = np.random.default_rng(99)
        ops = random_op_stream(rng, n_ops=1000)
        _, ref_trades = replay_reference(ops)
        _, eng_trades = replay_engine(ops)
        assert [t.astuple() for t in eng_trades] == ref_trades


class TestInvariants:
    def test_conservation_per_order(self):
        rng = np.random.default_rng(5)
        ops = random_op_stream(rng, n_ops=600, p_amend=0.0)
        book = OrderBook(record_events=True, track_duplicates=True)
        submitted = {}
        filled = {}
        cancelled = {}
        trades_all = []
        for op in ops:
            if op[0] == "L":
                _, oid, side, price, qty, step = op
                submitted[oid] = qty
                trades_all += book.submit_limit(limit(oid, side, price, qty, step), step)
            elif op[0] == "M":
                _, oid, side, qty, step = op
                submitted[oid] = qty
                trades_all += book.submit_market(market(oid, side, qty, step), step)
            elif op[0] == "C":
                _, oid, step = op
                book.cancel(oid, step)
        for t in trades_all:
            filled[t.maker_order_id] = filled.get(t.maker_order_id, 0) + t.quantity
            filled[t.taker_order_id] = filled.get(t.taker_order_id, 0) + t.quantity
        for ev in book.events:
            if ev[1] in (EV_CANCEL, EV_MARKET_CANCEL):
                cancelled[ev[2]] = cancelled.get(ev[2], 0) + ev[6]
        resting = {oid: o.remaining for oid, o in book.index.items()}
        for oid, qty in submitted.items():
            total = filled.get(oid, 0) + resting.get(oid, 0) + cancelled.get(oid, 0)
            assert total == qty, f"order {oid}: {total} != {qty}"

    def test_book_never_crossed(self):
        rng = np.random.default_rng(11)
        ops = random_op_stream(rng, n_ops=800)
        book = OrderBook()
        for op in ops:
            if op[0] == "L":
                _, oid, side, price, qty, step = op
                book.submit_limit(limit(oid, side, price, qty, step), step)
            elif op[0] == "M":
                _, oid, side, qty, step = op
                book.submit_market(market(oid, side, qty, step), step)
            elif op[0] == "C":
                _, oid, step = op
                book.cancel(oid, step)
            else:
                _, oid, new_qty, new_price, step = op
                book.amend(oid, step, new_quantity=new_qty, new_price=new_price)
            bb, ba = book.best_bid(), book.best_ask()
            if bb is not None and ba is not None:
                assert ba > bb

    def test_determinism(self):
        rng1 = np.random.default_rng(21)
        rng2 = np.random.default_rng(21)
        ops1 = random_op_stream(rng1, n_ops=500)
        ops2 = random_op_stream(rng2, n_ops=500)
        _, tr1 = replay_engine(ops1, record_events=True)
        _, tr2 = replay_engine(ops2, record_events=True)
        assert [t.astuple() for t in tr1] == [t.astuple() for t in tr2]
