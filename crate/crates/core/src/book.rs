//! Continuous double-auction limit order book.
//!
//! All orders are for one unit, so a marketable intent consumes exactly one
//! resting order and there are no partial fills. Prices are integer ticks.
//! Within a price level orders are kept in arrival order; since order ids
//! and submission steps are both monotone, arrival order is the
//! (step, id) priority.

use std::collections::{BTreeMap, VecDeque};

use crate::expectations::{OrderIntent, Side, TickGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitOrder {
    pub id: u64,
    pub agent: usize,
    pub side: Side,
    pub price: i64,
    pub submitted_at: u64,
    pub expires_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub step: u64,
    pub price: i64,
    pub buyer: usize,
    pub seller: usize,
    pub aggressor: Side,
    /// The resting order consumed by the trade.
    pub resting: LimitOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitOutcome {
    Rested(LimitOrder),
    Traded(Trade),
    /// The intent would have crossed only the submitting agent's own orders.
    SelfTradeCancelled,
}

/// Quote-derived statistics, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BookStats {
    pub best_bid: Option<i64>,
    pub best_ask: Option<i64>,
    pub spread: Option<i64>,
    pub bid_gap: Option<i64>,
    pub ask_gap: Option<i64>,
    pub depth: usize,
}

#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: BTreeMap<i64, VecDeque<LimitOrder>>,
    asks: BTreeMap<i64, VecDeque<LimitOrder>>,
    expiry: BTreeMap<(u64, u64), (Side, i64)>,
    next_id: u64,
    allow_self_trade: bool,
    len: usize,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_self_trade(allow: bool) -> Self {
        Self {
            allow_self_trade: allow,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn best_bid(&self) -> Option<i64> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<i64> {
        self.asks.keys().next().copied()
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<i64, VecDeque<LimitOrder>> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    /// Submits an intent at step `t`.
    ///
    /// A buy priced at or above the best ask (or a sell at or below the best
    /// bid) executes against the oldest order at that quote, at the quote's
    /// price. Anything else rests until `t + horizon`.
    pub fn submit(&mut self, intent: &OrderIntent, t: u64) -> SubmitOutcome {
        let opposite = intent.side.opposite();
        let best = match intent.side {
            Side::Buy => self.best_ask().filter(|&a| intent.price >= a),
            Side::Sell => self.best_bid().filter(|&b| intent.price <= b),
        };
        if let Some(level_price) = best {
            let allow_self = self.allow_self_trade;
            let level = self
                .side_mut(opposite)
                .get_mut(&level_price)
                .expect("best level exists");
            let pos = level
                .iter()
                .position(|o| allow_self || o.agent != intent.agent);
            let Some(pos) = pos else {
                return SubmitOutcome::SelfTradeCancelled;
            };
            let resting = level.remove(pos).expect("position in range");
            if level.is_empty() {
                self.side_mut(opposite).remove(&level_price);
            }
            self.expiry.remove(&(resting.expires_at, resting.id));
            self.len -= 1;
            let (buyer, seller) = match intent.side {
                Side::Buy => (intent.agent, resting.agent),
                Side::Sell => (resting.agent, intent.agent),
            };
            return SubmitOutcome::Traded(Trade {
                step: t,
                price: resting.price,
                buyer,
                seller,
                aggressor: intent.side,
                resting,
            });
        }

        let order = LimitOrder {
            id: self.next_id,
            agent: intent.agent,
            side: intent.side,
            price: intent.price,
            submitted_at: t,
            expires_at: t + intent.horizon as u64,
        };
        self.next_id += 1;
        self.side_mut(intent.side)
            .entry(order.price)
            .or_default()
            .push_back(order);
        self.expiry.insert((order.expires_at, order.id), (order.side, order.price));
        self.len += 1;
        SubmitOutcome::Rested(order)
    }

    /// Removes every order with `expires_at <= t`, returning them.
    pub fn expire(&mut self, t: u64) -> Vec<LimitOrder> {
        let mut removed = Vec::new();
        while let Some((&(exp, id), &(side, price))) = self.expiry.first_key_value() {
            if exp > t {
                break;
            }
            self.expiry.pop_first();
            let book = self.side_mut(side);
            let level = book.get_mut(&price).expect("indexed level exists");
            let pos = level.iter().position(|o| o.id == id).expect("indexed order exists");
            removed.push(level.remove(pos).expect("position in range"));
            if level.is_empty() {
                book.remove(&price);
            }
        }
        self.len -= removed.len();
        removed
    }

    pub fn stats(&self) -> BookStats {
        let best_bid = self.best_bid();
        let best_ask = self.best_ask();
        let mut bid_levels = self.bids.keys().rev();
        let mut ask_levels = self.asks.keys();
        let gap = |it: &mut dyn Iterator<Item = &i64>| match (it.next(), it.next()) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        };
        BookStats {
            best_bid,
            best_ask,
            spread: best_bid.zip(best_ask).map(|(b, a)| a - b),
            bid_gap: gap(&mut bid_levels),
            ask_gap: gap(&mut ask_levels),
            depth: self.len,
        }
    }

    pub fn orders(&self) -> impl Iterator<Item = &LimitOrder> {
        self.bids.values().chain(self.asks.values()).flatten()
    }

    /// Aggregated levels as `(price ticks, signed volume)`, asks negative,
    /// sorted by price.
    pub fn snapshot(&self) -> Vec<(i64, i64)> {
        let mut rows: Vec<(i64, i64)> = self
            .bids
            .iter()
            .map(|(p, q)| (*p, q.len() as i64))
            .chain(self.asks.iter().map(|(p, q)| (*p, -(q.len() as i64))))
            .collect();
        rows.sort_unstable();
        rows
    }
}

/// Price after a step: the trade price if one occurred, else the mid-point
/// when both quotes exist, else the previous price.
pub fn current_price(book: &OrderBook, last_trade: Option<&Trade>, previous_price: f64, grid: &TickGrid) -> f64 {
    if let Some(t) = last_trade {
        return grid.price(t.price);
    }
    match (book.best_bid(), book.best_ask()) {
        (Some(b), Some(a)) => (grid.price(a) + grid.price(b)) / 2.0,
        _ => previous_price,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: TickGrid = TickGrid { size: 0.0005 };

    fn t(p: f64) -> i64 {
        GRID.nearest_ticks(p)
    }

    fn intent(agent: usize, side: Side, price: f64, horizon: usize) -> OrderIntent {
        OrderIntent {
            agent,
            side,
            price: t(price),
            horizon,
        }
    }

    #[test]
    fn quotes() {
        let mut book = OrderBook::new();
        assert_eq!((book.best_bid(), book.best_ask()), (None, None));
        book.submit(&intent(1, Side::Buy, 299.0, 100), 0);
        book.submit(&intent(2, Side::Buy, 298.0, 100), 0);
        book.submit(&intent(3, Side::Sell, 301.0, 100), 0);
        assert_eq!((book.best_bid(), book.best_ask()), (Some(t(299.0)), Some(t(301.0))));
        let out = book.submit(&intent(4, Side::Buy, 301.0, 100), 1);
        assert!(matches!(out, SubmitOutcome::Traded(_)));
        assert_eq!(book.best_ask(), None);
    }

    #[test]
    fn crossing_at_equal_price_trades() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Sell, 301.0, 100), 0);
        match book.submit(&intent(2, Side::Buy, 301.0, 100), 1) {
            SubmitOutcome::Traded(tr) => {
                assert_eq!(tr.price, t(301.0));
                assert_eq!((tr.buyer, tr.seller, tr.aggressor), (2, 1, Side::Buy));
            }
            o => panic!("{o:?}"),
        }
        book.submit(&intent(1, Side::Sell, 301.0, 100), 2);
        let out = book.submit(&intent(2, Side::Buy, 300.5, 100), 3);
        assert!(matches!(out, SubmitOutcome::Rested(_)));
        assert_eq!(book.best_bid(), Some(t(300.5)));
        assert_eq!(book.len(), 2);
    }

    #[test]
    fn execution_at_resting_price() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Buy, 299.0, 100), 0);
        match book.submit(&intent(2, Side::Sell, 250.0, 100), 1) {
            SubmitOutcome::Traded(tr) => assert_eq!(tr.price, t(299.0)),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn time_priority() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Sell, 301.0, 100), 5);
        book.submit(&intent(2, Side::Sell, 301.0, 100), 9);
        match book.submit(&intent(3, Side::Buy, 305.0, 100), 10) {
            SubmitOutcome::Traded(tr) => {
                assert_eq!(tr.seller, 1);
                assert_eq!(tr.resting.submitted_at, 5);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn self_trade_prevention() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Sell, 301.0, 100), 0);
        book.submit(&intent(2, Side::Sell, 301.0, 100), 1);
        // agent 1 skips its own order and takes agent 2's
        match book.submit(&intent(1, Side::Buy, 302.0, 100), 2) {
            SubmitOutcome::Traded(tr) => assert_eq!(tr.seller, 2),
            o => panic!("{o:?}"),
        }
        assert_eq!(
            book.submit(&intent(1, Side::Buy, 302.0, 100), 3),
            SubmitOutcome::SelfTradeCancelled
        );
        assert_eq!(book.len(), 1);

        let mut permissive = OrderBook::with_self_trade(true);
        permissive.submit(&intent(1, Side::Sell, 301.0, 100), 0);
        assert!(matches!(
            permissive.submit(&intent(1, Side::Buy, 302.0, 100), 1),
            SubmitOutcome::Traded(_)
        ));
    }

    #[test]
    fn expiry() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Buy, 299.0, 10), 0);
        assert!(book.expire(9).is_empty());
        assert_eq!(book.len(), 1);
        let gone = book.expire(10);
        assert_eq!(gone.len(), 1);
        assert!(book.is_empty());
        assert_eq!(book.best_bid(), None);
    }

    #[test]
    fn expiry_removes_exact_subset() {
        let mut book = OrderBook::new();
        let mut all = Vec::new();
        for i in 0..200u64 {
            let side = if i % 2 == 0 { Side::Buy } else { Side::Sell };
            let price = if side == Side::Buy { 290.0 - (i % 7) as f64 } else { 310.0 + (i % 5) as f64 };
            if let SubmitOutcome::Rested(o) = book.submit(&intent(i as usize, side, price, (i * 37 % 50) as usize + 1), i / 4) {
                all.push(o);
            }
        }
        let cutoff = 30;
        let mut want: Vec<u64> = all.iter().filter(|o| o.expires_at <= cutoff).map(|o| o.id).collect();
        let mut got: Vec<u64> = book.expire(cutoff).iter().map(|o| o.id).collect();
        want.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, want);
        let mut left: Vec<u64> = book.orders().map(|o| o.id).collect();
        let mut keep: Vec<u64> = all.iter().filter(|o| o.expires_at > cutoff).map(|o| o.id).collect();
        left.sort_unstable();
        keep.sort_unstable();
        assert_eq!(left, keep);
        assert_eq!(book.len(), keep.len());
    }

    #[test]
    fn price_proxy() {
        let mut book = OrderBook::new();
        assert_eq!(current_price(&book, None, 300.0, &GRID), 300.0);
        book.submit(&intent(1, Side::Buy, 299.0, 100), 0);
        assert_eq!(current_price(&book, None, 300.0, &GRID), 300.0);
        book.submit(&intent(2, Side::Sell, 301.0, 100), 0);
        assert_eq!(current_price(&book, None, 123.0, &GRID), 300.0);
        let trade = Trade {
            step: 0,
            price: t(300.5),
            buyer: 1,
            seller: 2,
            aggressor: Side::Buy,
            resting: LimitOrder {
                id: 0,
                agent: 2,
                side: Side::Sell,
                price: t(300.5),
                submitted_at: 0,
                expires_at: 1,
            },
        };
        assert_eq!(current_price(&book, Some(&trade), 123.0, &GRID), 300.5);
    }

    #[test]
    fn spread_and_gaps() {
        let mut book = OrderBook::new();
        assert_eq!(book.stats(), BookStats::default());
        book.submit(&intent(1, Side::Buy, 299.0, 100), 0);
        book.submit(&intent(2, Side::Sell, 301.0, 100), 0);
        let s = book.stats();
        assert_eq!(s.spread, Some(t(2.0)));
        assert_eq!((s.bid_gap, s.ask_gap), (None, None));
        book.submit(&intent(3, Side::Buy, 297.5, 100), 0);
        book.submit(&intent(4, Side::Sell, 302.0, 100), 0);
        book.submit(&intent(5, Side::Sell, 302.0, 100), 0);
        let s = book.stats();
        assert_eq!(s.spread, Some(t(2.0)));
        assert_eq!(s.bid_gap, Some(t(1.5)));
        assert_eq!(s.ask_gap, Some(t(1.0)));
        assert_eq!(s.depth, 5);
    }

    #[test]
    fn snapshot_signs_asks_negative() {
        let mut book = OrderBook::new();
        book.submit(&intent(1, Side::Buy, 299.0, 100), 0);
        book.submit(&intent(2, Side::Buy, 299.0, 100), 0);
        book.submit(&intent(3, Side::Sell, 301.0, 100), 0);
        assert_eq!(book.snapshot(), vec![(t(299.0), 2), (t(301.0), -1)]);
    }

    proptest::proptest! {
        #[test]
        fn never_crossed(ops in proptest::collection::vec((0usize..5, proptest::bool::ANY, 590_000i64..610_000, 1usize..30), 1..300)) {
            let mut book = OrderBook::new();
            for (step, (agent, buy, price, horizon)) in ops.into_iter().enumerate() {
                book.expire(step as u64);
                let side = if buy { Side::Buy } else { Side::Sell };
                book.submit(&OrderIntent { agent, side, price, horizon }, step as u64);
                if let (Some(b), Some(a)) = (book.best_bid(), book.best_ask()) {
                    proptest::prop_assert!(b < a);
                }
                proptest::prop_assert_eq!(book.len(), book.orders().count());
            }
        }
    }
}
