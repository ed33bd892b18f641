//! Shared helpers for the integration tests: a deliberately naive order
//! book used as a reference, and a random intent-sequence generator.

#![allow(dead_code)]

use cda_market::book::{BookStats, LimitOrder, SubmitOutcome, Trade};
use cda_market::expectations::{OrderIntent, Side};
use rand::Rng;

/// Flat list of resting orders; every query is a linear scan.
#[derive(Debug, Default)]
pub struct NaiveBook {
    pub orders: Vec<LimitOrder>,
    next_id: u64,
    allow_self_trade: bool,
}

impl NaiveBook {
    pub fn new(allow_self_trade: bool) -> Self {
        Self {
            allow_self_trade,
            ..Self::default()
        }
    }

    fn best(&self, side: Side) -> Option<i64> {
        let prices = self.orders.iter().filter(|o| o.side == side).map(|o| o.price);
        match side {
            Side::Buy => prices.max(),
            Side::Sell => prices.min(),
        }
    }

    pub fn submit(&mut self, intent: &OrderIntent, t: u64) -> SubmitOutcome {
        let opposite = intent.side.opposite();
        let crosses = match (intent.side, self.best(opposite)) {
            (Side::Buy, Some(a)) => intent.price >= a,
            (Side::Sell, Some(b)) => intent.price <= b,
            (_, None) => false,
        };
        if crosses {
            let level = self.best(opposite).unwrap();
            let mut queue: Vec<usize> = (0..self.orders.len())
                .filter(|&i| self.orders[i].side == opposite && self.orders[i].price == level)
                .collect();
            queue.sort_by_key(|&i| (self.orders[i].submitted_at, self.orders[i].id));
            let Some(&i) = queue
                .iter()
                .find(|&&i| self.allow_self_trade || self.orders[i].agent != intent.agent)
            else {
                return SubmitOutcome::SelfTradeCancelled;
            };
            let resting = self.orders.remove(i);
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
        self.orders.push(order);
        SubmitOutcome::Rested(order)
    }

    pub fn expire(&mut self, t: u64) -> Vec<LimitOrder> {
        let mut gone: Vec<LimitOrder> = self.orders.iter().copied().filter(|o| o.expires_at <= t).collect();
        self.orders.retain(|o| o.expires_at > t);
        gone.sort_by_key(|o| (o.expires_at, o.id));
        gone
    }

    fn levels(&self, side: Side) -> Vec<i64> {
        let mut ps: Vec<i64> = self.orders.iter().filter(|o| o.side == side).map(|o| o.price).collect();
        ps.sort_unstable();
        ps.dedup();
        if side == Side::Buy {
            ps.reverse();
        }
        ps
    }

    pub fn stats(&self) -> BookStats {
        let bids = self.levels(Side::Buy);
        let asks = self.levels(Side::Sell);
        let gap = |ls: &[i64]| (ls.len() >= 2).then(|| (ls[0] - ls[1]).abs());
        let best_bid = bids.first().copied();
        let best_ask = asks.first().copied();
        BookStats {
            best_bid,
            best_ask,
            spread: best_bid.zip(best_ask).map(|(b, a)| a - b),
            bid_gap: gap(&bids),
            ask_gap: gap(&asks),
            depth: self.orders.len(),
        }
    }

    pub fn snapshot(&self) -> Vec<(i64, i64)> {
        let mut rows = Vec::new();
        for side in [Side::Buy, Side::Sell] {
            for p in self.levels(side) {
                let n = self.orders.iter().filter(|o| o.side == side && o.price == p).count() as i64;
                rows.push((p, if side == Side::Buy { n } else { -n }));
            }
        }
        rows.sort_unstable();
        rows
    }
}

/// One step of a random sequence: the intents submitted at that step.
pub type StepIntents = Vec<OrderIntent>;

/// A random sequence over a narrow price range so that crossings,
/// same-level queues, self-crossings and expiries are all frequent.
pub fn random_sequence<R: Rng + ?Sized>(rng: &mut R, steps: usize) -> Vec<StepIntents> {
    let agents = rng.random_range(1..6);
    let centre: i64 = rng.random_range(500..700_000);
    let width: i64 = rng.random_range(1..12);
    (0..steps)
        .map(|_| {
            let n = rng.random_range(0..4);
            (0..n)
                .map(|_| OrderIntent {
                    agent: rng.random_range(0..agents),
                    side: if rng.random_bool(0.5) { Side::Buy } else { Side::Sell },
                    price: centre + rng.random_range(-width..=width),
                    horizon: rng.random_range(1..25),
                })
                .collect()
        })
        .collect()
}

/// Replays `seq` on the production book and on [`NaiveBook`], returning a
/// description of the first divergence.
pub fn compare_books(seq: &[StepIntents], allow_self_trade: bool) -> Result<usize, String> {
    let mut book = cda_market::book::OrderBook::with_self_trade(allow_self_trade);
    let mut naive = NaiveBook::new(allow_self_trade);
    let mut trades = 0;
    for (t, intents) in seq.iter().enumerate() {
        let t = t as u64;
        let a = book.expire(t);
        let b = naive.expire(t);
        if a != b {
            return Err(format!("step {t}: expired {a:?} vs {b:?}"));
        }
        for intent in intents {
            let a = book.submit(intent, t);
            let b = naive.submit(intent, t);
            if a != b {
                return Err(format!("step {t}: {intent:?} gave {a:?} vs {b:?}"));
            }
            trades += matches!(a, SubmitOutcome::Traded(_)) as usize;
        }
        if book.stats() != naive.stats() {
            return Err(format!("step {t}: stats {:?} vs {:?}", book.stats(), naive.stats()));
        }
        if book.snapshot() != naive.snapshot() {
            return Err(format!("step {t}: snapshot differs"));
        }
    }
    Ok(trades)
}

/// Whether every trade price lies within `band` of the close of the
/// previous period (the initial price during the first period).
pub fn band_violations(out: &cda_market::RunOutput) -> Vec<String> {
    let cfg = &out.config;
    let spp = cfg.steps_per_period;
    out.trades
        .iter()
        .filter_map(|tr| {
            let period = tr.step / spp;
            let reference = if period == 0 {
                cfg.p0
            } else {
                out.records[(period * spp - 1) as usize].price
            };
            let price = tr.price as f64 * cfg.tick;
            let rel = (price / reference - 1.0).abs();
            (rel > cfg.circuit_breaker_band + 1e-9)
                .then(|| format!("step {}: trade at {price} vs close {reference}", tr.step))
        })
        .collect()
}
