//! The trading loop.
//!
//! Each step runs, in order:
//!
//! 1. expiry sweep of the book;
//! 2. opinion switching (counts frozen at step start);
//! 3. one sub-step of the fundamental value;
//! 4. one agent chosen uniformly at random;
//! 5. expectation and order intent;
//! 6. circuit breaker, then budget check;
//! 7. submission and settlement;
//! 8. new price (trade, mid-point, or previous);
//! 9. a [`StepRecord`].
//!
//! A run is a pure function of its [`SimConfig`] (seed included).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::book::{current_price, OrderBook, SubmitOutcome, Trade};
use crate::config::{SimConfig, SwitchingMode};
use crate::error::{Error, Result};
use crate::expectations::{decide_order, draw_k, expected_price, rolling_sigma_with, OrderIntent, Side};
use crate::fundamental::{step_fundamental, FundamentalState};
use crate::population::{
    apply_switching, average_price_trend, switch_agents, Agent, AgentType, MarketSignal, PopulationCounts,
    SwitchStats, SwitchTable,
};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub price: f64,
    pub fundamental: f64,
    pub best_bid: Option<f64>,
    pub best_ask: Option<f64>,
    pub spread: Option<f64>,
    pub bid_gap: Option<f64>,
    pub ask_gap: Option<f64>,
    pub depth: usize,
    pub n_f: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub traded: bool,
    pub trade_price: Option<f64>,
}

impl StepRecord {
    pub fn chartist_fraction(&self) -> f64 {
        let n = self.n_f + self.n_plus + self.n_minus;
        if n == 0 {
            0.0
        } else {
            (self.n_plus + self.n_minus) as f64 / n as f64
        }
    }

    /// Mean of the available first gaps on the two sides.
    pub fn first_gap(&self) -> Option<f64> {
        match (self.bid_gap, self.ask_gap) {
            (Some(b), Some(a)) => Some((a + b) / 2.0),
            (g, None) | (None, g) => g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub step: u64,
    /// Price in ticks.
    pub price: i64,
    pub buyer: usize,
    pub seller: usize,
    pub aggressor_buy: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounters {
    pub trades: u64,
    pub limit_orders: u64,
    pub no_order: u64,
    pub budget_rejections: u64,
    pub band_rejections: u64,
    pub self_trade_cancels: u64,
    pub expired: u64,
    pub switches: u64,
    pub clamped_probabilities: u64,
    pub floor_blocked: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    /// Cash in ticks.
    pub cash: i64,
    pub shares: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: SimConfig,
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub trades: Vec<TradeRecord>,
    pub agents: Vec<Agent>,
    pub counters: RunCounters,
    pub initial_totals: Totals,
    /// Book snapshots `(step, levels)` taken after the listed steps.
    pub snapshots: Vec<(u64, Vec<(i64, i64)>)>,
}

impl RunOutput {
    pub fn final_totals(&self) -> Totals {
        totals(&self.agents)
    }
}

fn totals(agents: &[Agent]) -> Totals {
    Totals {
        cash: agents.iter().map(|a| a.cash).sum(),
        shares: agents.iter().map(|a| a.shares).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Budget,
    Band,
}

/// Rejects a buy whose reservation exceeds uncommitted cash, or a sell when
/// the agent has no uncommitted share. Prices are in ticks.
pub fn enforce_budget(agent: &Agent, intent: OrderIntent) -> std::result::Result<OrderIntent, Rejection> {
    let ok = match intent.side {
        Side::Buy => agent.available_cash() >= intent.price,
        Side::Sell => agent.available_shares() >= 1,
    };
    if ok {
        Ok(intent)
    } else {
        Err(Rejection::Budget)
    }
}

/// Whether `price` lies within `±band` of `reference_close` (inclusive).
pub fn within_band(price: f64, reference_close: f64, band: f64) -> bool {
    let tol = 1e-9 * reference_close;
    price <= reference_close * (1.0 + band) + tol && price >= reference_close * (1.0 - band) - tol
}

pub fn circuit_breaker(
    intent: OrderIntent,
    reservation_price: f64,
    reference_close: f64,
    band: f64,
) -> std::result::Result<OrderIntent, Rejection> {
    if within_band(reservation_price, reference_close, band) {
        Ok(intent)
    } else {
        Err(Rejection::Band)
    }
}

/// Moves one share from seller to buyer and `trade.price` ticks of cash back.
pub fn settle_trade(trade: &Trade, agents: &mut [Agent]) -> Result<()> {
    let price = trade.price;
    let (b, s) = (trade.buyer, trade.seller);
    if agents[b].cash < price || agents[s].shares < 1 {
        return Err(Error::Invariant {
            step: trade.step,
            what: format!(
                "settlement of {price} ticks: buyer {b} cash {}, seller {s} shares {}",
                agents[b].cash, agents[s].shares
            ),
        });
    }
    agents[b].cash -= price;
    agents[b].shares += 1;
    agents[s].cash += price;
    agents[s].shares -= 1;
    Ok(())
}

fn reserve(agent: &mut Agent, side: Side, price: i64) {
    match side {
        Side::Buy => agent.reserved_cash += price,
        Side::Sell => agent.reserved_shares += 1,
    }
}

fn release(agent: &mut Agent, side: Side, price: i64) {
    match side {
        Side::Buy => agent.reserved_cash -= price,
        Side::Sell => agent.reserved_shares -= 1,
    }
}

pub fn initial_agents(config: &SimConfig) -> Vec<Agent> {
    let (n_f, n_plus, _) = config.initial_composition();
    let horizons = config.horizons();
    let cash = config.grid().nearest_ticks(config.initial_cash);
    (0..config.n_agents)
        .map(|i| {
            let kind = if i < n_f {
                AgentType::Fundamentalist
            } else if i < n_f + n_plus {
                AgentType::Optimist
            } else {
                AgentType::Pessimist
            };
            Agent::new(i, kind, &horizons, cash, config.initial_shares)
        })
        .collect()
}

pub fn run_simulation(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    let grid = config.grid();
    let horizons = config.horizons();
    let switch_params = config.switch_params();
    let exp_params = config.expectation_params();
    let seed = config.seed;
    let mut fund_rng = stream_rng(seed, Stream::Fundamental);
    let mut switch_rng = stream_rng(seed, Stream::Switching);
    let mut trade_rng = stream_rng(seed, Stream::Trading);

    let mut agents = initial_agents(config);
    let mut counts = PopulationCounts::from_agents(&agents);
    let initial_totals = totals(&agents);
    let mut book = OrderBook::with_self_trade(config.allow_self_trade);
    let mut fundamental = FundamentalState::new(config.pf0);
    let mut history: Vec<f64> = Vec::with_capacity(config.steps as usize + 1);
    history.push(config.p0);
    let mut price = config.p0;
    let mut reference_close = config.p0;
    let mut counters = RunCounters::default();
    let mut records = Vec::with_capacity(config.steps as usize);
    let mut trades = Vec::new();
    let mut snapshots = Vec::new();
    let mut snapshot_steps = config.snapshot_steps.clone();
    snapshot_steps.sort_unstable();
    let mut next_snapshot = snapshot_steps.into_iter().peekable();
    let band = config.circuit_breaker_band;

    for t in 0..config.steps {
        for o in book.expire(t) {
            release(&mut agents[o.agent], o.side, o.price);
            counters.expired += 1;
        }

        let trader = trade_rng.random_range(0..agents.len());

        if config.switching {
            let market = MarketSignal {
                price,
                fundamental: fundamental.value,
                chartist_trend: average_price_trend(&history, horizons.chartist, config.dt),
                fundamentalist_trend: average_price_trend(&history, horizons.fundamentalist, config.dt),
            };
            let stats = match config.switching_mode {
                SwitchingMode::AllAgents => apply_switching(
                    &mut agents,
                    &mut counts,
                    &market,
                    &switch_params,
                    &horizons,
                    config.dt,
                    &mut switch_rng,
                ),
                SwitchingMode::TraderOnly => SwitchTable::new(&counts, &market, &switch_params, config.dt).map(|table| {
                    switch_agents(
                        &mut agents,
                        [trader],
                        &mut counts,
                        &table,
                        &switch_params,
                        &horizons,
                        &mut switch_rng,
                    )
                }),
            }
            .map_err(|e| match e {
                Error::NonFinite { what, .. } => Error::NonFinite { step: t, what },
                Error::Invariant { what, .. } => Error::Invariant { step: t, what },
                other => other,
            })?;
            accumulate(&mut counters, stats);
        }

        fundamental = step_fundamental(fundamental, config.sigma_eps, config.dt, &mut fund_rng)
            .map_err(|_| Error::NonFinite {
                step: t,
                what: format!("fundamental value from {}", fundamental.value),
            })?;

        let agent = &agents[trader];
        let sigma_tau = if agent.kind.is_chartist() {
            rolling_sigma_with(&history, agent.horizon, exp_params.aligned_sigma)
        } else {
            0.0
        };
        let expectation = expected_price(agent, price, fundamental.value, sigma_tau, &exp_params, &mut trade_rng);
        let k = draw_k(&mut trade_rng, exp_params.k_scale);
        let mut last_trade = None;

        match decide_order(agent, expectation, price, k, &grid) {
            None => counters.no_order += 1,
            Some(intent) => {
                let marketable = match intent.side {
                    Side::Buy => book.best_ask().filter(|&a| intent.price >= a),
                    Side::Sell => book.best_bid().filter(|&b| intent.price <= b),
                };
                let filtered = circuit_breaker(intent, grid.price(intent.price), reference_close, band)
                    .and_then(|i| match marketable {
                        Some(q) if !within_band(grid.price(q), reference_close, band) => Err(Rejection::Band),
                        _ => Ok(i),
                    })
                    .and_then(|i| enforce_budget(agent, i));
                match filtered {
                    Err(Rejection::Band) => counters.band_rejections += 1,
                    Err(Rejection::Budget) => counters.budget_rejections += 1,
                    Ok(intent) => match book.submit(&intent, t) {
                        SubmitOutcome::Rested(o) => {
                            reserve(&mut agents[o.agent], o.side, o.price);
                            counters.limit_orders += 1;
                        }
                        SubmitOutcome::SelfTradeCancelled => counters.self_trade_cancels += 1,
                        SubmitOutcome::Traded(trade) => {
                            let r = trade.resting;
                            release(&mut agents[r.agent], r.side, r.price);
                            settle_trade(&trade, &mut agents)?;
                            counters.trades += 1;
                            trades.push(TradeRecord {
                                step: t,
                                price: trade.price,
                                buyer: trade.buyer,
                                seller: trade.seller,
                                aggressor_buy: trade.aggressor == Side::Buy,
                            });
                            last_trade = Some(trade);
                        }
                    },
                }
            }
        }

        price = current_price(&book, last_trade.as_ref(), price, &grid);
        if !price.is_finite() || price <= 0.0 {
            return Err(Error::NonFinite {
                step: t,
                what: format!("price {price}"),
            });
        }
        history.push(price);

        let stats = book.stats();
        let to_price = |x: Option<i64>| x.map(|v| grid.price(v));
        records.push(StepRecord {
            step: t,
            price,
            fundamental: fundamental.value,
            best_bid: to_price(stats.best_bid),
            best_ask: to_price(stats.best_ask),
            spread: to_price(stats.spread),
            bid_gap: to_price(stats.bid_gap),
            ask_gap: to_price(stats.ask_gap),
            depth: stats.depth,
            n_f: counts.n_f,
            n_plus: counts.n_plus,
            n_minus: counts.n_minus,
            traded: last_trade.is_some(),
            trade_price: last_trade.map(|tr| grid.price(tr.price)),
        });

        if next_snapshot.peek() == Some(&t) {
            snapshots.push((t, book.snapshot()));
            while next_snapshot.peek() == Some(&t) {
                next_snapshot.next();
            }
        }

        if (t + 1) % config.steps_per_period == 0 {
            reference_close = price;
        }
    }

    Ok(RunOutput {
        config: config.clone(),
        seed,
        records,
        trades,
        agents,
        counters,
        initial_totals,
        snapshots,
    })
}

fn accumulate(c: &mut RunCounters, s: SwitchStats) {
    c.switches += s.switches;
    c.clamped_probabilities += s.clamped;
    c.floor_blocked += s.floor_blocked;
}

/// Runs `config` once per seed in parallel. Failures are reported per seed.
pub fn run_ensemble(config: &SimConfig, seeds: &[u64]) -> Vec<(u64, Result<RunOutput>)> {
    run_ensemble_map(config, seeds, |out| out)
}

/// Like [`run_ensemble`] but reduces each finished run with `f` before the
/// next one is collected, so full-scale ensembles need not be held in memory.
pub fn run_ensemble_map<T, F>(config: &SimConfig, seeds: &[u64], f: F) -> Vec<(u64, Result<T>)>
where
    T: Send,
    F: Fn(RunOutput) -> T + Sync,
{
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimConfig {
                seed,
                ..config.clone()
            };
            (seed, run_simulation(&cfg).map(&f))
        })
        .collect()
}
