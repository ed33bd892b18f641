//! Agent population and opinion switching.
//!
//! Agents are fundamentalists, optimists or pessimists (the last two are
//! chartists). Every step each agent may switch type with a probability
//! `rate * dt`, where the rates combine a herding term (the size of the
//! destination group) with a profit differential:
//!
//! | from → to | rate |
//! |-----------|------|
//! | − → +     | `v1 · n_c/N · exp(U1)` |
//! | + → −     | `v1 · n_c/N · exp(−U1)` |
//! | f → +     | `v2 · n_+/N · exp(U21)` |
//! | + → f     | `v2 · n_f/N · exp(−U21)` |
//! | f → −     | `v2 · n_−/N · exp(U22)` |
//! | − → f     | `v2 · n_f/N · exp(−U22)` |
//!
//! An agent whose group holds less than `floor_fraction` of the population
//! may not leave it, which keeps every group from being absorbed.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentType {
    Fundamentalist,
    Optimist,
    Pessimist,
}

impl AgentType {
    pub const ALL: [AgentType; 3] = [
        AgentType::Fundamentalist,
        AgentType::Optimist,
        AgentType::Pessimist,
    ];

    pub fn is_chartist(self) -> bool {
        !matches!(self, AgentType::Fundamentalist)
    }
}

/// Investment horizons in simulation steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizons {
    pub fundamentalist: usize,
    pub chartist: usize,
}

impl Horizons {
    pub fn for_type(&self, kind: AgentType) -> usize {
        if kind.is_chartist() {
            self.chartist
        } else {
            self.fundamentalist
        }
    }
}

impl Default for Horizons {
    fn default() -> Self {
        Self {
            fundamentalist: 300,
            chartist: 100,
        }
    }
}

/// A trader. Cash is held in integer ticks so that settlement is exact.
///
/// `reserved_cash` and `reserved_shares` track what the agent's resting
/// orders have committed; only the remainder is available for new orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: usize,
    pub kind: AgentType,
    pub horizon: usize,
    pub cash: i64,
    pub shares: i64,
    pub reserved_cash: i64,
    pub reserved_shares: i64,
}

impl Agent {
    pub fn new(id: usize, kind: AgentType, horizons: &Horizons, cash: i64, shares: i64) -> Self {
        Self {
            id,
            kind,
            horizon: horizons.for_type(kind),
            cash,
            shares,
            reserved_cash: 0,
            reserved_shares: 0,
        }
    }

    pub fn available_cash(&self) -> i64 {
        self.cash - self.reserved_cash
    }

    pub fn available_shares(&self) -> i64 {
        self.shares - self.reserved_shares
    }

    pub fn switch_to(&mut self, kind: AgentType, horizons: &Horizons) {
        self.kind = kind;
        self.horizon = horizons.for_type(kind);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PopulationCounts {
    pub n: usize,
    pub n_f: usize,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl PopulationCounts {
    pub fn from_agents(agents: &[Agent]) -> Self {
        let mut c = PopulationCounts {
            n: agents.len(),
            ..Default::default()
        };
        for a in agents {
            *c.get_mut(a.kind) += 1;
        }
        c
    }

    pub fn get(&self, kind: AgentType) -> usize {
        match kind {
            AgentType::Fundamentalist => self.n_f,
            AgentType::Optimist => self.n_plus,
            AgentType::Pessimist => self.n_minus,
        }
    }

    fn get_mut(&mut self, kind: AgentType) -> &mut usize {
        match kind {
            AgentType::Fundamentalist => &mut self.n_f,
            AgentType::Optimist => &mut self.n_plus,
            AgentType::Pessimist => &mut self.n_minus,
        }
    }

    pub fn n_chartists(&self) -> usize {
        self.n_plus + self.n_minus
    }

    /// Chartist fraction `P_c`.
    pub fn chartist_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.n_chartists() as f64 / self.n as f64
        }
    }

    /// Opinion index `x = (n_+ − n_−) / n_c`; zero when there are no chartists.
    pub fn opinion_index(&self) -> f64 {
        let nc = self.n_chartists();
        if nc == 0 {
            0.0
        } else {
            (self.n_plus as f64 - self.n_minus as f64) / nc as f64
        }
    }

    fn is_consistent(&self) -> bool {
        self.n_f + self.n_plus + self.n_minus == self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchParams {
    pub v1: f64,
    pub v2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Required return; the dividend-like term is `r = R * p_f`.
    pub big_r: f64,
    pub s: f64,
    /// Groups smaller than this fraction of `N` cannot lose members.
    pub floor_fraction: f64,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self {
            v1: 2.0,
            v2: 0.6,
            alpha1: 0.6,
            alpha2: 1.5,
            alpha3: 1.0,
            big_r: 0.0004,
            s: 0.75,
            floor_fraction: 0.008,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Optimistic,
    Pessimistic,
}

/// Mean of `Δp/Δt` over the most recent `horizon` steps of `history`.
///
/// Shorter histories use whatever is available; fewer than two prices give 0.
pub fn average_price_trend(history: &[f64], horizon: usize, dt: f64) -> f64 {
    if history.len() < 2 || horizon == 0 {
        return 0.0;
    }
    let h = horizon.min(history.len() - 1);
    let last = history[history.len() - 1];
    let first = history[history.len() - 1 - h];
    // the mean of telescoping differences
    (last - first) / (h as f64 * dt)
}

pub fn compute_u1(x: f64, trend: f64, p: f64, params: &SwitchParams) -> f64 {
    params.alpha1 * x + (params.alpha2 / params.v1) * (trend / p)
}

pub fn compute_u2(direction: Direction, trend: f64, p: f64, p_f: f64, params: &SwitchParams) -> f64 {
    let r = params.big_r * p_f;
    let chartist_profit = (r + trend / params.v2) / p - params.big_r;
    let fundamentalist_profit = params.s * ((p_f - p) / p).abs();
    let signed = match direction {
        Direction::Optimistic => chartist_profit,
        Direction::Pessimistic => -chartist_profit,
    };
    params.alpha3 * (signed - fundamentalist_profit)
}

/// Rate (per unit time) of switching `from → to`, before multiplying by `dt`.
///
/// `u` is the profit/herding index governing the pair: `U1` for
/// optimist/pessimist, `U21` for optimist/fundamentalist and `U22` for
/// pessimist/fundamentalist. The sign is applied here.
pub fn transition_rate(
    from: AgentType,
    to: AgentType,
    counts: &PopulationCounts,
    u: f64,
    params: &SwitchParams,
) -> Result<f64> {
    use AgentType::*;
    let n = counts.n as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let frac = |k: usize| k as f64 / n;
    let (prefactor, sign) = match (from, to) {
        (Pessimist, Optimist) => (params.v1 * frac(counts.n_chartists()), 1.0),
        (Optimist, Pessimist) => (params.v1 * frac(counts.n_chartists()), -1.0),
        (Fundamentalist, Optimist) => (params.v2 * frac(counts.n_plus), 1.0),
        (Optimist, Fundamentalist) => (params.v2 * frac(counts.n_f), -1.0),
        (Fundamentalist, Pessimist) => (params.v2 * frac(counts.n_minus), 1.0),
        (Pessimist, Fundamentalist) => (params.v2 * frac(counts.n_f), -1.0),
        (a, b) => {
            debug_assert_eq!(a, b);
            return Err(Error::InvalidTransition(format!("{a:?} -> {b:?}")));
        }
    };
    // an empty destination group (or a zero base rate) admits no flow at all
    let rate = if prefactor == 0.0 {
        0.0
    } else {
        prefactor * (sign * u).exp()
    };
    Ok(rate)
}

/// Per-step switching probability `rate * dt`, clamped to `[0, 1]`.
pub fn transition_probability(
    from: AgentType,
    to: AgentType,
    counts: &PopulationCounts,
    u: f64,
    params: &SwitchParams,
    dt: f64,
) -> Result<f64> {
    Ok((transition_rate(from, to, counts, u, params)? * dt).clamp(0.0, 1.0))
}

/// Market inputs for one switching round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSignal {
    pub price: f64,
    pub fundamental: f64,
    /// Average price trend over the chartist horizon.
    pub chartist_trend: f64,
    /// Average price trend over the fundamentalist horizon.
    pub fundamentalist_trend: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwitchStats {
    pub switches: u64,
    pub clamped: u64,
    pub floor_blocked: u64,
}

impl SwitchStats {
    pub fn merge(&mut self, other: SwitchStats) {
        self.switches += other.switches;
        self.clamped += other.clamped;
        self.floor_blocked += other.floor_blocked;
    }
}

/// The two admissible targets and their per-step probabilities for an agent
/// of each type, computed once from the counts frozen at step start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchTable {
    entries: [[(AgentType, f64); 2]; 3],
    pub clamped: u64,
}

impl SwitchTable {
    pub fn new(
        counts: &PopulationCounts,
        market: &MarketSignal,
        params: &SwitchParams,
        dt: f64,
    ) -> Result<Self> {
        use AgentType::*;
        let p = market.price;
        let pf = market.fundamental;
        let x = counts.opinion_index();
        let u1 = compute_u1(x, market.chartist_trend, p, params);
        let u21_c = compute_u2(Direction::Optimistic, market.chartist_trend, p, pf, params);
        let u22_c = compute_u2(Direction::Pessimistic, market.chartist_trend, p, pf, params);
        let u21_f = compute_u2(Direction::Optimistic, market.fundamentalist_trend, p, pf, params);
        let u22_f = compute_u2(Direction::Pessimistic, market.fundamentalist_trend, p, pf, params);

        let pairs = [
            (Fundamentalist, [(Optimist, u21_f), (Pessimist, u22_f)]),
            (Optimist, [(Pessimist, u1), (Fundamentalist, u21_c)]),
            (Pessimist, [(Optimist, u1), (Fundamentalist, u22_c)]),
        ];
        let mut entries = [[(Fundamentalist, 0.0); 2]; 3];
        let mut clamped = 0;
        for (from, targets) in pairs {
            let mut row = [(Fundamentalist, 0.0); 2];
            for (slot, (to, u)) in targets.into_iter().enumerate() {
                let raw = transition_rate(from, to, counts, u, params)? * dt;
                if !raw.is_finite() {
                    return Err(Error::NonFinite {
                        step: 0,
                        what: format!("switching probability {from:?}->{to:?}"),
                    });
                }
                if !(0.0..=1.0).contains(&raw) {
                    clamped += 1;
                }
                row[slot] = (to, raw.clamp(0.0, 1.0));
            }
            // both targets share one uniform draw, so their sum must fit in [0, 1]
            let total = row[0].1 + row[1].1;
            if total > 1.0 {
                clamped += 1;
                row[0].1 /= total;
                row[1].1 /= total;
            }
            entries[Self::row(from)] = row;
        }
        Ok(Self { entries, clamped })
    }

    fn row(kind: AgentType) -> usize {
        match kind {
            AgentType::Fundamentalist => 0,
            AgentType::Optimist => 1,
            AgentType::Pessimist => 2,
        }
    }

    pub fn targets(&self, from: AgentType) -> [(AgentType, f64); 2] {
        self.entries[Self::row(from)]
    }

    /// Maps one uniform draw to the destination type, if any.
    pub fn pick(&self, from: AgentType, u: f64) -> Option<AgentType> {
        let [(a, pa), (b, pb)] = self.targets(from);
        if u < pa {
            Some(a)
        } else if u < pa + pb {
            Some(b)
        } else {
            None
        }
    }
}

fn floor_count(n: usize, floor_fraction: f64) -> f64 {
    floor_fraction * n as f64
}

/// Attempts one switch for each listed agent, in the given order.
///
/// Probabilities come from `table` (built from counts frozen at step start).
/// The floor rule is checked against both the frozen and the live group
/// sizes, so a group that falls below the floor mid-step stops losing
/// members for the rest of the step.
pub fn switch_agents<R: Rng + ?Sized>(
    agents: &mut [Agent],
    indices: impl IntoIterator<Item = usize>,
    counts: &mut PopulationCounts,
    table: &SwitchTable,
    params: &SwitchParams,
    horizons: &Horizons,
    rng: &mut R,
) -> SwitchStats {
    let floor = floor_count(counts.n, params.floor_fraction);
    let frozen = *counts;
    let mut stats = SwitchStats {
        clamped: table.clamped,
        ..Default::default()
    };
    for i in indices {
        let u: f64 = rng.random();
        let from = agents[i].kind;
        let Some(to) = table.pick(from, u) else {
            continue;
        };
        if (frozen.get(from) as f64) < floor || (counts.get(from) as f64) < floor {
            stats.floor_blocked += 1;
            continue;
        }
        *counts.get_mut(from) -= 1;
        *counts.get_mut(to) += 1;
        agents[i].switch_to(to, horizons);
        stats.switches += 1;
    }
    debug_assert!(counts.is_consistent());
    stats
}

/// One switching round over the whole population, in agent-id order.
pub fn apply_switching<R: Rng + ?Sized>(
    agents: &mut [Agent],
    counts: &mut PopulationCounts,
    market: &MarketSignal,
    params: &SwitchParams,
    horizons: &Horizons,
    dt: f64,
    rng: &mut R,
) -> Result<SwitchStats> {
    if !counts.is_consistent() || counts.n != agents.len() {
        return Err(Error::Invariant {
            step: 0,
            what: format!("population counts {counts:?} disagree with {} agents", agents.len()),
        });
    }
    let table = SwitchTable::new(counts, market, params, dt)?;
    let n = agents.len();
    Ok(switch_agents(agents, 0..n, counts, &table, params, horizons, rng))
}
