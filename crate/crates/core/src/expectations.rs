//! Price expectations and order intents.
//!
//! A fundamentalist expects `p_f (1 + N(0, σ_ε/γ_f))`. A chartist expects the
//! current price shifted by a half-Gaussian of scale `σ_τ/γ_c` (up for
//! optimists, down for pessimists), where `σ_τ` is the dispersion of recent
//! prices over the agent's horizon. The agent then buys below or sells above
//! its expectation by a random exponential margin `k`.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::population::{Agent, AgentType};

/// Slack used when snapping to the tick grid, in ticks.
const SNAP_EPS: f64 = 1e-6;

/// The price grid. Prices are carried as integer multiples of `size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickGrid {
    pub size: f64,
}

impl TickGrid {
    pub fn new(size: f64) -> Self {
        assert!(size > 0.0, "tick size must be positive");
        Self { size }
    }

    pub fn floor_ticks(&self, price: f64) -> i64 {
        (price / self.size + SNAP_EPS).floor() as i64
    }

    pub fn ceil_ticks(&self, price: f64) -> i64 {
        (price / self.size - SNAP_EPS).ceil() as i64
    }

    pub fn nearest_ticks(&self, price: f64) -> i64 {
        (price / self.size).round() as i64
    }

    pub fn price(&self, ticks: i64) -> f64 {
        ticks as f64 * self.size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

/// A one-unit order an agent wants to place. `price` is in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderIntent {
    pub agent: usize,
    pub side: Side,
    pub price: i64,
    pub horizon: usize,
}

impl OrderIntent {
    pub const QUANTITY: u32 = 1;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationParams {
    pub gamma_f: f64,
    pub gamma_c: f64,
    /// Mean of the exponential order margin `k`.
    pub k_scale: f64,
    pub sigma_eps: f64,
    pub grid: TickGrid,
    /// Use the aligned mean (same window as the deviations) in `rolling_sigma`.
    pub aligned_sigma: bool,
}

impl Default for ExpectationParams {
    fn default() -> Self {
        Self {
            gamma_f: 1.0,
            gamma_c: 0.1,
            k_scale: 0.1,
            sigma_eps: 0.005,
            grid: TickGrid::new(0.0005),
            aligned_sigma: false,
        }
    }
}

/// Price dispersion over the last `tau` steps.
///
/// `history` ends with `p_{t-1}`. Computes
/// `σ² = (√τ/τ) Σ_{k=1..τ} (p_{t-k} − p̄)²` with
/// `p̄ = (1/τ) Σ_{k=1..τ} p_{t-1-k}`, i.e. the mean window sits one step
/// further back than the deviation window. With fewer than `τ + 1` prices the
/// window shrinks to what is available; fewer than two prices give 0.
pub fn rolling_sigma(history: &[f64], tau: usize) -> f64 {
    rolling_sigma_with(history, tau, false)
}

pub fn rolling_sigma_with(history: &[f64], tau: usize, aligned: bool) -> f64 {
    let len = history.len();
    if len < 2 || tau == 0 {
        return 0.0;
    }
    let tau = tau.min(len - 1);
    let dev_window = &history[len - tau..];
    let mean_window = if aligned {
        dev_window
    } else {
        &history[len - 1 - tau..len - 1]
    };
    let mean = mean_window.iter().sum::<f64>() / tau as f64;
    let ss: f64 = dev_window.iter().map(|p| (p - mean).powi(2)).sum();
    let tau = tau as f64;
    (ss * tau.sqrt() / tau).sqrt()
}

/// Draws the agent's expected price. The result is never below one tick.
#[allow(clippy::too_many_arguments)]
pub fn expected_price<R: Rng + ?Sized>(
    agent: &Agent,
    p: f64,
    p_f: f64,
    sigma_tau: f64,
    params: &ExpectationParams,
    rng: &mut R,
) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    expectation_from_draw(agent.kind, p, p_f, sigma_tau, params, z)
}

/// Deterministic core of [`expected_price`] given a standard-normal draw.
pub fn expectation_from_draw(
    kind: AgentType,
    p: f64,
    p_f: f64,
    sigma_tau: f64,
    params: &ExpectationParams,
    z: f64,
) -> f64 {
    let e = match kind {
        AgentType::Fundamentalist => p_f * (1.0 + z * params.sigma_eps / params.gamma_f),
        AgentType::Optimist => p + (z * sigma_tau / params.gamma_c).abs(),
        AgentType::Pessimist => p - (z * sigma_tau / params.gamma_c).abs(),
    };
    e.max(params.grid.size)
}

/// Exponential order margin with mean `sigma`.
pub fn draw_k<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    Exp::new(1.0 / sigma)
        .expect("k scale must be positive")
        .sample(rng)
}

/// Turns an expectation into a priced intent, or `None` when the agent
/// expects no change or the price would fall off the grid.
///
/// Buys are priced at `e (1 − k)` rounded down to the grid; sells at
/// `e (1 + k)` rounded up.
pub fn decide_order(agent: &Agent, expectation: f64, p: f64, k: f64, grid: &TickGrid) -> Option<OrderIntent> {
    let (side, ticks) = if expectation > p {
        (Side::Buy, grid.floor_ticks(expectation * (1.0 - k)))
    } else if expectation < p {
        (Side::Sell, grid.ceil_ticks(expectation * (1.0 + k)))
    } else {
        return None;
    };
    if ticks <= 0 {
        return None;
    }
    Some(OrderIntent {
        agent: agent.id,
        side,
        price: ticks,
        horizon: agent.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::Horizons;
    use crate::rng::{stream_rng, Stream};

    fn agent(kind: AgentType) -> Agent {
        Agent::new(0, kind, &Horizons::default(), 0, 0)
    }

    /// Direct transcription of the dispersion formula with explicit indices.
    fn sigma_oracle(h: &[f64], tau: usize) -> f64 {
        let t = h.len(); // h[t - k] is p_{t-k}
        let p = |k: usize| h[t - k];
        let mut mean = 0.0;
        for k in 1..=tau {
            mean += p(k + 1);
        }
        mean /= tau as f64;
        let mut s = 0.0;
        for k in 1..=tau {
            s += (p(k) - mean).powi(2) * (tau as f64).sqrt();
        }
        (s / tau as f64).sqrt()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(rolling_sigma(&[42.0; 400], 100), 0.0);
        assert!((rolling_sigma(&[100.0, 102.0], 1) - 2.0).abs() < 1e-12);
        assert_eq!(rolling_sigma(&[100.0], 100), 0.0);
        assert_eq!(rolling_sigma(&[], 100), 0.0);
    }

    #[test]
    fn sigma_matches_oracle() {
        let mut rng = stream_rng(4, Stream::Trading);
        for _ in 0..200 {
            let len = rng.random_range(2..500);
            let h: Vec<f64> = (0..len).map(|_| 250.0 + 50.0 * rng.random::<f64>()).collect();
            let tau = rng.random_range(1..350);
            let got = rolling_sigma(&h, tau);
            let want = sigma_oracle(&h, tau.min(len - 1));
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "{got} vs {want}");
        }
    }

    #[test]
    fn aligned_variant_uses_same_window() {
        let h = [1.0, 2.0, 3.0, 4.0];
        // deviations of {2,3,4} about 3, times sqrt(3)/3
        let want = (2.0 * 3f64.sqrt() / 3.0).sqrt();
        assert!((rolling_sigma_with(&h, 3, true) - want).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let params = ExpectationParams::default();
        let f = expectation_from_draw(AgentType::Fundamentalist, 280.0, 300.0, 5.0, &params, 0.0);
        assert_eq!(f, 300.0);
        let mut rng = stream_rng(8, Stream::Trading);
        for _ in 0..1000 {
            let e = expected_price(&agent(AgentType::Optimist), 300.0, 250.0, 0.0, &params, &mut rng);
            assert_eq!(e, 300.0);
            let e = expected_price(&agent(AgentType::Pessimist), 300.0, 250.0, 3.0, &params, &mut rng);
            assert!(e <= 300.0);
            let e = expected_price(&agent(AgentType::Optimist), 300.0, 250.0, 3.0, &params, &mut rng);
            assert!(e >= 300.0);
        }
        // floored at one tick
        let e = expectation_from_draw(AgentType::Pessimist, 1.0, 300.0, 10.0, &params, 5.0);
        assert_eq!(e, params.grid.size);
    }

    #[test]
    fn fundamentalist_expectation_is_unbiased() {
        let params = ExpectationParams::default();
        let mut rng = stream_rng(12, Stream::Trading);
        let n = 100_000;
        let a = agent(AgentType::Fundamentalist);
        let xs: Vec<f64> = (0..n)
            .map(|_| expected_price(&a, 310.0, 300.0, 0.0, &params, &mut rng))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = 300.0 * 0.005 / (n as f64).sqrt();
        assert!((mean - 300.0).abs() < 3.0 * se);
    }

    #[test]
    fn optimist_pessimist_gap_is_half_gaussian_mean() {
        let params = ExpectationParams::default();
        let mut rng = stream_rng(13, Stream::Trading);
        let sigma_tau = 0.4;
        let n = 100_000;
        let mut gaps = Vec::with_capacity(n);
        for _ in 0..n {
            let up = expected_price(&agent(AgentType::Optimist), 300.0, 300.0, sigma_tau, &params, &mut rng);
            let down = expected_price(&agent(AgentType::Pessimist), 300.0, 300.0, sigma_tau, &params, &mut rng);
            gaps.push(up - down);
        }
        let mean = gaps.iter().sum::<f64>() / n as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n as f64;
        let want = 2.0 * sigma_tau / params.gamma_c * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - want).abs() < 3.0 * (var / n as f64).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn k_moments() {
        let mut rng = stream_rng(14, Stream::Trading);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut below = 0usize;
        for _ in 0..n {
            let k = draw_k(&mut rng, 0.1);
            assert!(k >= 0.0);
            sum += k;
            if k <= 0.1 {
                below += 1;
            }
        }
        assert!((sum / n as f64 - 0.1).abs() < 0.001);
        let cdf = below as f64 / n as f64;
        assert!((cdf - (1.0 - (-1.0f64).exp())).abs() < 0.005);
    }

    #[test]
    fn order_examples() {
        let grid = TickGrid::new(0.0005);
        let a = agent(AgentType::Optimist);
        assert_eq!(decide_order(&a, 300.0, 300.0, 0.1, &grid), None);

        let buy = decide_order(&a, 310.0, 300.0, 0.1, &grid).unwrap();
        assert_eq!(buy.side, Side::Buy);
        assert_eq!(buy.price, 558_000);
        assert_eq!(grid.price(buy.price), 279.0);

        let sell = decide_order(&a, 290.0, 300.0, 0.0, &grid).unwrap();
        assert_eq!(sell.side, Side::Sell);
        assert_eq!(grid.price(sell.price), 290.0);

        // k > 1 pushes a bid below zero
        assert_eq!(decide_order(&a, 310.0, 300.0, 1.5, &grid), None);
    }

    #[test]
    fn rounding_direction() {
        let grid = TickGrid::new(0.0005);
        let a = agent(AgentType::Fundamentalist);
        let buy = decide_order(&a, 300.12345, 300.0, 0.0, &grid).unwrap();
        assert_eq!(grid.price(buy.price), 300.1230);
        let sell = decide_order(&a, 299.12345, 300.0, 0.0, &grid).unwrap();
        assert!((grid.price(sell.price) - 299.1235).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn reservations_bracket_expectation(e in 1.0f64..1000.0, p in 1.0f64..1000.0, k in 0.0f64..0.99) {
            let grid = TickGrid::new(0.0005);
            let a = agent(AgentType::Fundamentalist);
            if let Some(o) = decide_order(&a, e, p, k, &grid) {
                let price = grid.price(o.price);
                proptest::prop_assert!(o.price > 0);
                match o.side {
                    Side::Buy => proptest::prop_assert!(price <= e * (1.0 - k) + 1e-9 && price <= e),
                    Side::Sell => proptest::prop_assert!(price >= e * (1.0 + k) - 1e-9 && price >= e),
                }
                // never more than one tick from the formula
                let factor = if o.side == Side::Buy { 1.0 - k } else { 1.0 + k };
                proptest::prop_assert!((price - e * factor).abs() <= grid.size + 1e-9);
            }
        }
    }
}
