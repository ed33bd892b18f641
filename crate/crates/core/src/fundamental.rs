//! Exogenous fundamental value.
//!
//! The log fundamental value performs a driftless Gaussian random walk. The
//! engine advances in sub-steps of `dt` time units, so each sub-step draws an
//! increment with standard deviation `sigma_eps * sqrt(dt)`; over one whole
//! time unit the increments aggregate to standard deviation `sigma_eps`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalState {
    pub value: f64,
    pub time: u64,
}

impl FundamentalState {
    pub fn new(value: f64) -> Self {
        Self { value, time: 0 }
    }

    /// Applies a given log-increment and advances time by one step.
    pub fn apply_increment(self, increment: f64) -> Result<Self> {
        let value = self.value * increment.exp();
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonFinite {
                step: self.time,
                what: format!("fundamental value {value} after increment {increment}"),
            });
        }
        Ok(Self {
            value,
            time: self.time + 1,
        })
    }
}

/// Per-step standard deviation of the log increment.
pub fn step_std(sigma_eps: f64, dt: f64) -> f64 {
    sigma_eps * dt.sqrt()
}

pub fn step_fundamental<R: Rng + ?Sized>(
    state: FundamentalState,
    sigma_eps: f64,
    dt: f64,
    rng: &mut R,
) -> Result<FundamentalState> {
    debug_assert!(sigma_eps >= 0.0 && dt > 0.0);
    let z: f64 = rng.sample(StandardNormal);
    state.apply_increment(step_std(sigma_eps, dt) * z)
}
