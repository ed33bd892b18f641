//! Agent-based continuous double-auction market.
//!
//! A population of fundamentalists and chartists (optimists and pessimists)
//! trades one stock through a limit order book. Agents switch type under
//! herding and profit pressure, one randomly chosen agent submits a
//! one-unit order per step, and the book prices every step from the last
//! trade or the quote mid-point.
//!
//! The [`analytics`] module measures what the market produces: Hurst
//! exponents by detrended fluctuation analysis, power-law tail exponents,
//! extreme-event rates, and market regimes as a function of the chartist
//! fraction.
//!
//! Runnable walkthroughs of each capability live in the crate's
//! `examples/` directory (`cargo run --release --example <name>`).

pub mod analytics;
pub mod book;
pub mod config;
pub mod engine;
pub mod error;
pub mod expectations;
pub mod fundamental;
pub mod io;
pub mod experiment;
pub mod population;
pub mod rng;

pub use config::SimConfig;
pub use engine::{run_ensemble, run_simulation, RunOutput, StepRecord};
pub use error::{Error, Result};
