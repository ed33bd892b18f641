//! Power-law tail fits, the power-law vs exponential comparison, empirical
//! CCDFs and extreme-event rates.

use cda_market::analytics::series::{extract, period_samples};
use cda_market::analytics::tails::{
    ccdf, extreme_event_rate, fit_power_law, power_law_vs_exponential, tail_above_quantile,
};
use cda_market::analytics::SeriesKind;
use cda_market::{run_simulation, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn describe(name: &str, xs: &[f64]) -> anyhow::Result<()> {
    let (x_min, tail) = tail_above_quantile(xs, 0.95)?;
    let fit = fit_power_law(&tail, x_min)?;
    let z = power_law_vs_exponential(&tail, &fit);
    println!(
        "{name:<22} alpha {:.2} +/- {:.2}, x_min {:.3e}, n_tail {}, z {:+.2} ({}), N_e {:.2e}",
        fit.alpha,
        fit.stderr,
        x_min,
        fit.n_tail,
        z,
        if z > 0.0 { "power law" } else { "exponential" },
        extreme_event_rate(xs)?
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pareto: Vec<f64> = (0..50_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5)).collect();
    describe("Pareto(2.5)", &pareto)?;

    let out = run_simulation(&SimConfig {
        seed: 2,
        steps: 400_000,
        ..SimConfig::default()
    })?;
    let samples = period_samples(&out.records, out.config.steps_per_period);
    let spread = extract(&samples, SeriesKind::Spread);
    describe("simulated spread", &spread)?;
    describe("simulated first gap", &extract(&samples, SeriesKind::FirstGap))?;
    describe("simulated |return|", &extract(&samples, SeriesKind::Volatility))?;

    println!("\nspread CCDF (every 10th point):");
    for (x, p) in ccdf(&spread).iter().step_by(10) {
        println!("  {x:.4}  {p:.4}");
    }
    Ok(())
}
