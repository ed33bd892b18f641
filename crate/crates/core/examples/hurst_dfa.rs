//! Detrended fluctuation analysis on reference processes and on a
//! simulated market.

use cda_market::analytics::dfa::{default_box_sizes, dfa};
use cda_market::analytics::series::{extract, period_samples};
use cda_market::analytics::SeriesKind;
use cda_market::{run_simulation, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(name: &str, xs: &[f64]) -> anyhow::Result<()> {
    let fit = dfa(xs, &default_box_sizes(xs.len()))?;
    println!("{name:<28} n={:<8} H={:.3} (se {:.3})", xs.len(), fit.hurst, fit.stderr);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise: Vec<f64> = (0..1 << 16).map(|_| rng.sample(StandardNormal)).collect();
    let walk: Vec<f64> = noise
        .iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect();
    report("white noise", &noise)?;
    report("random walk", &walk)?;

    let out = run_simulation(&SimConfig {
        seed: 1,
        steps: 400_000,
        ..SimConfig::default()
    })?;
    let samples = period_samples(&out.records, out.config.steps_per_period);
    for kind in [SeriesKind::Return, SeriesKind::Volatility, SeriesKind::Spread, SeriesKind::Volume] {
        report(&format!("simulated {}", kind.name()), &extract(&samples, kind))?;
    }
    Ok(())
}
