//! Excess kurtosis of returns over growing horizons, against the same
//! statistic for the fundamental value.

use cda_market::analytics::gaussianity::aggregational_gaussianity_pooled;
use cda_market::analytics::series::period_samples;
use cda_market::engine::run_ensemble_map;
use cda_market::SimConfig;

fn main() -> anyhow::Result<()> {
    let config = SimConfig {
        steps: 100_000,
        ..SimConfig::default()
    };
    let seeds: Vec<u64> = (1..=10).collect();
    let paths = run_ensemble_map(&config, &seeds, |out| {
        let samples = period_samples(&out.records, out.config.steps_per_period);
        let prices: Vec<f64> = samples.iter().map(|s| s.price).collect();
        let fundamentals: Vec<f64> = samples.iter().map(|s| s.fundamental).collect();
        (prices, fundamentals)
    })
    .into_iter()
    .map(|(_, r)| r)
    .collect::<Result<Vec<_>, _>>()?;

    let lags = [1, 2, 4, 8, 16, 32, 64];
    let prices: Vec<&[f64]> = paths.iter().map(|p| p.0.as_slice()).collect();
    let fundamentals: Vec<&[f64]> = paths.iter().map(|p| p.1.as_slice()).collect();
    let market = aggregational_gaussianity_pooled(&prices, &lags)?;
    let fv = aggregational_gaussianity_pooled(&fundamentals, &lags)?;
    println!("{:>4} {:>10} {:>12} {:>8}", "lag", "price", "fundamental", "returns");
    for (m, f) in market.iter().zip(&fv) {
        println!("{:>4} {:>10.3} {:>12.3} {:>8}", m.lag, m.excess_kurtosis, f.excess_kurtosis, m.samples);
    }
    Ok(())
}
