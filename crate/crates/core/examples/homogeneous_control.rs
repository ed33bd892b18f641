//! Fundamentalists only against the mixed population: Hurst exponents,
//! tails and kurtosis side by side.

use cda_market::analytics::{analyze, AnalysisOptions, AnalysisReport, SeriesKind, TailKind};
use cda_market::engine::run_ensemble_map;
use cda_market::SimConfig;

fn ensemble(base: SimConfig) -> anyhow::Result<AnalysisReport> {
    let config = SimConfig { steps: 100_000, ..base };
    let seeds: Vec<u64> = (1..=10).collect();
    let runs = run_ensemble_map(&config, &seeds, |out| out.records)
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(analyze(runs.as_slice(), &AnalysisOptions::default())?)
}

fn main() -> anyhow::Result<()> {
    let homo = ensemble(SimConfig::homogeneous())?;
    let hetero = ensemble(SimConfig::default())?;

    println!("{:<16} {:>13} {:>13}", "Hurst", "homogeneous", "heterogeneous");
    for kind in SeriesKind::ALL {
        let h = |r: &AnalysisReport| r.hurst_of(kind).map_or(f64::NAN, |f| f.hurst);
        println!("{:<16} {:>13.3} {:>13.3}", kind.name(), h(&homo), h(&hetero));
    }
    println!("\n{:<16} {:>13} {:>13}", "tail alpha", "homogeneous", "heterogeneous");
    for kind in TailKind::ALL {
        let a = |r: &AnalysisReport| r.tail_of(kind).and_then(|t| t.fit).map_or(f64::NAN, |f| f.alpha);
        println!("{:<16} {:>13.2} {:>13.2}", kind.name(), a(&homo), a(&hetero));
    }
    println!("\n{:<16} {:>13} {:>13}", "kurtosis lag", "homogeneous", "heterogeneous");
    for (a, b) in homo.kurtosis.iter().zip(&hetero.kurtosis) {
        println!("{:<16} {:>13.3} {:>13.3}", a.lag, a.excess_kurtosis, b.excess_kurtosis);
    }
    Ok(())
}
