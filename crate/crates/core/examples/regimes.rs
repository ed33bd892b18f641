//! Ensemble binned by chartist fraction: extreme-event rates, regime
//! labels, depth and normalized sigma curves.
//!
//! cargo run --release --example regimes -- [seeds] [steps]

use cda_market::analytics::{analyze, AnalysisOptions};
use cda_market::engine::run_ensemble_map;
use cda_market::SimConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let config = SimConfig {
        steps,
        ..SimConfig::default()
    };
    let seed_list: Vec<u64> = (1..=seeds).collect();
    let runs = run_ensemble_map(&config, &seed_list, |out| out.records)
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<Vec<_>, _>>()?;
    let report = analyze(runs.as_slice(), &AnalysisOptions::default())?;

    println!("{:>5} {:>9} {:>7} {:>10} {:>10} {:>10}  label", "P_c", "count", "depth", "N_e vol", "N_e spr", "N_e gap");
    for b in report.regime_bins.iter().filter(|b| b.count > 0) {
        let ne = |i: usize| b.quantities[i].n_e;
        println!(
            "{:>5.2} {:>9} {:>7.1} {:>10.5} {:>10.5} {:>10.5}  {}{}",
            b.lo,
            b.count,
            b.mean_depth,
            ne(0),
            ne(1),
            ne(2),
            b.label.map_or("-".to_string(), |l| l.to_string()),
            if b.low_confidence { " (low confidence)" } else { "" }
        );
    }
    for bnd in &report.regime_boundaries {
        println!("{}: MRFM from {:?}, MMC from {:?}", bnd.kind.name(), bnd.mrfm_onset, bnd.mmc_onset);
    }
    println!("depth vs P_c Spearman: {:?}", report.depth_spearman);
    for c in &report.sigma_curves {
        println!("{} sigma peaks at P_c {:.3}, drop above peak {:?}", c.kind.name(), c.argmax_pc, c.drop_above_peak);
    }
    Ok(())
}
