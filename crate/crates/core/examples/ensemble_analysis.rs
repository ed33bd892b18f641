//! The file-based pipeline: run an ensemble to disk, then analyze the
//! step files and write the analysis artifacts next to them.
//!
//! cargo run --release --example ensemble_analysis -- <out_dir> [seeds] [steps]

use std::path::PathBuf;

use cda_market::analytics::{analyze, AnalysisOptions};
use cda_market::experiment::{render_report, with_workers};
use cda_market::io::{self, CsvRuns};
use cda_market::{run_ensemble, SimConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "ensemble-out".into()));
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50_000);
    let config = SimConfig {
        steps,
        ..SimConfig::default()
    };
    let seed_list: Vec<u64> = (1..=seeds).collect();

    let results = with_workers(None, || run_ensemble(&config, &seed_list))?;
    let mut step_files = Vec::new();
    for (seed, result) in results {
        let files = io::write_run(&out.join(format!("run-{seed}")), &result?)?;
        step_files.push(files.steps);
    }

    let report = analyze(&CsvRuns { paths: step_files }, &AnalysisOptions::default())?;
    let written = io::write_analysis(&out.join("analysis"), &report)?;
    print!("{}", render_report(&report));
    println!("\n{} analysis files under {}", written.len(), out.join("analysis").display());
    Ok(())
}
