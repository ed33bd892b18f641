use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use cda_market::analytics::AnalysisOptions;
use cda_market::experiment::{self, ReproduceOptions, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "cda-market", version, about = "Double-auction market simulator and analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeds 1..=n in parallel.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Analyze the steps.csv files of one or more runs.
    Analyze {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        bin_width: f64,
        #[arg(long, default_value_t = 0.95)]
        xmin_quantile: f64,
        #[arg(long, default_value_t = 100)]
        steps_per_period: u64,
    },
    /// Run the reference ensemble and the full analysis.
    ReproducePaper {
        /// 1.0 runs 100 seeds of 10^6 steps.
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        /// Fundamentalists only, switching off.
        #[arg(long)]
        homogeneous: bool,
        #[arg(long, default_value = "reproduce")]
        out: PathBuf,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, out } => {
            experiment::cmd_run(&config, seed, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Ensemble {
            config,
            seeds,
            out,
            workers,
        } => {
            let m = experiment::cmd_ensemble(&config, seeds, &out, workers)?;
            let failed: Vec<_> = m.failed_runs().collect();
            for r in &failed {
                eprintln!("seed {} failed: {}", r.seed, r.error.as_deref().unwrap_or(""));
            }
            println!("wrote {} runs to {}", m.runs.len() - failed.len(), out.display());
            if !failed.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Analyze {
            inputs,
            out,
            bin_width,
            xmin_quantile,
            steps_per_period,
        } => {
            let options = AnalysisOptions {
                bin_width,
                xmin_quantile,
                steps_per_period,
                ..AnalysisOptions::default()
            };
            let (report, _) = experiment::cmd_analyze(&inputs, &out, &options).context("analysis failed")?;
            print!("{}", experiment::render_report(&report));
        }
        Command::ReproducePaper {
            scale,
            homogeneous,
            out,
            workers,
        } => {
            let opts = ReproduceOptions {
                scale,
                homogeneous,
                workers,
                ..ReproduceOptions::default()
            };
            let (m, report) = experiment::cmd_reproduce_paper(&out, &opts)?;
            for r in m.failed_runs() {
                eprintln!("seed {} failed: {}", r.seed, r.error.as_deref().unwrap_or(""));
            }
            print!("{}", experiment::render_report(&report));
            println!("\nwrote {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
