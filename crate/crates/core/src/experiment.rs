//! Experiment recipes behind the command-line tool.
//!
//! Every command writes under one output root and records an
//! [`ExperimentManifest`] there (`experiment.json`).
//!
//! ```text
//! <out>/
//!   experiment.json
//!   config.txt            # reproduce-paper only
//!   run-<seed>/           # one per seed, see crate::io
//!   analysis/             # analyze and reproduce-paper
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{analyze, AnalysisOptions, AnalysisReport};
use crate::config::SimConfig;
use crate::engine::run_simulation;
use crate::error::{Error, Result};
use crate::io::{self, CsvRuns, RunFiles};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CDA_MARKET_WORKERS";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed: u64,
    pub dir: PathBuf,
    pub files: Option<RunFiles>,
    pub wall_clock_secs: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool_version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// SHA-256 of the config file bytes, hex encoded.
    pub config_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunEntry>,
    pub analysis_files: Vec<PathBuf>,
    pub wall_clock_secs: f64,
}

impl ExperimentManifest {
    fn new(command: &str) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config_path: None,
            config_sha256: None,
            seeds: Vec::new(),
            runs: Vec::new(),
            analysis_files: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn failed_runs(&self) -> impl Iterator<Item = &RunEntry> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    pub fn completed_step_files(&self) -> Vec<PathBuf> {
        self.runs
            .iter()
            .filter_map(|r| r.files.as_ref().map(|f| f.steps.clone()))
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads and parses a config file, returning it with the hash of its bytes.
pub fn load_config(path: &Path) -> Result<(SimConfig, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
    let cfg = SimConfig::parse(&text).map_err(|e| match e {
        Error::UnknownKey { key, line } => Error::Config(format!("{}: unknown config key `{key}` (line {line})", path.display())),
        Error::BadValue { key, reason } => Error::Config(format!("{}: bad value for config key `{key}`: {reason}", path.display())),
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok((cfg, sha256_hex(&bytes)))
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Runs `f` on a pool of `workers` threads, or of the env-configured size, or on
/// rayon's global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers.or_else(workers_from_env) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("run-{seed}"))
}

fn run_one(config: &SimConfig, seed: u64, dir: PathBuf) -> RunEntry {
    let start = Instant::now();
    let cfg = SimConfig { seed, ..config.clone() };
    let result = run_simulation(&cfg).and_then(|out| io::write_run(&dir, &out));
    let wall_clock_secs = start.elapsed().as_secs_f64();
    match result {
        Ok(files) => RunEntry {
            seed,
            dir,
            files: Some(files),
            wall_clock_secs,
            error: None,
        },
        Err(e) => RunEntry {
            seed,
            dir,
            files: None,
            wall_clock_secs,
            error: Some(e.to_string()),
        },
    }
}

/// Runs one seed; its artifacts go directly into `out`.
pub fn cmd_run(config_path: &Path, seed: u64, out: &Path) -> Result<ExperimentManifest> {
    let start = Instant::now();
    let (config, hash) = load_config(config_path)?;
    let output = run_simulation(&SimConfig { seed, ..config })?;
    let files = io::write_run(out, &output)?;
    let mut m = ExperimentManifest::new("run");
    m.config_path = Some(config_path.to_path_buf());
    m.config_sha256 = Some(hash);
    m.seeds = vec![seed];
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    m.runs.push(RunEntry {
        seed,
        dir: out.to_path_buf(),
        files: Some(files),
        wall_clock_secs: m.wall_clock_secs,
        error: None,
    });
    io::write_json(&out.join("experiment.json"), &m)?;
    Ok(m)
}

fn ensemble_into(
    command: &str,
    config: &SimConfig,
    config_path: Option<&Path>,
    hash: Option<String>,
    seeds: &[u64],
    out: &Path,
    workers: Option<usize>,
) -> Result<ExperimentManifest> {
    let start = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let runs = with_workers(workers, || {
        seeds
            .par_iter()
            .map(|&seed| run_one(config, seed, run_dir(out, seed)))
            .collect::<Vec<_>>()
    })?;
    let mut m = ExperimentManifest::new(command);
    m.config_path = config_path.map(Path::to_path_buf);
    m.config_sha256 = hash;
    m.seeds = seeds.to_vec();
    m.runs = runs;
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    io::write_json(&out.join("experiment.json"), &m)?;
    Ok(m)
}

/// Seeds used for an ensemble of `n` runs.
pub fn ensemble_seeds(n: u64) -> Vec<u64> {
    (1..=n).collect()
}

/// Runs seeds `1..=n` in parallel, one directory per seed. Failed seeds are
/// recorded in the manifest and do not stop the others.
pub fn cmd_ensemble(config_path: &Path, n_seeds: u64, out: &Path, workers: Option<usize>) -> Result<ExperimentManifest> {
    let (config, hash) = load_config(config_path)?;
    ensemble_into(
        "ensemble",
        &config,
        Some(config_path),
        Some(hash),
        &ensemble_seeds(n_seeds),
        out,
        workers,
    )
}

/// Analyzes every `steps.csv` found under `inputs`.
pub fn cmd_analyze(inputs: &[PathBuf], out: &Path, options: &AnalysisOptions) -> Result<(AnalysisReport, Vec<PathBuf>)> {
    let paths = io::find_step_files(inputs)?;
    let report = analyze(&CsvRuns { paths }, options)?;
    let files = io::write_analysis(out, &report)?;
    std::fs::write(out.join("report.txt"), render_report(&report)).map_err(|e| Error::io(out, e))?;
    Ok((report, files))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOptions {
    /// 1.0 is 100 seeds of 10^6 steps; 0.1 is 10 seeds of 10^5.
    pub scale: f64,
    pub homogeneous: bool,
    pub workers: Option<usize>,
    pub analysis: AnalysisOptions,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            scale: 0.1,
            homogeneous: false,
            workers: None,
            analysis: AnalysisOptions::default(),
        }
    }
}

/// `(seeds, steps)` for a scale factor.
pub fn scaled_size(scale: f64) -> Result<(u64, u64)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("scale must be positive, got {scale}")));
    }
    let seeds = (100.0 * scale).round().max(1.0) as u64;
    let steps = (1_000_000.0 * scale).round().max(100.0) as u64;
    Ok((seeds, steps))
}

/// Runs the ensemble at the requested scale and analyzes the completed runs.
pub fn cmd_reproduce_paper(out: &Path, opts: &ReproduceOptions) -> Result<(ExperimentManifest, AnalysisReport)> {
    let start = Instant::now();
    let (n_seeds, steps) = scaled_size(opts.scale)?;
    let base = if opts.homogeneous {
        SimConfig::homogeneous()
    } else {
        SimConfig::default()
    };
    let config = SimConfig { steps, ..base };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let config_path = out.join("config.txt");
    let text = config.to_text();
    io::write_text(&config_path, &text)?;
    let hash = sha256_hex(text.as_bytes());
    let mut m = ensemble_into(
        "reproduce-paper",
        &config,
        Some(&config_path),
        Some(hash),
        &ensemble_seeds(n_seeds),
        out,
        opts.workers,
    )?;
    let completed = m.completed_step_files();
    if completed.is_empty() {
        return Err(Error::Analysis("every run failed; nothing to analyze".into()));
    }
    let analysis_dir = out.join("analysis");
    let report = analyze(&CsvRuns { paths: completed }, &opts.analysis)?;
    m.analysis_files = io::write_analysis(&analysis_dir, &report)?;
    let report_txt = analysis_dir.join("report.txt");
    io::write_text(&report_txt, &render_report(&report))?;
    m.analysis_files.push(report_txt);
    m.wall_clock_secs = start.elapsed().as_secs_f64();
    io::write_json(&out.join("experiment.json"), &m)?;
    Ok((m, report))
}

/// Plain-text tables of a report.
pub fn render_report(r: &AnalysisReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "runs {}  steps {}  periods {}\n", r.runs, r.steps, r.periods);
    let _ = writeln!(s, "Hurst exponents (DFA-1)");
    for h in &r.hurst {
        match &h.fit {
            Some(f) => {
                let _ = writeln!(s, "  {:<12} {:.3} +/- {:.3}  (n = {})", h.kind.name(), f.hurst, f.stderr, h.samples);
            }
            None => {
                let _ = writeln!(s, "  {:<12} undefined: {}", h.kind.name(), h.error.as_deref().unwrap_or(""));
            }
        }
    }
    let _ = writeln!(s, "\nTail exponents (power-law MLE above the {} quantile)", r.options.xmin_quantile);
    for t in &r.tails {
        match &t.fit {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "  {:<16} alpha {:.3} +/- {:.3}  x_min {:.6}  n_tail {}  LR z {:+.2}",
                    t.kind.name(),
                    f.alpha,
                    f.stderr,
                    f.x_min,
                    f.n_tail,
                    t.power_law_vs_exponential.unwrap_or(f64::NAN)
                );
            }
            None => {
                let _ = writeln!(s, "  {:<16} no fit: {}", t.kind.name(), t.error.as_deref().unwrap_or(""));
            }
        }
    }
    let _ = writeln!(s, "\nRegime boundaries");
    for b in &r.regime_boundaries {
        let _ = writeln!(
            s,
            "  {:<12} MRFM from {}  MMC from {}",
            b.kind.name(),
            b.mrfm_onset.map_or("-".to_string(), |x| format!("{x:.2}")),
            b.mmc_onset.map_or("-".to_string(), |x| format!("{x:.2}"))
        );
    }
    if let Some(rho) = r.depth_spearman {
        let _ = writeln!(s, "  depth vs P_c Spearman {rho:.3}");
    }
    let _ = writeln!(s, "\nSigma curves");
    for c in &r.sigma_curves {
        let _ = writeln!(
            s,
            "  {:<12} peak at P_c {:.3}  drop above peak {}",
            c.kind.name(),
            c.argmax_pc,
            c.drop_above_peak.map_or("-".to_string(), |d| format!("{:.0}%", d * 100.0))
        );
    }
    if let Some(e) = &r.sigma_error {
        let _ = writeln!(s, "  unavailable: {e}");
    }
    let _ = writeln!(s, "\nExcess kurtosis of returns by lag (periods)");
    for (k, f) in r.kurtosis.iter().zip(&r.fundamental_kurtosis) {
        let _ = writeln!(s, "  {:>4}  {:8.3}  fundamental {:8.3}", k.lag, k.excess_kurtosis, f.excess_kurtosis);
    }
    s
}
