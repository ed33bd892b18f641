//! Reading and writing run artifacts.
//!
//! | file | columns |
//! |------|---------|
//! | `steps.csv` | the [`StepRecord`] fields in declared order; undefined quotes are empty |
//! | `trades.csv` | `step,price,price_ticks,buyer,seller,aggressor` |
//! | `lob_<step>.csv` | `price,volume`, asks negative |
//! | `fundamental.csv` | `step,value` |
//! | `manifest.json` | [`RunManifest`] |
//! | `config.txt` | the effective config, seed included |

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{AnalysisReport, RunSource};
use crate::config::SimConfig;
use crate::engine::{RunCounters, RunOutput, StepRecord, Totals};
use crate::error::{Error, Result};
use crate::expectations::TickGrid;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Csv {
            path: path.to_path_buf(),
            line,
            reason: format!("{other:?}"),
        },
    }
}

pub fn write_steps(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    if records.is_empty() {
        w.write_record(STEP_COLUMNS).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Column names of `steps.csv`.
pub const STEP_COLUMNS: [&str; 14] = [
    "step",
    "price",
    "fundamental",
    "best_bid",
    "best_ask",
    "spread",
    "bid_gap",
    "ask_gap",
    "depth",
    "n_f",
    "n_plus",
    "n_minus",
    "traded",
    "trade_price",
];

pub fn read_steps(path: &Path) -> Result<Vec<StepRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let header = r.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(STEP_COLUMNS) {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

#[derive(Debug, Serialize)]
struct TradeRow {
    step: u64,
    price: f64,
    price_ticks: i64,
    buyer: usize,
    seller: usize,
    aggressor: &'static str,
}

pub fn write_trades(path: &Path, out: &RunOutput) -> Result<()> {
    let grid = out.config.grid();
    let mut w = csv::Writer::from_writer(create(path)?);
    if out.trades.is_empty() {
        w.write_record(["step", "price", "price_ticks", "buyer", "seller", "aggressor"])
            .map_err(|e| csv_error(path, e))?;
    }
    for t in &out.trades {
        w.serialize(TradeRow {
            step: t.step,
            price: grid.price(t.price),
            price_ticks: t.price,
            buyer: t.buyer,
            seller: t.seller,
            aggressor: if t.aggressor_buy { "buy" } else { "sell" },
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `(price ticks, signed volume)` levels as `price,volume`.
pub fn write_snapshot(path: &Path, levels: &[(i64, i64)], grid: &TickGrid) -> Result<()> {
    let mut w = create(path)?;
    let mut body = String::from("price,volume\n");
    for (p, v) in levels {
        body.push_str(&format!("{},{}\n", grid.price(*p), v));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_fundamental(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = String::from("step,value\n");
    for r in records {
        body.push_str(&format!("{},{}\n", r.step, r.fundamental));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFiles {
    pub steps: PathBuf,
    pub trades: PathBuf,
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub fundamental: Option<PathBuf>,
}

impl RunFiles {
    pub fn all(&self) -> impl Iterator<Item = &PathBuf> {
        [&self.steps, &self.trades, &self.config, &self.manifest]
            .into_iter()
            .chain(&self.snapshots)
            .chain(&self.fundamental)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: SimConfig,
    pub steps: usize,
    pub initial_totals: Totals,
    pub final_totals: Totals,
    pub counters: RunCounters,
    /// File names relative to the run directory.
    pub files: Vec<String>,
}

/// Writes every artifact of `out` into `dir` (created if needed).
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<RunFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let grid = out.config.grid();
    let files = RunFiles {
        steps: dir.join("steps.csv"),
        trades: dir.join("trades.csv"),
        config: dir.join("config.txt"),
        manifest: dir.join("manifest.json"),
        snapshots: out
            .snapshots
            .iter()
            .map(|(step, _)| dir.join(format!("lob_{step}.csv")))
            .collect(),
        fundamental: out.config.trace_fundamental.then(|| dir.join("fundamental.csv")),
    };
    write_steps(&files.steps, &out.records)?;
    write_trades(&files.trades, out)?;
    write_text(&files.config, &out.config.to_text())?;
    for ((_, levels), path) in out.snapshots.iter().zip(&files.snapshots) {
        write_snapshot(path, levels, &grid)?;
    }
    if let Some(path) = &files.fundamental {
        write_fundamental(path, &out.records)?;
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: out.seed,
        config: out.config.clone(),
        steps: out.records.len(),
        initial_totals: out.initial_totals,
        final_totals: out.final_totals(),
        counters: out.counters,
        files: files
            .all()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    write_json(&files.manifest, &manifest)?;
    Ok(files)
}

/// `steps.csv` files under the given paths. A path may be a `steps.csv`
/// file, a run directory, or a directory of run directories.
pub fn find_step_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for p in paths {
        if p.is_file() {
            found.push(p.clone());
            continue;
        }
        let direct = p.join("steps.csv");
        if direct.is_file() {
            found.push(direct);
            continue;
        }
        let entries = std::fs::read_dir(p).map_err(|e| Error::io(p, e))?;
        let mut nested: Vec<PathBuf> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path().join("steps.csv"))
            .filter(|f| f.is_file())
            .collect();
        nested.sort_by_key(|p| (p.as_os_str().len(), p.clone()));
        if nested.is_empty() {
            return Err(Error::Analysis(format!("no steps.csv found under {}", p.display())));
        }
        found.extend(nested);
    }
    Ok(found)
}

/// Runs stored as `steps.csv` files, read one at a time.
#[derive(Debug, Clone)]
pub struct CsvRuns {
    pub paths: Vec<PathBuf>,
}

impl RunSource for CsvRuns {
    fn for_each_run(&self, f: &mut dyn FnMut(&[StepRecord]) -> Result<()>) -> Result<()> {
        for p in &self.paths {
            f(&read_steps(p)?)?;
        }
        Ok(())
    }
}

/// Writes `analysis.json` and the plot-ready CSVs; returns every path written.
pub fn write_analysis(dir: &Path, report: &AnalysisReport) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let json = dir.join("analysis.json");
    write_json(&json, report)?;
    written.push(json);

    for row in &report.tails {
        let path = dir.join(format!("ccdf_{}.csv", row.kind.name()));
        let mut body = String::from("value,probability\n");
        for (x, p) in &row.ccdf {
            body.push_str(&format!("{x},{p}\n"));
        }
        write_text(&path, &body)?;
        written.push(path);
    }
    for row in &report.hurst {
        if let Some(fit) = &row.fit {
            let path = dir.join(format!("dfa_{}.csv", row.kind.name()));
            let mut body = String::from("n,fluctuation\n");
            for (n, f) in &fit.points {
                body.push_str(&format!("{n},{f}\n"));
            }
            write_text(&path, &body)?;
            written.push(path);
        }
    }
    let path = dir.join("sigma_vs_pc.csv");
    let mut body = String::from("quantity,pc,sd,normalized\n");
    for c in &report.sigma_curves {
        for (pc, sd, norm) in &c.points {
            body.push_str(&format!("{},{pc},{sd},{norm}\n", c.kind.name()));
        }
    }
    write_text(&path, &body)?;
    written.push(path);

    let path = dir.join("regime_bins.csv");
    let mut body = String::from(
        "lo,hi,count,low_confidence,mean_depth,label,\
         volatility_n_e,volatility_sd,volatility_label,\
         spread_n_e,spread_sd,spread_label,\
         first_gap_n_e,first_gap_sd,first_gap_label\n",
    );
    let label = |l: Option<crate::analytics::Regime>| l.map(|l| l.to_string()).unwrap_or_default();
    for b in &report.regime_bins {
        body.push_str(&format!(
            "{},{},{},{},{},{}",
            b.lo,
            b.hi,
            b.count,
            b.low_confidence,
            b.mean_depth,
            label(b.label)
        ));
        for q in &b.quantities {
            body.push_str(&format!(",{},{},{}", q.n_e, q.sd, label(q.label)));
        }
        body.push('\n');
    }
    write_text(&path, &body)?;
    written.push(path);

    let path = dir.join("kurtosis.csv");
    let mut body = String::from("lag,excess_kurtosis,fundamental_excess_kurtosis\n");
    for (k, f) in report.kurtosis.iter().zip(&report.fundamental_kurtosis) {
        body.push_str(&format!("{},{},{}\n", k.lag, k.excess_kurtosis, f.excess_kurtosis));
    }
    write_text(&path, &body)?;
    written.push(path);
    Ok(written)
}
