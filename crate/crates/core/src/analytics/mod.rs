//! Statistics of simulated markets.
//!
//! [`analyze`] runs the whole pipeline over an ensemble of runs and
//! produces an [`AnalysisReport`]: Hurst exponents, tail fits, regime bins,
//! normalized sigma curves and kurtosis by return horizon.
//!
//! Hurst exponents, tail fits and kurtosis use one sample per trading
//! period (the period's closing state). Each run's period series is
//! derived separately and the runs are concatenated in the order given,
//! so no return spans two runs; for DFA each run's segment is demeaned
//! first. Regime bins use every step.

pub mod dfa;
pub mod gaussianity;
pub mod regimes;
pub mod series;
pub mod tails;

use serde::Serialize;

use crate::engine::StepRecord;
use crate::error::Result;

pub use dfa::{dfa, dfa_pooled, DfaFit};
pub use gaussianity::{aggregational_gaussianity, LagKurtosis};
pub use regimes::{bin_by_pc, classify_regimes, sigma_vs_pc, Regime, RegimeBin, RegimeRule, SigmaCurve};
pub use series::{PeriodSample, SeriesKind};
pub use tails::{ccdf, extreme_event_rate, fit_power_law, TailFit};

use regimes::{regime_onset, spearman, step_observations, GlobalMoments, PcBinner, BIN_QUANTITIES};
use series::{extract, period_samples};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisOptions {
    pub bin_width: f64,
    pub xmin_quantile: f64,
    pub steps_per_period: u64,
    /// Return horizons, in periods, for the kurtosis table.
    pub lags: Vec<usize>,
    /// Bins with fewer observations are flagged low-confidence.
    pub min_bin_count: u64,
    pub rule: RegimeRule,
    pub dfa_min_box: usize,
    pub dfa_box_count: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            bin_width: 0.01,
            xmin_quantile: 0.95,
            steps_per_period: 100,
            lags: vec![1, 4, 16, 64],
            min_bin_count: 1000,
            rule: RegimeRule::default(),
            dfa_min_box: 10,
            dfa_box_count: 20,
        }
    }
}

/// A set of runs that can be visited more than once.
pub trait RunSource {
    fn for_each_run(&self, f: &mut dyn FnMut(&[StepRecord]) -> Result<()>) -> Result<()>;
}

impl RunSource for [&[StepRecord]] {
    fn for_each_run(&self, f: &mut dyn FnMut(&[StepRecord]) -> Result<()>) -> Result<()> {
        self.iter().try_for_each(|r| f(r))
    }
}

impl RunSource for [Vec<StepRecord>] {
    fn for_each_run(&self, f: &mut dyn FnMut(&[StepRecord]) -> Result<()>) -> Result<()> {
        self.iter().try_for_each(|r| f(r))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HurstRow {
    pub kind: SeriesKind,
    pub samples: usize,
    pub fit: Option<DfaFit>,
    pub error: Option<String>,
}

/// Tails tabulated in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Spread,
    FirstGap,
    PositiveReturn,
    NegativeReturn,
    AbsReturn,
}

impl TailKind {
    pub const ALL: [TailKind; 5] = [
        TailKind::Spread,
        TailKind::FirstGap,
        TailKind::PositiveReturn,
        TailKind::NegativeReturn,
        TailKind::AbsReturn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TailKind::Spread => "spread",
            TailKind::FirstGap => "first_gap",
            TailKind::PositiveReturn => "positive_return",
            TailKind::NegativeReturn => "negative_return",
            TailKind::AbsReturn => "abs_return",
        }
    }

    fn samples(self, periods: &PeriodSeries) -> Vec<f64> {
        match self {
            TailKind::Spread => periods.get(SeriesKind::Spread).to_vec(),
            TailKind::FirstGap => periods.get(SeriesKind::FirstGap).to_vec(),
            TailKind::PositiveReturn => periods.get(SeriesKind::Return).iter().copied().filter(|r| *r > 0.0).collect(),
            TailKind::NegativeReturn => periods
                .get(SeriesKind::Return)
                .iter()
                .filter(|r| **r < 0.0)
                .map(|r| -r)
                .collect(),
            TailKind::AbsReturn => periods.get(SeriesKind::Volatility).to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub kind: TailKind,
    pub samples: usize,
    pub fit: Option<TailFit>,
    /// Vuong statistic of power law against exponential; positive favours the power law.
    pub power_law_vs_exponential: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub ccdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremeRow {
    pub kind: SeriesKind,
    pub two_sided: bool,
    pub n_e: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeBoundary {
    pub kind: SeriesKind,
    pub mrfm_onset: Option<f64>,
    pub mmc_onset: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub options: AnalysisOptions,
    pub runs: usize,
    pub steps: u64,
    pub periods: usize,
    pub hurst: Vec<HurstRow>,
    pub tails: Vec<TailRow>,
    pub extreme_rates: Vec<ExtremeRow>,
    pub regime_bins: Vec<RegimeBin>,
    pub regime_boundaries: Vec<RegimeBoundary>,
    /// Spearman correlation of mean depth with `P_c` over confident MEMH and MRFM bins.
    pub depth_spearman: Option<f64>,
    pub sigma_curves: Vec<SigmaCurve>,
    pub sigma_error: Option<String>,
    pub kurtosis: Vec<LagKurtosis>,
    pub fundamental_kurtosis: Vec<LagKurtosis>,
    pub kurtosis_error: Option<String>,
}

impl AnalysisReport {
    pub fn hurst_of(&self, kind: SeriesKind) -> Option<&DfaFit> {
        self.hurst.iter().find(|h| h.kind == kind).and_then(|h| h.fit.as_ref())
    }

    pub fn tail_of(&self, kind: TailKind) -> Option<&TailRow> {
        self.tails.iter().find(|t| t.kind == kind)
    }

    pub fn boundary_of(&self, kind: SeriesKind) -> Option<&RegimeBoundary> {
        self.regime_boundaries.iter().find(|b| b.kind == kind)
    }

    pub fn sigma_curve_of(&self, kind: SeriesKind) -> Option<&SigmaCurve> {
        self.sigma_curves.iter().find(|c| c.kind == kind)
    }
}

/// Concatenated per-period series of every run. `centered` holds the same
/// data with each run's segment demeaned, so differences in level between
/// independent runs do not register as memory.
#[derive(Debug, Clone, Default)]
struct PeriodSeries {
    series: Vec<(SeriesKind, Vec<f64>)>,
    centered: Vec<(SeriesKind, Vec<f64>)>,
    prices: Vec<Vec<f64>>,
    fundamentals: Vec<Vec<f64>>,
}

impl PeriodSeries {
    fn push(&mut self, samples: &[PeriodSample]) {
        if self.series.is_empty() {
            self.series = SeriesKind::ALL.iter().map(|k| (*k, Vec::new())).collect();
            self.centered = self.series.clone();
        }
        for ((kind, xs), (_, cs)) in self.series.iter_mut().zip(&mut self.centered) {
            let seg = extract(samples, *kind);
            let mean = seg.iter().sum::<f64>() / seg.len().max(1) as f64;
            cs.extend(seg.iter().map(|x| x - mean));
            xs.extend(seg);
        }
        self.prices.push(samples.iter().map(|s| s.price).collect());
        self.fundamentals.push(samples.iter().map(|s| s.fundamental).collect());
    }

    fn get(&self, kind: SeriesKind) -> &[f64] {
        Self::find(&self.series, kind)
    }

    fn centered(&self, kind: SeriesKind) -> &[f64] {
        Self::find(&self.centered, kind)
    }

    fn find(series: &[(SeriesKind, Vec<f64>)], kind: SeriesKind) -> &[f64] {
        series
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }
}

fn hurst_row(kind: SeriesKind, xs: &[f64], opts: &AnalysisOptions) -> HurstRow {
    let sizes = dfa::log_box_sizes(opts.dfa_min_box, xs.len() / 4, opts.dfa_box_count);
    let (fit, error) = match dfa(xs, &sizes) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    HurstRow {
        kind,
        samples: xs.len(),
        fit,
        error,
    }
}

fn tail_row(kind: TailKind, xs: &[f64], quantile: f64) -> TailRow {
    let fitted = tails::tail_above_quantile(xs, quantile)
        .and_then(|(x_min, tail)| fit_power_law(&tail, x_min).map(|fit| (fit, tail)));
    let (fit, lr, error) = match fitted {
        Ok((fit, tail)) => (Some(fit), Some(tails::power_law_vs_exponential(&tail, &fit)), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    TailRow {
        kind,
        samples: xs.len(),
        fit,
        power_law_vs_exponential: lr,
        error,
        ccdf: ccdf(&xs.iter().copied().filter(|x| *x > 0.0).collect::<Vec<_>>()),
    }
}

/// Runs the full pipeline. The source is visited twice: once for period
/// series and global moments, once for the regime bins.
pub fn analyze<S: RunSource + ?Sized>(source: &S, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let spp = opts.steps_per_period;
    let mut periods = PeriodSeries::default();
    let mut global = GlobalMoments::default();
    let mut runs = 0;
    let mut steps = 0u64;
    source.for_each_run(&mut |records| {
        runs += 1;
        steps += records.len() as u64;
        periods.push(&period_samples(records, spp));
        global.observe(step_observations(records, spp));
        Ok(())
    })?;

    let mut binner = PcBinner::new(opts.bin_width, global.thresholds())?;
    source.for_each_run(&mut |records| {
        binner.observe(step_observations(records, spp));
        Ok(())
    })?;
    let bins = classify_regimes(binner.finish(opts.min_bin_count), &opts.rule);

    let hurst = [
        SeriesKind::Return,
        SeriesKind::Volatility,
        SeriesKind::Spread,
        SeriesKind::FirstGap,
        SeriesKind::Volume,
        SeriesKind::FvReturn,
    ]
    .iter()
    .map(|&k| hurst_row(k, periods.centered(k), opts))
    .collect();

    let tails = TailKind::ALL
        .iter()
        .map(|&k| tail_row(k, &k.samples(&periods), opts.xmin_quantile))
        .collect();

    let extreme_rates = [
        (SeriesKind::Return, true),
        (SeriesKind::Volatility, false),
        (SeriesKind::Spread, false),
        (SeriesKind::FirstGap, false),
        (SeriesKind::Volume, false),
    ]
    .iter()
    .map(|&(kind, two_sided)| {
        let xs = periods.get(kind);
        let n_e = if two_sided {
            tails::extreme_event_rate_two_sided(xs)
        } else {
            extreme_event_rate(xs)
        };
        ExtremeRow {
            kind,
            two_sided,
            n_e: n_e.ok(),
        }
    })
    .collect();

    let regime_boundaries = BIN_QUANTITIES
        .iter()
        .map(|&kind| RegimeBoundary {
            kind,
            mrfm_onset: regime_onset(&bins, kind, Regime::Mrfm),
            mmc_onset: regime_onset(&bins, kind, Regime::Mmc),
        })
        .collect();

    let (pcs, depths): (Vec<f64>, Vec<f64>) = bins
        .iter()
        .filter(|b| !b.low_confidence && matches!(b.label, Some(Regime::Memh | Regime::Mrfm)))
        .map(|b| (b.mid(), b.mean_depth))
        .unzip();
    let depth_spearman = spearman(&pcs, &depths);

    let (sigma_curves, sigma_error) = match sigma_vs_pc(&bins) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };

    let price_paths: Vec<&[f64]> = periods.prices.iter().map(Vec::as_slice).collect();
    let fv_paths: Vec<&[f64]> = periods.fundamentals.iter().map(Vec::as_slice).collect();
    let kurt = gaussianity::aggregational_gaussianity_pooled(&price_paths, &opts.lags)
        .and_then(|k| Ok((k, gaussianity::aggregational_gaussianity_pooled(&fv_paths, &opts.lags)?)));
    let (kurtosis, fundamental_kurtosis, kurtosis_error) = match kurt {
        Ok((a, b)) => (a, b, None),
        Err(e) => (Vec::new(), Vec::new(), Some(e.to_string())),
    };

    Ok(AnalysisReport {
        options: opts.clone(),
        runs,
        steps,
        periods: periods.prices.iter().map(Vec::len).sum(),
        hurst,
        tails,
        extreme_rates,
        regime_bins: bins,
        regime_boundaries,
        depth_spearman,
        sigma_curves,
        sigma_error,
        kurtosis,
        fundamental_kurtosis,
        kurtosis_error,
    })
}
