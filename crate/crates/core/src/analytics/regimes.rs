//! Market regimes as a function of the chartist fraction `P_c`.
//!
//! Every step contributes one observation to the bin containing its `P_c`.
//! Extreme events are counted against one threshold per quantity
//! (`mean + 4 sd` of the pooled ensemble), so a bin's `N_e` is the share of
//! its observations that are extreme relative to the market as a whole.

use serde::Serialize;

use crate::analytics::series::SeriesKind;
use crate::engine::StepRecord;
use crate::error::{Error, Result};

/// The quantities tracked per bin.
pub const BIN_QUANTITIES: [SeriesKind; 3] = [SeriesKind::Volatility, SeriesKind::Spread, SeriesKind::FirstGap];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "MEMH")]
    Memh,
    #[serde(rename = "MRFM")]
    Mrfm,
    #[serde(rename = "MMC")]
    Mmc,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Memh => "MEMH",
            Regime::Mrfm => "MRFM",
            Regime::Mmc => "MMC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepObservation {
    pub pc: f64,
    /// Absolute log return over the trailing period.
    pub volatility: Option<f64>,
    pub spread: Option<f64>,
    pub first_gap: Option<f64>,
    pub depth: f64,
}

impl StepObservation {
    pub fn get(&self, kind: SeriesKind) -> Option<f64> {
        match kind {
            SeriesKind::Volatility => self.volatility,
            SeriesKind::Spread => self.spread,
            SeriesKind::FirstGap => self.first_gap,
            _ => None,
        }
    }
}

/// Per-step observations of one run. Volatility is undefined for the first period.
pub fn step_observations(records: &[StepRecord], steps_per_period: u64) -> impl Iterator<Item = StepObservation> + '_ {
    let lag = steps_per_period as usize;
    records.iter().enumerate().map(move |(i, r)| StepObservation {
        pc: r.chartist_fraction(),
        volatility: (i >= lag).then(|| (r.price.ln() - records[i - lag].price.ln()).abs()),
        spread: r.spread,
        first_gap: r.first_gap(),
        depth: r.depth as f64,
    })
}

/// Streaming mean and variance, mergeable across runs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Population standard deviation.
    pub fn sd(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0).sqrt()
        }
    }
}

/// Pooled moments of each binned quantity, the first of the two passes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GlobalMoments {
    pub quantities: [Moments; 3],
}

impl GlobalMoments {
    pub fn observe(&mut self, obs: impl IntoIterator<Item = StepObservation>) {
        for o in obs {
            for (m, kind) in self.quantities.iter_mut().zip(BIN_QUANTITIES) {
                if let Some(x) = o.get(kind) {
                    m.push(x);
                }
            }
        }
    }

    pub fn merge(&mut self, other: &GlobalMoments) {
        for (a, b) in self.quantities.iter_mut().zip(&other.quantities) {
            a.merge(b);
        }
    }

    /// `mean + 4 sd` per quantity. A zero-variance quantity gets an infinite
    /// threshold so it never produces extreme events.
    pub fn thresholds(&self) -> [f64; 3] {
        self.quantities.map(|m| {
            if m.sd() > 0.0 {
                m.mean + 4.0 * m.sd()
            } else {
                f64::INFINITY
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct QuantityAcc {
    moments: Moments,
    extreme: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct BinAcc {
    count: u64,
    depth_sum: f64,
    quantities: [QuantityAcc; 3],
}

/// Accumulates observations into `P_c` bins, the second pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PcBinner {
    width: f64,
    thresholds: [f64; 3],
    bins: Vec<BinAcc>,
}

/// Index of the bin holding `pc`: edges at `k * width`, right-exclusive,
/// with `pc = 1` folded into the last bin.
pub fn bin_index(pc: f64, width: f64) -> usize {
    let n = bin_count(width);
    (((pc / width) + 1e-9).floor().max(0.0) as usize).min(n - 1)
}

pub fn bin_count(width: f64) -> usize {
    ((1.0 / width) - 1e-9).ceil().max(1.0) as usize
}

impl PcBinner {
    pub fn new(width: f64, thresholds: [f64; 3]) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::Analysis(format!("bin width must lie in (0, 1], got {width}")));
        }
        Ok(Self {
            width,
            thresholds,
            bins: vec![BinAcc::default(); bin_count(width)],
        })
    }

    pub fn observe(&mut self, obs: impl IntoIterator<Item = StepObservation>) {
        for o in obs {
            let bin = &mut self.bins[bin_index(o.pc, self.width)];
            bin.count += 1;
            bin.depth_sum += o.depth;
            for ((q, kind), cut) in bin.quantities.iter_mut().zip(BIN_QUANTITIES).zip(self.thresholds) {
                if let Some(x) = o.get(kind) {
                    q.moments.push(x);
                    if x > cut {
                        q.extreme += 1;
                    }
                }
            }
        }
    }

    pub fn merge(&mut self, other: &PcBinner) {
        assert_eq!(self.bins.len(), other.bins.len(), "bin grids differ");
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            a.count += b.count;
            a.depth_sum += b.depth_sum;
            for (qa, qb) in a.quantities.iter_mut().zip(&b.quantities) {
                qa.moments.merge(&qb.moments);
                qa.extreme += qb.extreme;
            }
        }
    }

    /// Unlabelled bins; those with fewer than `min_count` observations are flagged.
    pub fn finish(&self, min_count: u64) -> Vec<RegimeBin> {
        let n = self.bins.len();
        self.bins
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let quantity = |j: usize| {
                    let q = &b.quantities[j];
                    QuantityStats {
                        kind: BIN_QUANTITIES[j],
                        count: q.moments.count,
                        mean: q.moments.mean,
                        sd: q.moments.sd(),
                        n_e: if q.moments.count == 0 {
                            0.0
                        } else {
                            q.extreme as f64 / q.moments.count as f64
                        },
                        label: None,
                    }
                };
                RegimeBin {
                    lo: i as f64 * self.width,
                    hi: if i + 1 == n { 1.0 } else { (i + 1) as f64 * self.width },
                    count: b.count,
                    low_confidence: b.count < min_count,
                    mean_depth: if b.count == 0 { 0.0 } else { b.depth_sum / b.count as f64 },
                    quantities: [quantity(0), quantity(1), quantity(2)],
                    label: None,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantityStats {
    pub kind: SeriesKind,
    pub count: u64,
    pub mean: f64,
    pub sd: f64,
    pub n_e: f64,
    pub label: Option<Regime>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub low_confidence: bool,
    pub mean_depth: f64,
    pub quantities: [QuantityStats; 3],
    /// Label from the volatility extreme-event rate.
    pub label: Option<Regime>,
}

impl RegimeBin {
    pub fn mid(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }

    pub fn quantity(&self, kind: SeriesKind) -> Option<&QuantityStats> {
        self.quantities.iter().find(|q| q.kind == kind)
    }
}

/// Two-pass binning of in-memory runs.
pub fn bin_by_pc(runs: &[&[StepRecord]], steps_per_period: u64, width: f64, min_count: u64) -> Result<Vec<RegimeBin>> {
    let mut global = GlobalMoments::default();
    for r in runs {
        global.observe(step_observations(r, steps_per_period));
    }
    let mut binner = PcBinner::new(width, global.thresholds())?;
    for r in runs {
        binner.observe(step_observations(r, steps_per_period));
    }
    Ok(binner.finish(min_count))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeRule {
    /// Mean book depth below which a bin is a collapse.
    pub depth_floor: f64,
    /// Extreme-event rate above which a bin is real-market-like.
    pub ne_threshold: f64,
}

impl Default for RegimeRule {
    fn default() -> Self {
        Self {
            depth_floor: 2.0,
            ne_threshold: 0.005,
        }
    }
}

impl RegimeRule {
    pub fn classify(&self, n_e: f64, mean_depth: f64) -> Regime {
        if mean_depth < self.depth_floor {
            Regime::Mmc
        } else if n_e > self.ne_threshold {
            Regime::Mrfm
        } else {
            Regime::Memh
        }
    }
}

/// Labels every populated bin, per quantity and overall. Empty bins stay unlabelled.
pub fn classify_regimes(mut bins: Vec<RegimeBin>, rule: &RegimeRule) -> Vec<RegimeBin> {
    for b in &mut bins {
        if b.count == 0 {
            continue;
        }
        for q in &mut b.quantities {
            q.label = Some(rule.classify(q.n_e, b.mean_depth));
        }
        b.label = b.quantity(SeriesKind::Volatility).and_then(|q| q.label);
    }
    bins
}

/// Lower edge of the first confident bin with the given label for `kind`.
pub fn regime_onset(bins: &[RegimeBin], kind: SeriesKind, regime: Regime) -> Option<f64> {
    bins.iter()
        .filter(|b| !b.low_confidence)
        .find(|b| b.quantity(kind).and_then(|q| q.label) == Some(regime))
        .map(|b| b.lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCurve {
    pub kind: SeriesKind,
    /// `(bin mid-point, sd, sd / max sd)`.
    pub points: Vec<(f64, f64, f64)>,
    pub argmax_pc: f64,
    /// Largest fall below the peak among bins above it, as a fraction of the peak.
    pub drop_above_peak: Option<f64>,
}

/// Normalized per-bin standard deviation of each binned quantity, over
/// confident bins with at least two values.
pub fn sigma_vs_pc(bins: &[RegimeBin]) -> Result<Vec<SigmaCurve>> {
    BIN_QUANTITIES
        .iter()
        .map(|&kind| {
            let raw: Vec<(f64, f64)> = bins
                .iter()
                .filter(|b| !b.low_confidence)
                .filter_map(|b| b.quantity(kind).filter(|q| q.count >= 2).map(|q| (b.mid(), q.sd)))
                .collect();
            if raw.len() < 10 {
                return Err(Error::TooShort { needed: 10, have: raw.len() });
            }
            let (peak_idx, &(argmax_pc, peak)) = raw
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .expect("non-empty");
            let points: Vec<(f64, f64, f64)> = raw
                .iter()
                .map(|&(pc, sd)| (pc, sd, if peak > 0.0 { sd / peak } else { 1.0 }))
                .collect();
            let drop_above_peak = raw[peak_idx + 1..]
                .iter()
                .map(|&(_, sd)| sd)
                .min_by(f64::total_cmp)
                .filter(|_| peak > 0.0)
                .map(|low| 1.0 - low / peak);
            Ok(SigmaCurve {
                kind,
                points,
                argmax_pc,
                drop_above_peak,
            })
        })
        .collect()
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
