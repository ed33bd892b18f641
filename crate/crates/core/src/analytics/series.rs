//! Derived series sampled once per trading period.

use serde::{Deserialize, Serialize};

use crate::engine::StepRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Return,
    Volatility,
    Spread,
    FirstGap,
    Volume,
    FvReturn,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 6] = [
        SeriesKind::Return,
        SeriesKind::Volatility,
        SeriesKind::Spread,
        SeriesKind::FirstGap,
        SeriesKind::Volume,
        SeriesKind::FvReturn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Return => "return",
            SeriesKind::Volatility => "volatility",
            SeriesKind::Spread => "spread",
            SeriesKind::FirstGap => "first_gap",
            SeriesKind::Volume => "volume",
            SeriesKind::FvReturn => "fv_return",
        }
    }
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// State of the market at the close of one trading period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodSample {
    pub step: u64,
    pub price: f64,
    pub fundamental: f64,
    pub spread: Option<f64>,
    pub first_gap: Option<f64>,
    /// Trades during the period.
    pub volume: u64,
    pub chartist_fraction: f64,
    pub depth: usize,
}

/// One sample per complete period of `steps_per_period` records.
pub fn period_samples(records: &[StepRecord], steps_per_period: u64) -> Vec<PeriodSample> {
    let spp = steps_per_period.max(1) as usize;
    records
        .chunks_exact(spp)
        .map(|chunk| {
            let close = chunk.last().expect("non-empty chunk");
            PeriodSample {
                step: close.step,
                price: close.price,
                fundamental: close.fundamental,
                spread: close.spread,
                first_gap: close.first_gap(),
                volume: chunk.iter().filter(|r| r.traded).count() as u64,
                chartist_fraction: close.chartist_fraction(),
                depth: close.depth,
            }
        })
        .collect()
}

/// Log returns `ln x(t) - ln x(t - lag)` for every `t >= lag`.
pub fn log_returns(values: &[f64], lag: usize) -> Result<Vec<f64>> {
    if lag == 0 || lag >= values.len() {
        return Err(Error::TooShort {
            needed: lag + 1,
            have: values.len(),
        });
    }
    Ok(values.windows(lag + 1).map(|w| w[lag].ln() - w[0].ln()).collect())
}

/// The series of `kind` over period samples. Returns use a lag of one
/// period; spread and gap skip periods where the quantity is undefined.
pub fn extract(samples: &[PeriodSample], kind: SeriesKind) -> Vec<f64> {
    let prices = || samples.iter().map(|s| s.price).collect::<Vec<_>>();
    match kind {
        SeriesKind::Return => log_returns(&prices(), 1).unwrap_or_default(),
        SeriesKind::Volatility => log_returns(&prices(), 1)
            .unwrap_or_default()
            .into_iter()
            .map(f64::abs)
            .collect(),
        SeriesKind::FvReturn => {
            let f: Vec<f64> = samples.iter().map(|s| s.fundamental).collect();
            log_returns(&f, 1).unwrap_or_default()
        }
        SeriesKind::Spread => samples.iter().filter_map(|s| s.spread).collect(),
        SeriesKind::FirstGap => samples.iter().filter_map(|s| s.first_gap).collect(),
        SeriesKind::Volume => samples.iter().map(|s| s.volume as f64).collect(),
    }
}
