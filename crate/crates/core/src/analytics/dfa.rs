//! Detrended fluctuation analysis (order 1).

use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum ratio between the largest and smallest box size (1.5 decades).
pub const MIN_SPAN: f64 = 31.622_776_601_683_793;

#[derive(Debug, Clone, Serialize)]
pub struct DfaFit {
    pub hurst: f64,
    pub intercept: f64,
    /// Standard error of the log-log slope.
    pub stderr: f64,
    /// `(box size, F(n))` pairs.
    pub points: Vec<(usize, f64)>,
}

/// Up to `count` distinct integer box sizes spaced logarithmically in `[min, max]`.
pub fn log_box_sizes(min: usize, max: usize, count: usize) -> Vec<usize> {
    if count == 0 || max < min || min == 0 {
        return Vec::new();
    }
    if count == 1 || max == min {
        return vec![min];
    }
    let (lmin, lmax) = ((min as f64).ln(), (max as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (lmin + (lmax - lmin) * i as f64 / (count - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Default grid: 10 to `len / 4`, 20 sizes.
pub fn default_box_sizes(len: usize) -> Vec<usize> {
    log_box_sizes(10, len / 4, 20)
}

/// Cumulative sum of the demeaned series.
pub fn profile(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let mut acc = 0.0;
    series
        .iter()
        .map(|x| {
            acc += x - mean;
            acc
        })
        .collect()
}

/// Residual sum of squares of a least-squares line through `ys` against `0..n`.
fn linear_rss(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut syy) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        let dy = y - ybar;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let sxx = n * (n * n - 1.0) / 12.0;
    (syy - sxy * sxy / sxx).max(0.0)
}

/// Mean squared residual over non-overlapping boxes of size `n`, taken from
/// both ends of the profile so no data is dropped.
pub fn mean_square_fluctuation(profile: &[f64], n: usize) -> f64 {
    let boxes = profile.len() / n;
    let mut total = 0.0;
    for b in 0..boxes {
        total += linear_rss(&profile[b * n..(b + 1) * n]);
    }
    let tail = profile.len() - boxes * n;
    if tail > 0 {
        for b in 0..boxes {
            let start = tail + b * n;
            total += linear_rss(&profile[start..start + n]);
        }
        total / (2 * boxes * n) as f64
    } else {
        total / (boxes * n) as f64
    }
}

fn check_grid(len: usize, sizes: &[usize]) -> Result<()> {
    let (Some(&min), Some(&max)) = (sizes.iter().min(), sizes.iter().max()) else {
        return Err(Error::Analysis("empty box-size grid".into()));
    };
    if min < 3 {
        return Err(Error::Analysis(format!("box size {min} too small for a linear fit")));
    }
    if len < 4 * max {
        return Err(Error::TooShort { needed: 4 * max, have: len });
    }
    if (max as f64) / (min as f64) < MIN_SPAN * (1.0 - 1e-12) {
        return Err(Error::Analysis(format!(
            "box sizes {min}..{max} span less than 1.5 decades"
        )));
    }
    Ok(())
}

fn is_constant(series: &[f64]) -> bool {
    series.iter().all(|x| *x == series[0])
}

/// Ordinary least squares of `ys` on `xs`; returns (slope, intercept, slope stderr).
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let stderr = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

fn fit(points: Vec<(usize, f64)>) -> DfaFit {
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, f)| f.ln()).collect();
    let (hurst, intercept, stderr) = ols(&xs, &ys);
    DfaFit {
        hurst,
        intercept,
        stderr,
        points,
    }
}

pub fn dfa(series: &[f64], sizes: &[usize]) -> Result<DfaFit> {
    check_grid(series.len(), sizes)?;
    if is_constant(series) {
        return Err(Error::ConstantSeries);
    }
    let prof = profile(series);
    let points: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| (n, mean_square_fluctuation(&prof, n).sqrt()))
        .collect();
    if points.iter().any(|(_, f)| *f <= 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok(fit(points))
}

/// DFA over several independent segments: `F(n)^2` is averaged across
/// segments (weighted by length) so no box straddles two segments.
pub fn dfa_pooled(segments: &[&[f64]], sizes: &[usize]) -> Result<DfaFit> {
    let shortest = segments.iter().map(|s| s.len()).min().unwrap_or(0);
    check_grid(shortest, sizes)?;
    if segments.iter().all(|s| is_constant(s)) {
        return Err(Error::ConstantSeries);
    }
    let profiles: Vec<Vec<f64>> = segments.iter().map(|s| profile(s)).collect();
    let total: usize = segments.iter().map(|s| s.len()).sum();
    let points: Vec<(usize, f64)> = sizes
        .iter()
        .map(|&n| {
            let f2: f64 = profiles
                .iter()
                .map(|p| mean_square_fluctuation(p, n) * p.len() as f64)
                .sum::<f64>()
                / total as f64;
            (n, f2.sqrt())
        })
        .collect();
    if points.iter().any(|(_, f)| *f <= 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok(fit(points))
}
