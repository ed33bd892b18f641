//! Tail statistics: empirical CCDF, continuous power-law MLE and extreme-event rates.

use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest tail sample for which a fit is reported.
pub const MIN_TAIL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub alpha: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub stderr: f64,
}

impl TailFit {
    /// Whether `alpha ± width * stderr` contains `value`.
    pub fn band_contains(&self, value: f64, width: f64) -> bool {
        (self.alpha - value).abs() <= width * self.stderr
    }
}

/// Continuous power-law maximum-likelihood fit over samples already at or above `x_min`.
pub fn fit_power_law(samples: &[f64], x_min: f64) -> Result<TailFit> {
    if !(x_min > 0.0 && x_min.is_finite()) {
        return Err(Error::Analysis(format!("x_min must be positive, got {x_min}")));
    }
    if samples.len() < MIN_TAIL {
        return Err(Error::TooShort { needed: MIN_TAIL, have: samples.len() });
    }
    if let Some(x) = samples.iter().find(|x| x.is_nan() || **x < x_min) {
        return Err(Error::Analysis(format!("sample {x} below x_min {x_min}")));
    }
    let log_sum: f64 = samples.iter().map(|x| (x / x_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::DivergentFit);
    }
    let n = samples.len() as f64;
    let alpha = 1.0 + n / log_sum;
    Ok(TailFit {
        alpha,
        x_min,
        n_tail: samples.len(),
        stderr: (alpha - 1.0) / n.sqrt(),
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted_positive(samples: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0 && x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Tail samples at or above the `quantile` of the positive samples, with that threshold.
pub fn tail_above_quantile(samples: &[f64], quantile_level: f64) -> Result<(f64, Vec<f64>)> {
    let xs = sorted_positive(samples);
    if xs.is_empty() {
        return Err(Error::TooShort { needed: MIN_TAIL, have: 0 });
    }
    let x_min = quantile(&xs, quantile_level);
    let start = xs.partition_point(|x| *x < x_min);
    Ok((x_min, xs[start..].to_vec()))
}

/// Fits the tail above the given quantile of the positive samples.
pub fn fit_tail(samples: &[f64], quantile_level: f64) -> Result<TailFit> {
    let (x_min, tail) = tail_above_quantile(samples, quantile_level)?;
    fit_power_law(&tail, x_min)
}

/// Distinct sample values ascending with `P(X >= x)`.
pub fn ccdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut out = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        out.push((xs[i], (xs.len() - i) as f64 / n));
        let v = xs[i];
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
    }
    out
}

/// Log-likelihood ratio of a power law against a shifted exponential on
/// the same tail, normalized to a Vuong z statistic. Positive values favour
/// the power law.
pub fn power_law_vs_exponential(tail: &[f64], fit: &TailFit) -> f64 {
    let n = tail.len() as f64;
    let excess_mean = tail.iter().map(|x| x - fit.x_min).sum::<f64>() / n;
    if excess_mean <= 0.0 {
        return 0.0;
    }
    let lambda = 1.0 / excess_mean;
    let ratios: Vec<f64> = tail
        .iter()
        .map(|x| {
            let lp = ((fit.alpha - 1.0) / fit.x_min).ln() - fit.alpha * (x / fit.x_min).ln();
            let le = lambda.ln() - lambda * (x - fit.x_min);
            lp - le
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return 0.0;
    }
    mean * n.sqrt() / var.sqrt()
}

fn moments(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fraction of observations above `mean + 4 sd`.
pub fn extreme_event_rate(series: &[f64]) -> Result<f64> {
    if series.len() < 100 {
        return Err(Error::TooShort { needed: 100, have: series.len() });
    }
    let (mean, sd) = moments(series);
    if sd == 0.0 {
        return Ok(0.0);
    }
    let cut = mean + 4.0 * sd;
    Ok(series.iter().filter(|x| **x > cut).count() as f64 / series.len() as f64)
}

/// Fraction of observations further than `4 sd` from the mean in either direction.
pub fn extreme_event_rate_two_sided(series: &[f64]) -> Result<f64> {
    if series.len() < 100 {
        return Err(Error::TooShort { needed: 100, have: series.len() });
    }
    let (mean, sd) = moments(series);
    if sd == 0.0 {
        return Ok(0.0);
    }
    Ok(series.iter().filter(|x| (**x - mean).abs() > 4.0 * sd).count() as f64 / series.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Exp, StandardNormal};

    fn pareto(n: usize, alpha: f64, x_min: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                x_min * (1.0 - u).powf(-1.0 / (alpha - 1.0))
            })
            .collect()
    }

    #[test]
    fn closed_form_case() {
        let x_min = 0.7;
        let xs = vec![x_min * std::f64::consts::E; 60];
        let fit = fit_power_law(&xs, x_min).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-12);
        assert!((fit.stderr - 1.0 / 60f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pareto_exponent_is_recovered() {
        let xs = pareto(100_000, 2.5, 1.0, 1);
        let fit = fit_power_law(&xs, 1.0).unwrap();
        assert!((fit.alpha - 2.5).abs() < 0.05, "{fit:?}");
        assert!((fit.stderr - 1.5 / 100_000f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn scale_invariance() {
        let xs = pareto(5_000, 3.0, 2.0, 2);
        let a = fit_power_law(&xs, 2.0).unwrap().alpha;
        let scaled: Vec<f64> = xs.iter().map(|x| x * 1e3).collect();
        let b = fit_power_law(&scaled, 2e3).unwrap().alpha;
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn degenerate_tail_diverges() {
        let xs = vec![1.5; 80];
        assert!(matches!(fit_power_law(&xs, 1.5), Err(Error::DivergentFit)));
        assert!(matches!(fit_power_law(&xs[..10], 1.5), Err(Error::TooShort { .. })));
        assert!(fit_power_law(&[1.0; 60], 2.0).is_err());
    }

    #[test]
    fn ccdf_counts() {
        let c = ccdf(&[3.0, 1.0, 2.0]);
        assert_eq!(c, vec![(1.0, 1.0), (2.0, 2.0 / 3.0), (3.0, 1.0 / 3.0)]);
        assert_eq!(ccdf(&[4.0]), vec![(4.0, 1.0)]);
        let c = ccdf(&[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(c, vec![(1.0, 1.0), (2.0, 0.5)]);
    }

    #[test]
    fn exponential_ccdf_is_linear_on_lin_log_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mean = 2.0;
        let exp = Exp::new(1.0 / mean).unwrap();
        let xs: Vec<f64> = (0..200_000).map(|_| rng.sample(exp)).collect();
        let pts: Vec<(f64, f64)> = ccdf(&xs).into_iter().filter(|(_, p)| *p > 1e-3).collect();
        let lx: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let (slope, _, _) = super::super::dfa::ols(&lx, &ly);
        assert!((slope * mean + 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn likelihood_ratio_separates_families() {
        let xs = pareto(20_000, 2.5, 1.0, 4);
        let (x_min, tail) = tail_above_quantile(&xs, 0.95).unwrap();
        let fit = fit_power_law(&tail, x_min).unwrap();
        let z = power_law_vs_exponential(&tail, &fit);
        assert!(z > 2.0, "{z} {fit:?}");

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let exp = Exp::new(1.0).unwrap();
        let ys: Vec<f64> = (0..20_000).map(|_| rng.sample(exp)).collect();
        let (x_min, tail) = tail_above_quantile(&ys, 0.95).unwrap();
        let fit = fit_power_law(&tail, x_min).unwrap();
        let z = power_law_vs_exponential(&tail, &fit);
        assert!(z < -2.0, "{z} {fit:?}");
    }

    #[test]
    fn extreme_rate_examples() {
        assert_eq!(extreme_event_rate(&[1.0; 500]).unwrap(), 0.0);
        assert!(extreme_event_rate(&[1.0; 50]).is_err());
        let mut xs = vec![0.0; 999];
        xs.push(1000.0);
        assert_eq!(extreme_event_rate(&xs).unwrap(), 0.001);
        assert_eq!(extreme_event_rate_two_sided(&xs).unwrap(), 0.001);
    }

    #[test]
    fn gaussian_extreme_rate_matches_normal_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..2_000_000).map(|_| rng.sample(StandardNormal)).collect();
        let r = extreme_event_rate(&xs).unwrap();
        // 1 - Phi(4) = 3.167e-5; binomial sd at 2e6 samples is 4e-6.
        assert!((r - 3.167e-5).abs() < 1.2e-5, "{r}");
        let r2 = extreme_event_rate_two_sided(&xs).unwrap();
        assert!((r2 - 6.334e-5).abs() < 1.8e-5, "{r2}");
    }
}
