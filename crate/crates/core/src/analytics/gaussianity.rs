//! Kurtosis of returns as the return horizon grows.

use serde::Serialize;

use crate::analytics::series::log_returns;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagKurtosis {
    pub lag: usize,
    pub excess_kurtosis: f64,
    pub samples: usize,
}

/// `m4 / m2^2 - 3` of `xs`.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64> {
    if xs.len() < 4 {
        return Err(Error::TooShort { needed: 4, have: xs.len() });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean).powi(2);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

pub fn aggregational_gaussianity(prices: &[f64], lags: &[usize]) -> Result<Vec<LagKurtosis>> {
    aggregational_gaussianity_pooled(&[prices], lags)
}

/// Returns at each lag are pooled across the given price paths before the
/// kurtosis is taken; no return spans two paths.
pub fn aggregational_gaussianity_pooled(paths: &[&[f64]], lags: &[usize]) -> Result<Vec<LagKurtosis>> {
    lags.iter()
        .map(|&lag| {
            let mut rs = Vec::new();
            for p in paths {
                rs.extend(log_returns(p, lag)?);
            }
            Ok(LagKurtosis {
                lag,
                excess_kurtosis: excess_kurtosis(&rs)?,
                samples: rs.len(),
            })
        })
        .collect()
}

/// Number of adjacent pairs where the value increases.
pub fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{StandardNormal, StudentT};

    #[test]
    fn known_kurtosis() {
        // Two-point symmetric distribution: m4/m2^2 = 1.
        let xs = [1.0, -1.0, 1.0, -1.0];
        assert!((excess_kurtosis(&xs).unwrap() + 2.0).abs() < 1e-12);
        assert!(matches!(excess_kurtosis(&[3.0; 10]), Err(Error::ConstantSeries)));
    }

    #[test]
    fn gaussian_walk_is_gaussian_at_every_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lp = 0.0f64;
        let prices: Vec<f64> = (0..1_000_000)
            .map(|_| {
                lp += 0.01 * rng.sample::<f64, _>(StandardNormal);
                lp.exp()
            })
            .collect();
        for k in aggregational_gaussianity(&prices, &[1, 4, 16, 64]).unwrap() {
            assert!(k.excess_kurtosis.abs() < 0.1, "{k:?}");
        }
    }

    #[test]
    fn fat_tailed_walk_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = StudentT::new(5.0).unwrap();
        let mut lp = 0.0f64;
        let prices: Vec<f64> = (0..400_000)
            .map(|_| {
                lp += 0.001 * rng.sample(t);
                lp.exp()
            })
            .collect();
        let ks: Vec<f64> = aggregational_gaussianity(&prices, &[1, 4, 16, 64])
            .unwrap()
            .iter()
            .map(|k| k.excess_kurtosis)
            .collect();
        assert!(ks[0] > 3.0, "{ks:?}");
        assert!(ks[3] < 0.5, "{ks:?}");
        assert!(inversions(&ks) <= 1);
    }

    #[test]
    fn lag_beyond_length_is_an_error() {
        assert!(aggregational_gaussianity(&[1.0, 2.0, 3.0], &[3]).is_err());
    }
}
