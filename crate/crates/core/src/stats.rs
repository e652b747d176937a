//! Goodness-of-fit helpers for trajectory and sampling statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of `observed` counts against bin probabilities `expected`.
///
/// Adjacent bins are pooled left to right until each pooled bin expects at
/// least `min_expected` counts; a short remainder joins the last pooled bin.
pub fn chi_square(observed: &[u64], expected: &[f64], min_expected: f64) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(invalid("observed and expected bins differ in length"));
    }
    let total: u64 = observed.iter().sum();
    let psum: f64 = expected.iter().sum();
    if total == 0 || psum <= 0.0 {
        return Err(invalid("chi-square needs counts and a positive expectation"));
    }
    let n = total as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(expected) {
        o += ob as f64;
        e += n * p / psum;
        if e >= min_expected {
            pooled.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pooled.push((o, e)),
        }
    }
    if pooled.len() < 2 {
        return Err(invalid("too few populated bins for a chi-square test"));
    }
    let statistic = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Counts of `samples` in `bins` equal bins over `[lo, hi)`; out-of-range samples are dropped.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut out = vec![0u64; bins];
    let w = (hi - lo) / bins as f64;
    for &x in samples {
        if x >= lo && x < hi {
            let b = (((x - lo) / w) as usize).min(bins - 1);
            out[b] += 1;
        }
    }
    out
}

/// Standard error of a frequency estimate of probability `p` from `n` draws.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
