//! Goodness-of-fit tools for comparing simulations with exact laws.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

pub fn binomial_stderr(p_hat: f64, samples: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / samples as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic critical value
/// `sqrt(−ln(α/2)/2)·sqrt((n+m)/(nm))`. Ties are handled by advancing both
/// samples past equal values before comparing the empirical cdfs.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS test needs two nonempty samples"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("significance must lie in (0, 1)"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let critical = (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt();
    Ok(KsResult {
        statistic: d,
        critical,
        alpha,
        reject: d > critical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson chi-square of observed counts against expected probabilities.
/// Cells with expected count below 5 are pooled into one cell.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(invalid("observed and expected must be nonempty and aligned"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(invalid("no observations"));
    }
    let t = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        if p * t < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += p * t;
        } else {
            cells.push((o as f64, p * t));
        }
    }
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        cells.push(pooled);
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| invalid(e.to_string()))?
            .sf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value,
        bins: cells.len(),
    })
}

/// Total-variation distance between empirical frequencies and a pmf given
/// on the same cells, plus mass the sample put outside them.
pub fn empirical_tv(observed: &[u64], expected: &[f64], outside: u64) -> f64 {
    let total = (observed.iter().sum::<u64>() + outside) as f64;
    let inside: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| (o as f64 / total - p).abs())
        .sum();
    0.5 * (inside + outside as f64 / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        let b: Vec<f64> = a.iter().map(|x| x + 300.0).collect();
        assert!(ks_two_sample(&a, &b, 1e-6).unwrap().reject);
    }

    #[test]
    fn ks_ties_do_not_inflate_statistic() {
        let a = vec![1.0; 500];
        let b = vec![1.0; 700];
        assert_eq!(ks_two_sample(&a, &b, 0.05).unwrap().statistic, 0.0);
    }

    #[test]
    fn chi_square_accepts_true_law() {
        let mut g = rng::stream(1, 0);
        let mut counts = [0u64; 4];
        for _ in 0..40_000 {
            counts[g.random_range(0..4)] += 1;
        }
        let r = chi_square_gof(&counts, &[0.25; 4]).unwrap();
        assert_eq!(r.dof, 3);
        assert!(r.p_value > 1e-6);
        let bad = chi_square_gof(&counts, &[0.4, 0.2, 0.2, 0.2]).unwrap();
        assert!(bad.p_value < 1e-6);
    }

    #[test]
    fn tv_and_stderr() {
        assert_eq!(empirical_tv(&[5, 5], &[0.5, 0.5], 0), 0.0);
        assert!((empirical_tv(&[5, 3], &[0.5, 0.5], 2) - 0.2).abs() < 1e-15);
        assert_eq!(binomial_stderr(0.5, 100), 0.05);
    }
}
