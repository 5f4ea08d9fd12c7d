//! Empirical-distribution helpers used by the equality-in-law checks.

use serde::{Deserialize, Serialize};

/// DKW radius: with probability at least `1 - alpha` the empirical CDF of `n`
/// samples stays within this sup distance of the true CDF.
pub fn dkw_bound(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Standard error of a frequency estimate with success probability `p`.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Sup distance between the empirical CDF of `sample` and `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Sup distance between the empirical CDFs of two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Location and spread of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Summary {
    /// Summarizes `values` in their given order. `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: n,
            mean,
            sd,
            min: sorted[0],
            max: sorted[n - 1],
            q05: quantile_sorted(&sorted, 0.05),
            q50: quantile_sorted(&sorted, 0.50),
            q95: quantile_sorted(&sorted, 0.95),
        })
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dkw_reference() {
        assert!((dkw_bound(100_000, 0.01) - 0.005_146_7).abs() < 1e-6);
        assert!((2.0 * dkw_bound(10_000, 0.01) - 0.032_55).abs() < 1e-4);
    }

    #[test]
    fn ks_uniform_grid() {
        // Midpoints of n cells: distance exactly 1/(2n).
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_one_sample(&xs, |x| x) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_cases() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn summary_single_value() {
        let s = Summary::of(&[2.5]).unwrap();
        assert_eq!((s.q05, s.q50, s.q95, s.min, s.max), (2.5, 2.5, 2.5, 2.5, 2.5));
        assert_eq!(s.sd, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn summary_quantiles() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        let s = Summary::of(&v).unwrap();
        assert_eq!((s.q05, s.q50, s.q95), (5.0, 50.0, 95.0));
        assert_eq!(s.mean, 50.0);
    }
}
