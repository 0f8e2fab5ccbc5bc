//! Log-log slope fits of mean outcome against `N` with bootstrap intervals.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::harness::sweep::RunRecord;
use crate::rng::seeded;
use crate::stats::ols;

pub const MIN_SIZES: usize = 3;
pub const MIN_REPLICAS: usize = 30;
/// A size with a larger truncated share is flagged unreliable.
pub const MAX_TRUNCATED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub n: usize,
    pub mean: f64,
    /// Replicas entering the mean.
    pub used: usize,
    pub truncated: usize,
    /// Failed or non-finite outcomes.
    pub dropped: usize,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% percentile bootstrap interval.
    pub ci: (f64, f64),
    pub sizes: Vec<SizeSummary>,
}

impl SlopeFit {
    pub fn unreliable(&self) -> bool {
        self.sizes.iter().any(|s| s.unreliable)
    }
}

/// Fits `log mean(outcome)` against `log N`.
///
/// Truncated and non-finite outcomes are excluded. The interval resamples
/// replicas within each `N`.
pub fn fit_slope(records: &[RunRecord], resamples: usize, seed: u64) -> Result<SlopeFit> {
    let mut by_n: BTreeMap<usize, (Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in records {
        let e = by_n.entry(r.n).or_default();
        if r.truncated {
            e.1 += 1;
        } else if r.outcome.is_finite() {
            e.0.push(r.outcome);
        } else {
            e.2 += 1;
        }
    }
    if by_n.len() < MIN_SIZES {
        return Err(Error::Estimation(format!(
            "{} distinct N, need {MIN_SIZES}",
            by_n.len()
        )));
    }
    let mut sizes = Vec::new();
    for (&n, (xs, truncated, dropped)) in &by_n {
        if xs.len() < MIN_REPLICAS {
            return Err(Error::Estimation(format!(
                "N = {n}: {} usable replicas, need {MIN_REPLICAS}",
                xs.len()
            )));
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::Estimation(format!(
                "N = {n}: mean {mean} not positive"
            )));
        }
        let total = xs.len() + truncated + dropped;
        sizes.push(SizeSummary {
            n,
            mean,
            used: xs.len(),
            truncated: *truncated,
            dropped: *dropped,
            unreliable: *truncated as f64 > MAX_TRUNCATED_SHARE * total as f64,
        });
    }
    let x: Vec<f64> = sizes.iter().map(|s| (s.n as f64).ln()).collect();
    let y: Vec<f64> = sizes.iter().map(|s| s.mean.ln()).collect();
    let (slope, intercept) = ols(&x, &y);

    let mut rng = seeded(seed);
    let samples: Vec<&Vec<f64>> = by_n.values().map(|v| &v.0).collect();
    let mut slopes: Vec<f64> = (0..resamples)
        .map(|_| {
            let y: Vec<f64> = samples
                .iter()
                .map(|xs| {
                    let m = xs.len();
                    let s: f64 = (0..m).map(|_| xs[rng.random_range(0..m)]).sum();
                    (s / m as f64).ln()
                })
                .collect();
            ols(&x, &y).0
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let ci = if slopes.is_empty() {
        (slope, slope)
    } else {
        let at = |q: f64| slopes[((q * slopes.len() as f64) as usize).min(slopes.len() - 1)];
        (at(0.025), at(0.975))
    };
    Ok(SlopeFit {
        slope,
        intercept,
        ci,
        sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Experiment;

    fn rows(f: impl Fn(f64) -> f64, ns: &[usize], reps: u32) -> Vec<RunRecord> {
        let mut out = Vec::new();
        for &n in ns {
            for replica in 0..reps {
                out.push(RunRecord {
                    experiment: Experiment::Consensus,
                    n,
                    beta: 0.3,
                    gamma: 0.2,
                    kappa: 1.0,
                    alpha: None,
                    u: 0.5,
                    replica,
                    seed: replica as u64,
                    outcome: f(n as f64),
                    truncated: false,
                    events: 0,
                    wall_ms: 0.0,
                });
            }
        }
        out
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_slope(&rows(|n| n * n, &[16, 32, 64, 128], 30), 100, 1).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-9);
        assert!((fit.ci.0 - 2.0).abs() < 1e-9 && (fit.ci.1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_gives_zero() {
        let fit = fit_slope(&rows(|_| 5.0, &[10, 20, 40], 30), 10, 1).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn n_log_n() {
        let fit = fit_slope(&rows(|n| n * n.ln(), &[128, 256, 512, 1024], 30), 10, 1).unwrap();
        assert!(fit.slope > 1.0 && fit.slope < 1.35, "{}", fit.slope);
    }

    #[test]
    fn insufficient_data() {
        assert!(fit_slope(&rows(|n| n, &[10, 20], 30), 10, 1).is_err());
        assert!(fit_slope(&rows(|n| n, &[10, 20, 40], 29), 10, 1).is_err());
    }

    #[test]
    fn truncation_excluded_and_flagged() {
        let mut r = rows(|n| n, &[10, 20, 40], 40);
        for row in r.iter_mut().take(3) {
            row.truncated = true;
            row.outcome = 1e9;
        }
        let fit = fit_slope(&r, 10, 1).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.sizes[0].unreliable && !fit.sizes[1].unreliable);
        assert_eq!((fit.sizes[0].used, fit.sizes[0].truncated), (37, 3));
        assert!(fit.unreliable());
    }

    #[test]
    fn bootstrap_interval_covers_noisy_slope() {
        let mut r = rows(|n| n, &[50, 100, 200, 400], 200);
        for (k, row) in r.iter_mut().enumerate() {
            row.outcome *= 0.5 + (k % 7) as f64 / 6.0;
        }
        let fit = fit_slope(&r, 1000, 3).unwrap();
        assert!(fit.ci.0 <= fit.slope && fit.slope <= fit.ci.1);
    }
}
