//! Small statistics helpers shared by the checks and the harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                var: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { n, mean, var }
    }

    pub fn se(&self) -> f64 {
        (self.var / self.n as f64).sqrt()
    }

    /// Normal-approximation 95% interval for the mean.
    pub fn ci95(&self) -> (f64, f64) {
        let h = 1.96 * self.se();
        (self.mean - h, self.mean + h)
    }
}

fn chi_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let d = ChiSquared::new(dof as f64).expect("positive dof");
    1.0 - d.cdf(stat)
}

/// Pearson goodness-of-fit p-value of `counts` against probabilities `probs`.
///
/// Cells with zero expected mass must have zero count (else p = 0) and do not
/// contribute degrees of freedom.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total as f64;
        if e <= 0.0 {
            if c > 0 {
                return 0.0;
            }
            continue;
        }
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    chi_sf(stat, cells.saturating_sub(1))
}

/// Two-sample chi-square homogeneity p-value over shared bins.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        let ea = col * na as f64 / n;
        let eb = col * nb as f64 / n;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
        cells += 1;
    }
    chi_sf(stat, cells.saturating_sub(1))
}

/// Ordinary least squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
