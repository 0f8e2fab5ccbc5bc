//! Standalone checks: birthday-problem occupancy and Poisson/exponential
//! stochastic dominance.

use rand::Rng;
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::error::{Error, Result};

fn check_occupancy(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// `P(X = 0) = prod_{i=1}^{k-1} (1 - i/N)` for `k` uniform labels in `[N]`.
pub fn birthday_exact(k: usize, n: usize) -> Result<f64> {
    check_occupancy(k, n)?;
    let n = n as f64;
    Ok((1..k).map(|i| (-(i as f64) / n).ln_1p()).sum::<f64>().exp())
}

/// `exp(-k^2 / 2N)`.
pub fn birthday_asymptotic(k: usize, n: usize) -> Result<f64> {
    check_occupancy(k, n)?;
    let k = k as f64;
    Ok((-k * k / (2.0 * n as f64)).exp())
}

/// Number of sites holding two or more of `k` uniform labels.
pub fn multiply_occupied<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> usize {
    let mut counts = vec![0u32; n];
    multiply_occupied_in(&mut counts, k, rng)
}

fn multiply_occupied_in<R: Rng + ?Sized>(counts: &mut [u32], k: usize, rng: &mut R) -> usize {
    let n = counts.len();
    let mut touched = Vec::with_capacity(k);
    let mut multi = 0;
    for _ in 0..k {
        let s = rng.random_range(0..n);
        counts[s] += 1;
        match counts[s] {
            1 => touched.push(s),
            2 => multi += 1,
            _ => {}
        }
    }
    for s in touched {
        counts[s] = 0;
    }
    multi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthdayMc {
    pub trials: u64,
    /// Estimate of `P(X = 0)`.
    pub p_none: f64,
    /// Threshold `k^2 / 6N`.
    pub threshold: f64,
    /// Estimate of `P(X >= k^2 / 6N)`.
    pub p_many: f64,
    pub mean: f64,
}

pub fn birthday_mc<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    trials: u64,
    rng: &mut R,
) -> Result<BirthdayMc> {
    check_occupancy(k, n)?;
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    let threshold = (k * k) as f64 / (6.0 * n as f64);
    let mut counts = vec![0u32; n];
    let (mut none, mut many, mut total) = (0u64, 0u64, 0u64);
    for _ in 0..trials {
        let x = multiply_occupied_in(&mut counts, k, rng);
        none += (x == 0) as u64;
        many += (x as f64 >= threshold) as u64;
        total += x as u64;
    }
    let t = trials as f64;
    Ok(BirthdayMc {
        trials,
        p_none: none as f64 / t,
        threshold,
        p_many: many as f64 / t,
        mean: total as f64 / t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthdayMode {
    Exact,
    Asymptotic,
    MonteCarlo { trials: u64 },
}

/// `P(X = 0)` by the chosen method.
pub fn birthday_prob<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    mode: BirthdayMode,
    rng: &mut R,
) -> Result<f64> {
    match mode {
        BirthdayMode::Exact => birthday_exact(k, n),
        BirthdayMode::Asymptotic => birthday_asymptotic(k, n),
        BirthdayMode::MonteCarlo { trials } => Ok(birthday_mc(k, n, trials, rng)?.p_none),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub x: u64,
    /// `P(Pois(mu) > x)`.
    pub poisson_tail: f64,
    /// `P(ceil(mu e^lambda) + Exp(lambda) > x)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub shift: u64,
    pub rows: Vec<DominanceRow>,
    /// Smallest `bound - poisson_tail` over the grid.
    pub worst_margin: f64,
    pub worst_at: Option<u64>,
}

impl DominanceReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= 0.0
    }
}

/// Compares `P(Pois(mu) > x)` with `P(ceil(mu e^lambda) + Exp(lambda) > x)`
/// at each grid point.
pub fn check_pois_exp_dominance(
    mu: f64,
    lambda: f64,
    grid: impl IntoIterator<Item = u64>,
) -> Result<DominanceReport> {
    if !(mu > 0.0 && mu.is_finite() && lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("mu = {mu}, lambda = {lambda}")));
    }
    let pois = Poisson::new(mu).map_err(|e| Error::Domain(e.to_string()))?;
    let shift = (mu * lambda.exp()).ceil() as u64;
    let mut report = DominanceReport {
        shift,
        rows: Vec::new(),
        worst_margin: f64::INFINITY,
        worst_at: None,
    };
    for x in grid {
        let poisson_tail = pois.sf(x);
        let bound = if x < shift {
            1.0
        } else {
            (-lambda * (x - shift) as f64).exp()
        };
        let margin = bound - poisson_tail;
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_at = Some(x);
        }
        report.rows.push(DominanceRow {
            x,
            poisson_tail,
            bound,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn exact_examples() {
        assert_eq!(birthday_exact(1, 10).unwrap(), 1.0);
        assert!((birthday_exact(23, 365).unwrap() - 0.49270).abs() < 1e-5);
        assert!((birthday_exact(2, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(birthday_exact(0, 5).is_err());
        assert!(birthday_exact(6, 5).is_err());
    }

    #[test]
    fn asymptotic_close_for_small_k() {
        let (k, n) = (10, 10_000);
        let e = birthday_exact(k, n).unwrap();
        let a = birthday_asymptotic(k, n).unwrap();
        // The correction is O(k/N) in the exponent.
        assert!((e.ln() - a.ln()).abs() < 2.0 * k as f64 / n as f64);
    }

    #[test]
    fn occupancy_counts() {
        let mut rng = seeded(1);
        assert_eq!(multiply_occupied(1, 5, &mut rng), 0);
        // Three labels on two sites: exactly one site is shared.
        for _ in 0..100 {
            assert_eq!(multiply_occupied(3, 2, &mut rng), 1);
        }
    }

    #[test]
    fn mc_matches_exact() {
        let mut rng = seeded(2);
        let mc = birthday_mc(23, 365, 100_000, &mut rng).unwrap();
        let p = birthday_exact(23, 365).unwrap();
        let se = (p * (1.0 - p) / 1e5).sqrt();
        assert!((mc.p_none - p).abs() < 4.0 * se);
        let via_mode =
            birthday_prob(23, 365, BirthdayMode::MonteCarlo { trials: 10 }, &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&via_mode));
    }

    #[test]
    fn mc_second_moment_bound() {
        let mut rng = seeded(3);
        let mc = birthday_mc(20, 100, 100_000, &mut rng).unwrap();
        assert!((mc.threshold - 2.0 / 3.0).abs() < 1e-12);
        assert!(mc.p_many >= 1.0 / 73.0);
    }

    fn tail_by_sum(mu: f64, x: u64) -> f64 {
        // P(Pois(mu) > x) = 1 - sum_{j <= x} pmf(j), summed with care for
        // the far tail by going upward from x + 1 instead.
        let mut term = (-mu).exp();
        for j in 1..=x + 1 {
            term *= mu / j as f64;
        }
        let mut total = 0.0;
        let mut j = x + 1;
        while term > 1e-300 && (total == 0.0 || term > total * 1e-18) {
            total += term;
            j += 1;
            term *= mu / j as f64;
        }
        total
    }

    #[test]
    fn dominance_examples() {
        let r = check_pois_exp_dominance(1.0, 1.0, 0..=30).unwrap();
        assert_eq!(r.shift, 3);
        assert!(r.rows[..3].iter().all(|x| x.bound == 1.0));
        assert!(r.holds(), "{r:?}");
        for row in &r.rows {
            let t = tail_by_sum(1.0, row.x);
            assert!((row.poisson_tail - t).abs() <= 1e-9 * t.max(1e-300) + 1e-15);
        }

        let r = check_pois_exp_dominance(5.0, 0.5, 9..=60).unwrap();
        assert_eq!(r.shift, 9);
        assert!(r.holds());

        assert!(check_pois_exp_dominance(0.0, 1.0, 0..3).is_err());
    }
}
