//! Model parameters and the closed-form quantities of the rank-one graph.
//!
//! Vertex *labels* run over `1..=N` as in the mathematical model; internally
//! the graph code uses 0-based indices with `label = index + 1`. The public
//! label-based functions here check their range, the `*_at` variants taking
//! indices do not.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the per-vertex update rate was specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UpdateRate {
    /// `kappa` given directly.
    Fixed(f64),
    /// `kappa = c * N^(-alpha)`, i.e. mean update time `N^alpha / c`.
    Scaled { c: f64, alpha: f64 },
}

impl UpdateRate {
    pub fn kappa(&self, n: usize) -> f64 {
        match *self {
            UpdateRate::Fixed(k) => k,
            UpdateRate::Scaled { c, alpha } => c * (n as f64).powf(-alpha),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            UpdateRate::Fixed(_) => None,
            UpdateRate::Scaled { alpha, .. } => Some(alpha),
        }
    }
}

/// All scalars of one model instance plus precomputed normalizers.
///
/// Immutable after construction and cheap to share between replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    n: usize,
    beta: f64,
    gamma: f64,
    rate: UpdateRate,
    kappa: f64,
    u: f64,
    power_sum: f64,
    /// `beta * N^(2 gamma - 1)`, the common factor of every edge intensity.
    scale: f64,
}

/// `sum_{i=1}^n i^(-gamma)` by direct summation, smallest terms first.
pub fn power_sum(n: usize, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma = {gamma} not in [0, 1)")));
    }
    if n == 0 {
        return Err(Error::Domain("power sum needs N >= 1".into()));
    }
    Ok((1..=n).rev().map(|i| (i as f64).powf(-gamma)).sum())
}

impl ModelParams {
    pub fn new(n: usize, beta: f64, gamma: f64, rate: UpdateRate, u: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("N = {n} < 2")));
        }
        if n > u32::MAX as usize {
            return Err(Error::Domain(format!("N = {n} too large")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "beta = {beta} must be finite and >= 0"
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain(format!("gamma = {gamma} not in [0, 1)")));
        }
        let kappa = rate.kappa(n);
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa = {kappa} must be finite and >= 0"
            )));
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("u = {u} not in (0, 1)")));
        }
        let power_sum = power_sum(n, gamma)?;
        let scale = beta * (n as f64).powf(2.0 * gamma - 1.0);
        Ok(Self {
            n,
            beta,
            gamma,
            rate,
            kappa,
            u,
            power_sum,
            scale,
        })
    }

    /// Shorthand for the common case of a fixed `kappa` and `u = 1/2`.
    pub fn with_kappa(n: usize, beta: f64, gamma: f64, kappa: f64) -> Result<Self> {
        Self::new(n, beta, gamma, UpdateRate::Fixed(kappa), 0.5)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn rate(&self) -> UpdateRate {
        self.rate
    }
    pub fn alpha(&self) -> Option<f64> {
        self.rate.alpha()
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn power_sum(&self) -> f64 {
        self.power_sum
    }

    pub fn with_u(mut self, u: f64) -> Result<Self> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("u = {u} not in (0, 1)")));
        }
        self.u = u;
        Ok(self)
    }

    fn check(&self, label: usize) -> Result<()> {
        if label == 0 || label > self.n {
            Err(Error::Index { label, n: self.n })
        } else {
            Ok(())
        }
    }

    /// `w(i)`: mean multigraph degree of the vertex labelled `i`.
    pub fn weight(&self, label: usize) -> Result<f64> {
        self.check(label)?;
        Ok(self.weight_at(label - 1))
    }

    /// `lambda_ij = beta N^(2 gamma - 1) i^(-gamma) j^(-gamma)`; `i = j` allowed.
    pub fn edge_intensity(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.intensity_at(i - 1, j - 1))
    }

    /// Presence probability `1 - exp(-lambda_ij)` of the simple edge `{i, j}`.
    pub fn edge_prob(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(Error::Domain(format!("no self-edge at {i}")));
        }
        Ok(self.prob_at(i - 1, j - 1))
    }

    #[inline]
    pub fn weight_at(&self, v: usize) -> f64 {
        self.scale * ((v + 1) as f64).powf(-self.gamma) * self.power_sum
    }

    #[inline]
    pub fn intensity_at(&self, a: usize, b: usize) -> f64 {
        // (ab)^(-gamma) in one powf keeps the result exactly symmetric.
        let prod = ((a + 1) as f64) * ((b + 1) as f64);
        self.scale * prod.powf(-self.gamma)
    }

    #[inline]
    pub fn prob_at(&self, a: usize, b: usize) -> f64 {
        -(-self.intensity_at(a, b)).exp_m1()
    }

    /// `E d(i)` in the simple graph, `sum_{j != i} p_ij`.
    pub fn expected_degree_at(&self, v: usize) -> f64 {
        (0..self.n)
            .filter(|&j| j != v)
            .map(|j| self.prob_at(v, j))
            .sum()
    }
}

/// Draws vertex labels with probability proportional to `j^(-gamma)`.
#[derive(Debug, Clone)]
pub struct EndpointSampler {
    n: usize,
    gamma: f64,
    masses: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl EndpointSampler {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        let total = power_sum(n, gamma)?;
        let masses: Vec<f64> = (1..=n).map(|j| (j as f64).powf(-gamma) / total).collect();
        let alias = WeightedAliasIndex::new(masses.clone())
            .map_err(|e| Error::Domain(format!("endpoint table: {e}")))?;
        Ok(Self {
            n,
            gamma,
            masses,
            alias,
        })
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.n(), params.gamma()).expect("params already validated")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Probability of drawing `label`.
    pub fn mass(&self, label: usize) -> f64 {
        self.masses[label - 1]
    }

    /// A label in `1..=N`.
    pub fn sample_endpoint<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sample_index(rng) + 1
    }

    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }
}
