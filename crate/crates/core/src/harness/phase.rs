//! Predicted consensus-time orders across the phase diagram.

use std::fmt;

use crate::error::{Error, Result};

/// Width of the band around `beta + 2 gamma = 1` treated as critical.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Frozen graph, `kappa = 0`.
    Static,
    /// Mean update time of order `N^alpha`.
    Dynamic { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    None,
    /// Unspecified polylogarithmic factor.
    Polylog,
    /// An explicit `log N` factor.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    StaticSubcritical,
    StaticSupercritical,
    SubcriticalFast,
    SubcriticalSlow,
    SupercriticalFast,
    SupercriticalSlow,
}

impl Phase {
    pub fn label(&self) -> &'static str {
        match self {
            Phase::StaticSubcritical => "static-subcritical",
            Phase::StaticSupercritical => "static-supercritical",
            Phase::SubcriticalFast => "subcritical-fast",
            Phase::SubcriticalSlow => "subcritical-slow",
            Phase::SupercriticalFast => "supercritical-fast",
            Phase::SupercriticalSlow => "supercritical-slow",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub exponent: f64,
    pub correction: Correction,
    pub phase: Phase,
    /// Only established for `beta >= 3`.
    pub needs_large_beta: bool,
}

impl Prediction {
    /// `N^exponent`, times `ln N` for any log correction.
    pub fn order(&self, n: usize) -> f64 {
        let n = n as f64;
        let base = n.powf(self.exponent);
        match self.correction {
            Correction::None => base,
            Correction::Polylog | Correction::Log => base * n.ln(),
        }
    }
}

/// Order of `E T_cons` predicted for the given parameters.
pub fn predicted_exponent(beta: f64, gamma: f64, regime: Regime) -> Result<Prediction> {
    if !(beta >= 0.0) || !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("beta = {beta}, gamma = {gamma}")));
    }
    let excess = beta + 2.0 * gamma - 1.0;
    if excess.abs() <= CRITICAL_TOL {
        return Err(Error::Critical);
    }
    let sub = excess < 0.0;
    let p = |exponent, correction, phase| Prediction {
        exponent,
        correction,
        phase,
        needs_large_beta: false,
    };
    Ok(match regime {
        Regime::Static if sub => p(gamma, Correction::Polylog, Phase::StaticSubcritical),
        Regime::Static => p(1.0, Correction::Polylog, Phase::StaticSupercritical),
        Regime::Dynamic { alpha } if !alpha.is_finite() => {
            return Err(Error::Domain(format!("alpha = {alpha}")));
        }
        Regime::Dynamic { alpha } if sub && alpha <= 0.0 => {
            p(1.0, Correction::Polylog, Phase::SubcriticalFast)
        }
        Regime::Dynamic { alpha } if sub => {
            p(1.0 + alpha, Correction::None, Phase::SubcriticalSlow)
        }
        Regime::Dynamic { alpha } if alpha < 1.0 => {
            p(1.0, Correction::Polylog, Phase::SupercriticalFast)
        }
        Regime::Dynamic { alpha } if alpha > 1.0 => Prediction {
            needs_large_beta: true,
            ..p(alpha, Correction::Log, Phase::SupercriticalSlow)
        },
        Regime::Dynamic { .. } => return Err(Error::Unresolved),
    })
}

/// Regime for a given `kappa` at size `n`, reading `kappa = N^(-alpha)`.
pub fn regime_for(kappa: f64, alpha: Option<f64>, n: usize) -> Regime {
    match alpha {
        _ if kappa == 0.0 => Regime::Static,
        Some(alpha) => Regime::Dynamic { alpha },
        None => Regime::Dynamic {
            alpha: -kappa.ln() / (n as f64).ln(),
        },
    }
}
