//! Sweep configuration, read from TOML with sections `[grid]`, `[run]` and
//! `[output]`.
//!
//! ```toml
//! [grid]
//! experiment = "consensus"
//! n = [64, 128, 256, 512]
//! beta = [0.3]
//! gamma = [0.2]
//! alpha = [1.0]      # kappa = c * N^(-alpha); or give `kappa = [...]`
//! c = 1.0
//! u = [0.5]
//!
//! [run]
//! replicas = 200
//! seed = 1
//! workers = 1
//! # horizon = 1e6    # default: 50 x predicted order at each N
//!
//! [output]
//! path = "consensus.csv"
//! format = "csv"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::phase::{predicted_exponent, regime_for};
use crate::model::{ModelParams, UpdateRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Consensus,
    Coalescence,
    MeetingKac,
    ComponentStats,
    TreeCheck,
    RefreshTime,
    Birthday,
    Dominance,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Consensus,
        Experiment::Coalescence,
        Experiment::MeetingKac,
        Experiment::ComponentStats,
        Experiment::TreeCheck,
        Experiment::RefreshTime,
        Experiment::Birthday,
        Experiment::Dominance,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Consensus => "consensus",
            Experiment::Coalescence => "coalescence",
            Experiment::MeetingKac => "meeting-kac",
            Experiment::ComponentStats => "component-stats",
            Experiment::TreeCheck => "tree-check",
            Experiment::RefreshTime => "refresh-time",
            Experiment::Birthday => "birthday",
            Experiment::Dominance => "dominance",
        }
    }

    /// Needs a graph law, hence valid `beta` and `gamma`.
    pub fn uses_graph(&self) -> bool {
        !matches!(
            self,
            Experiment::RefreshTime | Experiment::Birthday | Experiment::Dominance
        )
    }

    /// Runs to a time horizon.
    pub fn uses_horizon(&self) -> bool {
        matches!(
            self,
            Experiment::Consensus | Experiment::Coalescence | Experiment::MeetingKac
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

/// Starting state for `meeting-kac`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeetingStart {
    #[default]
    Rho,
    Stationary,
}

/// Statistic for `tree-check`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeStat {
    /// Order of the thinned exploration tree.
    #[default]
    Thinned,
    /// Size of the dominating branching tree.
    Supertree,
    /// Size of a uniform vertex's component in a stationary graph.
    Component,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub experiment: Experiment,
    pub n: Vec<usize>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "half")]
    pub u: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn half() -> Vec<f64> {
    vec![0.5]
}

fn one_replica() -> u32 {
    1
}

fn one_worker() -> usize {
    1
}

fn default_trials() -> u64 {
    1
}

fn default_grid_max() -> u64 {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "one_replica")]
    pub replicas: u32,
    #[serde(default)]
    pub seed: u64,
    pub horizon: Option<f64>,
    #[serde(default = "one_worker")]
    pub workers: usize,
    #[serde(default)]
    pub init: MeetingStart,
    #[serde(default)]
    pub tree: TreeStat,
    /// Labels per trial for `birthday`.
    pub birthday_k: Option<usize>,
    /// Occupancy trials per replica for `birthday`.
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    /// `dominance` checks `x` in `0..=grid_max`.
    #[serde(default = "default_grid_max")]
    pub grid_max: u64,
    /// JSONL event trace of the first replica of the first point.
    pub trace: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            replicas: 1,
            seed: 0,
            horizon: None,
            workers: 1,
            init: MeetingStart::default(),
            tree: TreeStat::default(),
            birthday_k: None,
            trials: 1,
            mu: 1.0,
            lambda: 1.0,
            grid_max: 30,
            trace: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// One parameter combination of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub rate: UpdateRate,
    pub u: f64,
}

impl GridPoint {
    pub fn kappa(&self) -> f64 {
        self.rate.kappa(self.n)
    }

    pub fn alpha(&self) -> Option<f64> {
        self.rate.alpha()
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.beta, self.gamma, self.rate, self.u)
    }

    /// 50 times the predicted order of the consensus time at this `N`.
    pub fn default_horizon(&self) -> Result<f64> {
        let regime = regime_for(self.kappa(), self.alpha(), self.n);
        Ok(50.0 * predicted_exponent(self.beta, self.gamma, regime)?.order(self.n))
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// A single-point configuration.
    pub fn single(experiment: Experiment, point: GridPoint) -> Self {
        let (kappa, alpha, c) = match point.rate {
            UpdateRate::Fixed(k) => (vec![k], vec![], 1.0),
            UpdateRate::Scaled { c, alpha } => (vec![], vec![alpha], c),
        };
        Self {
            grid: GridSpec {
                experiment,
                n: vec![point.n],
                beta: vec![point.beta],
                gamma: vec![point.gamma],
                kappa,
                alpha,
                c,
                u: vec![point.u],
            },
            run: RunSpec::default(),
            output: OutputSpec::default(),
        }
    }

    fn rates(&self) -> Vec<UpdateRate> {
        let g = &self.grid;
        if !g.alpha.is_empty() {
            g.alpha
                .iter()
                .map(|&alpha| UpdateRate::Scaled { c: g.c, alpha })
                .collect()
        } else if !g.kappa.is_empty() {
            g.kappa.iter().map(|&k| UpdateRate::Fixed(k)).collect()
        } else {
            vec![UpdateRate::Fixed(0.0)]
        }
    }

    /// Grid points in canonical order; the index is the seed's point index.
    pub fn points(&self) -> Vec<GridPoint> {
        let g = &self.grid;
        let or_zero = |v: &Vec<f64>| if v.is_empty() { vec![0.0] } else { v.clone() };
        let mut out = Vec::new();
        for &beta in &or_zero(&g.beta) {
            for &gamma in &or_zero(&g.gamma) {
                for rate in self.rates() {
                    for &u in &g.u {
                        for &n in &g.n {
                            out.push(GridPoint {
                                n,
                                beta,
                                gamma,
                                rate,
                                u,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let bad = |m: String| Err(Error::Config(m));
        if g.n.is_empty() {
            return bad("grid.n is empty".into());
        }
        if let Some(n) = g.n.iter().find(|&&n| n < 2) {
            return bad(format!("grid.n contains {n} < 2"));
        }
        if !g.kappa.is_empty() && !g.alpha.is_empty() {
            return bad("give grid.kappa or grid.alpha, not both".into());
        }
        if g.experiment.uses_graph() && (g.beta.is_empty() || g.gamma.is_empty()) {
            return bad(format!("{} needs grid.beta and grid.gamma", g.experiment));
        }
        if g.u.is_empty() {
            return bad("grid.u is empty".into());
        }
        if self.run.replicas == 0 {
            return bad("run.replicas must be >= 1".into());
        }
        if self.run.workers == 0 {
            return bad("run.workers must be >= 1".into());
        }
        if self.points().len() > u32::MAX as usize {
            return bad("grid too large".into());
        }
        if let Some(h) = self.run.horizon {
            if !(h >= 0.0) {
                return bad(format!("run.horizon = {h}"));
            }
        }
        for p in self.points() {
            if g.experiment.uses_graph() || g.experiment == Experiment::RefreshTime {
                p.params().map_err(|e| Error::Config(e.to_string()))?;
            }
            if g.experiment.uses_horizon() && self.run.horizon.is_none() {
                p.default_horizon().map_err(|e| {
                    Error::Config(format!("no default horizon at {p:?}: {e}; set run.horizon"))
                })?;
            }
            if g.experiment == Experiment::RefreshTime && !(p.kappa() > 0.0) {
                return bad("refresh-time needs kappa > 0".into());
            }
            if g.experiment == Experiment::MeetingKac && p.beta == 0.0 {
                return bad("meeting-kac needs beta > 0".into());
            }
        }
        match g.experiment {
            Experiment::Birthday => {
                let k = self
                    .run
                    .birthday_k
                    .ok_or_else(|| Error::Config("birthday needs run.birthday_k".into()))?;
                if k == 0 || g.n.iter().any(|&n| k > n) {
                    return bad(format!("run.birthday_k = {k} must lie in 1..=N"));
                }
                if self.run.trials == 0 {
                    return bad("run.trials must be >= 1".into());
                }
            }
            Experiment::Dominance => {
                if !(self.run.mu > 0.0 && self.run.lambda > 0.0) {
                    return bad("dominance needs run.mu > 0 and run.lambda > 0".into());
                }
            }
            Experiment::TreeCheck => {
                if self.run.tree == TreeStat::Supertree {
                    for p in self.points() {
                        if p.gamma >= 0.5 || p.beta / (1.0 - 2.0 * p.gamma) >= 1.0 {
                            return bad(format!("supertree diverges at {p:?}"));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}
