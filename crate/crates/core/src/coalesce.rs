//! Coalescing variable-speed random walks on the evolving graph.
//!
//! A walker at `v` jumps along each incident edge at rate 1. Walkers that
//! land on the same site merge for good and the merged group carries the
//! lowest original index. Two walkers started from the ergodic exit law
//! `rho` have an exactly known mean meeting time, see [`kac_exact`].

use std::io::Write;

use rand::Rng;

use crate::dyngraph::{DynGraph, EdgeId, GraphLaw, GraphObserver};
use crate::engine::{Engine, EventCounts, EventKind, Layer, StopReason};
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::model::ModelParams;

const VACANT: u32 = u32::MAX;

/// Walker groups with site occupancy and the total jump rate.
#[derive(Debug, Clone)]
pub struct WalkerSystem {
    /// Union-find over original walkers; every root is its group's minimum.
    parent: Vec<u32>,
    /// Site of each live group, indexed by group id.
    position: Vec<u32>,
    occupant: Vec<u32>,
    /// Degree of each occupied site, zero elsewhere.
    rates: Fenwick,
    live: usize,
}

impl WalkerSystem {
    /// Walker `k` starts at `starts[k]`; co-located walkers merge at once.
    pub fn new(g: &DynGraph, starts: &[usize]) -> Self {
        let mut sys = Self {
            parent: (0..starts.len() as u32).collect(),
            position: starts.iter().map(|&s| s as u32).collect(),
            occupant: vec![VACANT; g.n()],
            rates: Fenwick::new(g.n()),
            live: 0,
        };
        for (k, &s) in starts.iter().enumerate() {
            match sys.occupant[s] {
                VACANT => {
                    sys.occupant[s] = k as u32;
                    sys.rates.add(s, g.degree(s) as i64);
                    sys.live += 1;
                }
                // Earlier walkers have lower index.
                other => sys.parent[k] = other,
            }
        }
        sys
    }

    /// One walker on every site.
    pub fn everywhere(g: &DynGraph) -> Self {
        let starts: Vec<usize> = (0..g.n()).collect();
        Self::new(g, &starts)
    }

    pub fn walkers(&self) -> usize {
        self.parent.len()
    }

    pub fn live_groups(&self) -> usize {
        self.live
    }

    /// Current group id (lowest original index) of walker `k`.
    pub fn group_of(&self, mut k: usize) -> usize {
        while self.parent[k] as usize != k {
            k = self.parent[k] as usize;
        }
        k
    }

    pub fn position_of_group(&self, group: usize) -> usize {
        self.position[group] as usize
    }

    pub fn occupant(&self, site: usize) -> Option<usize> {
        match self.occupant[site] {
            VACANT => None,
            g => Some(g as usize),
        }
    }

    /// Ids of live groups, ascending.
    pub fn live_group_ids(&self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&k| self.parent[k] as usize == k)
            .collect()
    }

    pub fn total_walker_rate(&self) -> i64 {
        self.rates.total()
    }

    /// Moves `group` to `target`; returns `(survivor, absorbed)` on a merge.
    pub fn apply_walker_event(
        &mut self,
        g: &DynGraph,
        group: usize,
        target: usize,
    ) -> Option<(usize, usize)> {
        let from = self.position[group] as usize;
        debug_assert_eq!(self.occupant[from] as usize, group);
        self.occupant[from] = VACANT;
        self.rates.add(from, -(g.degree(from) as i64));
        match self.occupant[target] {
            VACANT => {
                self.occupant[target] = group as u32;
                self.position[group] = target as u32;
                self.rates.add(target, g.degree(target) as i64);
                None
            }
            other => {
                let other = other as usize;
                let (keep, gone) = (group.min(other), group.max(other));
                self.parent[gone] = keep as u32;
                self.occupant[target] = keep as u32;
                self.position[keep] = target as u32;
                self.live -= 1;
                Some((keep, gone))
            }
        }
    }

    fn degree_changed(&mut self, v: usize, delta: i64) {
        if self.occupant[v] != VACANT {
            self.rates.add(v, delta);
        }
    }

    /// Occupied sites, one per live group.
    pub fn occupied_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupant
            .iter()
            .enumerate()
            .filter(|(_, &o)| o != VACANT)
            .map(|(s, _)| s)
    }
}

impl GraphObserver for WalkerSystem {
    fn on_remove(&mut self, _id: EdgeId, a: usize, b: usize) {
        self.degree_changed(a, -1);
        self.degree_changed(b, -1);
    }

    fn on_insert(&mut self, _id: EdgeId, a: usize, b: usize) {
        self.degree_changed(a, 1);
        self.degree_changed(b, 1);
    }
}

impl Layer for WalkerSystem {
    fn rate(&self, _g: &DynGraph) -> f64 {
        self.rates.total() as f64
    }

    fn recompute_rate(&self, g: &DynGraph) -> f64 {
        self.occupied_sites().map(|s| g.degree(s)).sum::<usize>() as f64
    }

    fn sample<R: Rng + ?Sized>(&self, g: &DynGraph, rng: &mut R) -> EventKind {
        let site = self.rates.find(rng.random_range(0..self.rates.total()));
        let to = g
            .random_neighbor(site, rng)
            .expect("positive rate implies a neighbour");
        EventKind::WalkerJump {
            group: self.occupant[site] as usize,
            from: site,
            to,
        }
    }

    fn apply(&mut self, g: &DynGraph, kind: &EventKind) {
        if let EventKind::WalkerJump { group, to, .. } = *kind {
            self.apply_walker_event(g, group, to);
        }
    }
}

/// Outcome of a coalescence or meeting run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOutcome {
    /// Time until a single group remains; infinite if that can never happen.
    pub time: f64,
    pub truncated: bool,
    /// Static graph with groups in distinct components.
    pub never: bool,
    pub events: EventCounts,
    pub final_group: Option<usize>,
}

/// Runs walkers until one group is left.
pub fn run_walkers<R: Rng>(
    law: &GraphLaw,
    graph: DynGraph,
    walkers: WalkerSystem,
    horizon: f64,
    rng: R,
) -> Result<WalkOutcome> {
    run_walkers_traced(law, graph, walkers, horizon, rng, None)
}

/// As [`run_walkers`], writing every event to `trace` as JSON lines.
pub fn run_walkers_traced<'a, R: Rng>(
    law: &'a GraphLaw,
    graph: DynGraph,
    walkers: WalkerSystem,
    horizon: f64,
    rng: R,
    trace: Option<Box<dyn Write + 'a>>,
) -> Result<WalkOutcome> {
    if law.params().kappa() == 0.0 && walkers.live_groups() > 1 {
        let comps = graph.components();
        let first = walkers.occupied_sites().next().map(|s| comps.component[s]);
        if walkers
            .occupied_sites()
            .any(|s| Some(comps.component[s]) != first)
        {
            return Ok(WalkOutcome {
                time: f64::INFINITY,
                truncated: false,
                never: true,
                events: EventCounts::default(),
                final_group: None,
            });
        }
    }
    let mut engine = Engine::new(law, graph, walkers, rng);
    if let Some(out) = trace {
        engine = engine.with_trace(out);
    }
    let summary = engine.run_until(|_, w: &WalkerSystem| w.live_groups() <= 1, horizon)?;
    let done = summary.reason == StopReason::Predicate;
    Ok(WalkOutcome {
        time: if summary.reason == StopReason::Absorbed {
            f64::INFINITY
        } else {
            summary.stop_time
        },
        truncated: summary.reason == StopReason::Horizon,
        never: summary.reason == StopReason::Absorbed,
        events: summary.events,
        final_group: done.then(|| engine.layer.live_group_ids()[0]),
    })
}

/// `T_coal` from one walker per site on a stationary graph.
pub fn run_coalescence<R: Rng>(law: &GraphLaw, horizon: f64, mut rng: R) -> Result<WalkOutcome> {
    let graph = law.sample_stationary(&mut rng);
    let walkers = WalkerSystem::everywhere(&graph);
    run_walkers(law, graph, walkers, horizon, rng)
}

/// `sum_i E d(i)` under the stationary law, by double sum.
pub fn expected_total_degree(params: &ModelParams) -> f64 {
    let n = params.n();
    let mut s = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            s += params.prob_at(a, b);
        }
    }
    2.0 * s
}

/// Mean meeting time from `rho`:
/// `(1 - 1/N) / ((2 / N^2) sum_i E d(i))`.
pub fn kac_exact(params: &ModelParams) -> Result<f64> {
    if params.beta() == 0.0 {
        return Err(Error::Domain("beta = 0: walkers can never meet".into()));
    }
    let n = params.n() as f64;
    Ok((1.0 - 1.0 / n) / (2.0 / (n * n) * expected_total_degree(params)))
}

/// A draw from the ergodic exit law of the diagonal.
#[derive(Debug, Clone)]
pub struct RhoSample {
    pub graph: DynGraph,
    /// Walker positions; adjacent in `graph`.
    pub x: usize,
    pub y: usize,
    /// The diagonal site both walkers shared before the step.
    pub diag: usize,
    /// The graph's total degree exceeded the rejection cap.
    pub overflow: bool,
}

/// Samples `rho`: a graph size-biased by total degree, a site chosen
/// proportional to its degree, then one of the two walkers (fair coin) steps
/// to a uniform neighbour.
///
/// Size-biasing is by rejection against `cap`; graphs heavier than `cap` are
/// accepted outright and flagged.
pub fn sample_rho<R: Rng + ?Sized>(law: &GraphLaw, cap: f64, rng: &mut R) -> Result<RhoSample> {
    if law.params().beta() == 0.0 {
        return Err(Error::Domain("rho needs beta > 0".into()));
    }
    loop {
        let graph = law.sample_stationary(rng);
        let total = graph.total_degree() as f64;
        if total == 0.0 {
            continue;
        }
        let overflow = total > cap;
        if !overflow && rng.random::<f64>() * cap >= total {
            continue;
        }
        let id = graph.sample_edge_id(rng)?;
        let (a, b) = graph.edge(id);
        let diag = if rng.random::<bool>() { a } else { b };
        let step = graph.random_neighbor(diag, rng).expect("diag has an edge");
        let (x, y) = if rng.random::<bool>() {
            (step, diag)
        } else {
            (diag, step)
        };
        return Ok(RhoSample {
            graph,
            x,
            y,
            diag,
            overflow,
        });
    }
}

/// The rejection cap `2 sum_i E d(i)`.
pub fn rho_cap(params: &ModelParams) -> f64 {
    2.0 * expected_total_degree(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeetingInit {
    /// Independent uniform positions on a stationary graph.
    StationaryPair,
    /// The ergodic exit law, with the given rejection cap.
    Rho { cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeetingOutcome {
    pub walk: WalkOutcome,
    pub rho_overflow: bool,
}

/// `T_D`: two walkers on the shared evolving graph until they co-locate.
pub fn run_meeting<R: Rng>(
    law: &GraphLaw,
    init: MeetingInit,
    horizon: f64,
    mut rng: R,
) -> Result<MeetingOutcome> {
    let n = law.params().n();
    let (graph, x, y, rho_overflow) = match init {
        MeetingInit::StationaryPair => {
            let g = law.sample_stationary(&mut rng);
            let x = rng.random_range(0..n);
            let y = rng.random_range(0..n);
            (g, x, y, false)
        }
        MeetingInit::Rho { cap } => {
            let s = sample_rho(law, cap, &mut rng)?;
            (s.graph, s.x, s.y, s.overflow)
        }
    };
    let walkers = WalkerSystem::new(&graph, &[x, y]);
    let walk = run_walkers(law, graph, walkers, horizon, rng)?;
    Ok(MeetingOutcome { walk, rho_overflow })
}
