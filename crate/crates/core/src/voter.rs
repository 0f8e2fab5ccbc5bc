//! Forward voter dynamics on the evolving graph.
//!
//! Every directed pair of neighbours fires at rate 1 and the head copies the
//! tail's opinion. Firings across concordant edges change nothing, so the
//! default [`VoterMode::Discordant`] only schedules the `2 * #discordant`
//! effective ones; [`VoterMode::Uniform`] keeps the literal `2|E|` clocks.
//! Both realize the same opinion process.

use std::io::Write;

use rand::Rng;

use crate::dyngraph::{DynGraph, EdgeId, GraphLaw, GraphObserver};
use crate::engine::{Engine, EventCounts, EventKind, Layer, StopReason};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Binary opinions with the number of ones kept current.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterState {
    opinions: Vec<bool>,
    ones: usize,
}

impl VoterState {
    pub fn from_opinions(opinions: Vec<bool>) -> Self {
        let ones = opinions.iter().filter(|&&x| x).count();
        Self { opinions, ones }
    }

    /// I.i.d. `Bernoulli(u)` opinions.
    pub fn bernoulli<R: Rng + ?Sized>(n: usize, u: f64, rng: &mut R) -> Result<Self> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("u = {u} not in (0, 1)")));
        }
        Ok(Self::from_opinions(
            (0..n).map(|_| rng.random::<f64>() < u).collect(),
        ))
    }

    /// Exactly `ones` opinions equal to 1 on a uniformly random vertex set.
    pub fn with_count<R: Rng + ?Sized>(n: usize, ones: usize, rng: &mut R) -> Result<Self> {
        if ones > n {
            return Err(Error::Domain(format!("{ones} ones among {n} vertices")));
        }
        let picked = rand::seq::index::sample(rng, n, ones);
        let mut opinions = vec![false; n];
        for v in picked.iter() {
            opinions[v] = true;
        }
        Ok(Self::from_opinions(opinions))
    }

    pub fn n(&self) -> usize {
        self.opinions.len()
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    #[inline]
    pub fn opinion(&self, v: usize) -> bool {
        self.opinions[v]
    }

    pub fn opinions(&self) -> &[bool] {
        &self.opinions
    }

    pub fn is_consensus(&self) -> bool {
        self.ones == 0 || self.ones == self.opinions.len()
    }

    /// `eta <- eta^{i <- j}`; returns whether `i` changed.
    pub fn apply_copy(&mut self, i: usize, j: usize) -> bool {
        let new = self.opinions[j];
        if self.opinions[i] == new {
            return false;
        }
        self.opinions[i] = new;
        if new {
            self.ones += 1;
        } else {
            self.ones -= 1;
        }
        true
    }
}

/// `init_opinions` for a parameter set.
pub fn init_opinions<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<VoterState> {
    VoterState::bernoulli(params.n(), params.u(), rng)
}

const ABSENT: u32 = u32::MAX;

/// Edge ids with O(1) insert, remove and uniform draw.
#[derive(Debug, Clone, Default)]
struct EdgeSet {
    pos: Vec<u32>,
    items: Vec<u32>,
}

impl EdgeSet {
    fn contains(&self, id: EdgeId) -> bool {
        self.pos.get(id).is_some_and(|&p| p != ABSENT)
    }

    fn insert(&mut self, id: EdgeId) {
        if id >= self.pos.len() {
            self.pos.resize(id + 1, ABSENT);
        }
        if self.pos[id] == ABSENT {
            self.pos[id] = self.items.len() as u32;
            self.items.push(id as u32);
        }
    }

    fn remove(&mut self, id: EdgeId) {
        if !self.contains(id) {
            return;
        }
        let p = self.pos[id] as usize;
        self.items.swap_remove(p);
        if let Some(&moved) = self.items.get(p) {
            self.pos[moved as usize] = p as u32;
        }
        self.pos[id] = ABSENT;
    }

    fn rename(&mut self, from: EdgeId, to: EdgeId) {
        if !self.contains(from) {
            return;
        }
        let p = self.pos[from];
        self.pos[from] = ABSENT;
        if to >= self.pos.len() {
            self.pos.resize(to + 1, ABSENT);
        }
        self.pos[to] = p;
        self.items[p as usize] = to as u32;
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoterMode {
    /// Uniform edge, fair direction, at total rate `2|E|`.
    Uniform,
    /// Uniform discordant edge, fair direction, at rate `2 * #discordant`.
    #[default]
    Discordant,
}

/// Voter opinions plus the discordant-edge set, as an engine layer.
#[derive(Debug, Clone)]
pub struct VoterLayer {
    state: VoterState,
    discordant: EdgeSet,
    edges: usize,
    mode: VoterMode,
}

impl VoterLayer {
    pub fn new(g: &DynGraph, state: VoterState, mode: VoterMode) -> Self {
        assert_eq!(g.n(), state.n());
        let mut discordant = EdgeSet::default();
        for (id, (a, b)) in g.edges().enumerate() {
            if state.opinion(a) != state.opinion(b) {
                discordant.insert(id);
            }
        }
        Self {
            state,
            discordant,
            edges: g.edge_count(),
            mode,
        }
    }

    pub fn state(&self) -> &VoterState {
        &self.state
    }

    pub fn discordant_edges(&self) -> usize {
        self.discordant.len()
    }

    /// No discordant edge: every component is opinion-homogeneous.
    pub fn componentwise_consensus(&self) -> bool {
        self.discordant.len() == 0
    }

    /// Copies an opinion across `{i, j}`; returns whether `i` changed.
    pub fn apply_voter_event(&mut self, g: &DynGraph, i: usize, j: usize) -> bool {
        if !self.state.apply_copy(i, j) {
            return false;
        }
        let own = self.state.opinion(i);
        for (nbr, id) in g.incident(i) {
            if self.state.opinion(nbr) != own {
                self.discordant.insert(id);
            } else {
                self.discordant.remove(id);
            }
        }
        true
    }
}

impl GraphObserver for VoterLayer {
    fn on_remove(&mut self, id: EdgeId, _a: usize, _b: usize) {
        self.discordant.remove(id);
        self.edges -= 1;
    }

    fn on_relocate(&mut self, from: EdgeId, to: EdgeId) {
        self.discordant.rename(from, to);
    }

    fn on_insert(&mut self, id: EdgeId, a: usize, b: usize) {
        self.edges += 1;
        if self.state.opinion(a) != self.state.opinion(b) {
            self.discordant.insert(id);
        }
    }
}

impl Layer for VoterLayer {
    fn rate(&self, _g: &DynGraph) -> f64 {
        match self.mode {
            VoterMode::Uniform => 2.0 * self.edges as f64,
            VoterMode::Discordant => 2.0 * self.discordant.len() as f64,
        }
    }

    fn recompute_rate(&self, g: &DynGraph) -> f64 {
        match self.mode {
            VoterMode::Uniform => 2.0 * g.edge_count() as f64,
            VoterMode::Discordant => {
                let n = g
                    .edges()
                    .filter(|&(a, b)| self.state.opinion(a) != self.state.opinion(b))
                    .count();
                2.0 * n as f64
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, g: &DynGraph, rng: &mut R) -> EventKind {
        let id = match self.mode {
            VoterMode::Uniform => rng.random_range(0..g.edge_count()),
            VoterMode::Discordant => {
                self.discordant.items[rng.random_range(0..self.discordant.len())] as usize
            }
        };
        let (a, b) = g.edge(id);
        if rng.random::<bool>() {
            EventKind::VoterCopy {
                target: a,
                source: b,
            }
        } else {
            EventKind::VoterCopy {
                target: b,
                source: a,
            }
        }
    }

    fn apply(&mut self, g: &DynGraph, kind: &EventKind) {
        if let EventKind::VoterCopy { target, source } = *kind {
            self.apply_voter_event(g, target, source);
        }
    }
}

/// Outcome of one forward voter run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusOutcome {
    /// Consensus time; the horizon if truncated.
    pub time: f64,
    /// Unanimous opinion, `None` for componentwise or truncated runs without
    /// global agreement.
    pub winner: Option<bool>,
    pub truncated: bool,
    pub events: EventCounts,
}

/// Runs the voter model from a given graph and opinion vector.
///
/// With `kappa > 0` stops at global unanimity; with `kappa = 0` the graph is
/// frozen and the run stops once no edge is discordant.
pub fn run_voter<R: Rng>(
    law: &GraphLaw,
    graph: DynGraph,
    state: VoterState,
    mode: VoterMode,
    horizon: f64,
    rng: R,
) -> Result<ConsensusOutcome> {
    run_voter_traced(law, graph, state, mode, horizon, rng, None)
}

/// As [`run_voter`], writing every event to `trace` as JSON lines.
pub fn run_voter_traced<'a, R: Rng>(
    law: &'a GraphLaw,
    graph: DynGraph,
    state: VoterState,
    mode: VoterMode,
    horizon: f64,
    rng: R,
    trace: Option<Box<dyn Write + 'a>>,
) -> Result<ConsensusOutcome> {
    let dynamic = law.params().kappa() > 0.0;
    let layer = VoterLayer::new(&graph, state, mode);
    let mut engine = Engine::new(law, graph, layer, rng);
    if let Some(out) = trace {
        engine = engine.with_trace(out);
    }
    let summary = engine.run_until(
        |_, l: &VoterLayer| {
            if dynamic {
                l.state().is_consensus()
            } else {
                l.componentwise_consensus()
            }
        },
        horizon,
    )?;
    let st = engine.layer.state();
    let winner = st.is_consensus().then(|| st.ones() > 0);
    Ok(ConsensusOutcome {
        time: summary.stop_time,
        winner,
        truncated: summary.reason == StopReason::Horizon
            || (summary.reason == StopReason::Absorbed && dynamic),
        events: summary.events,
    })
}

/// Stationary graph, `Bernoulli(u)` opinions, run to consensus.
pub fn run_to_consensus<R: Rng>(
    law: &GraphLaw,
    horizon: f64,
    mut rng: R,
) -> Result<ConsensusOutcome> {
    let graph = law.sample_stationary(&mut rng);
    let state = init_opinions(law.params(), &mut rng)?;
    run_voter(law, graph, state, VoterMode::default(), horizon, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::Summary;

    #[test]
    fn copy_examples() {
        let mut s = VoterState::from_opinions(vec![false, true]);
        assert!(!s.apply_copy(1, 1));
        assert!(s.apply_copy(0, 1));
        assert_eq!(s.opinions(), &[true, true]);
        assert_eq!(s.ones(), 2);
        assert!(!s.apply_copy(0, 1));
    }

    #[test]
    fn init_examples() {
        let mut rng = seeded(1);
        let s = VoterState::with_count(10, 0, &mut rng).unwrap();
        assert!(s.is_consensus() && s.ones() == 0);
        assert_eq!(VoterState::with_count(10, 4, &mut rng).unwrap().ones(), 4);
        assert!(VoterState::bernoulli(10, 1.0, &mut rng).is_err());
        let a = VoterState::bernoulli(50, 0.3, &mut seeded(9)).unwrap();
        let b = VoterState::bernoulli(50, 0.3, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
        let n = 10_000;
        let band = 3.0 * (n as f64 * 0.25).sqrt();
        let inside = (0..1000)
            .filter(|_| {
                let s = VoterState::bernoulli(n, 0.5, &mut rng).unwrap();
                (s.ones() as f64 - 5000.0).abs() <= band
            })
            .count();
        assert!(inside >= 990, "{inside}");
    }

    #[test]
    fn discordant_set_tracks_graph_changes() {
        let p = ModelParams::with_kappa(30, 1.5, 0.3, 1.0).unwrap();
        let law = GraphLaw::new(&p);
        let mut rng = seeded(2);
        let g = law.sample_stationary(&mut rng);
        let st = VoterState::bernoulli(30, 0.5, &mut rng).unwrap();
        let layer = VoterLayer::new(&g, st, VoterMode::Discordant);
        let mut e = Engine::new(&law, g, layer, rng).with_audit_every(1);
        for _ in 0..5_000 {
            if e.step().is_err() {
                break;
            }
        }
        e.audit_rate().unwrap();
        e.graph.audit().unwrap();
    }

    #[test]
    fn single_edge_consensus_time() {
        let law = GraphLaw::new(&ModelParams::with_kappa(2, 1.0, 0.0, 0.0).unwrap());
        for mode in [VoterMode::Uniform, VoterMode::Discordant] {
            let mut rng = seeded(3);
            let times: Vec<f64> = (0..10_000)
                .map(|_| {
                    let g = DynGraph::from_edges(2, &[(0, 1)]);
                    let st = VoterState::from_opinions(vec![false, true]);
                    let out = run_voter(&law, g, st, mode, 1e6, &mut rng).unwrap();
                    assert!(out.winner.is_some());
                    out.time
                })
                .collect();
            let s = Summary::of(&times);
            assert!((s.mean - 0.5).abs() < 3.0 * s.se(), "{mode:?}: {}", s.mean);
        }
    }

    #[test]
    fn initial_consensus_is_immediate() {
        let law = GraphLaw::new(&ModelParams::with_kappa(20, 1.0, 0.2, 1.0).unwrap());
        let mut rng = seeded(4);
        let g = law.sample_stationary(&mut rng);
        let out = run_voter(
            &law,
            g,
            VoterState::from_opinions(vec![true; 20]),
            VoterMode::Discordant,
            10.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            (out.time, out.winner, out.events.total()),
            (0.0, Some(true), 0)
        );
    }

    #[test]
    fn static_small_graph_reaches_consensus() {
        let law = GraphLaw::new(&ModelParams::with_kappa(16, 2.0, 0.0, 0.0).unwrap());
        let mut rng = seeded(5);
        let mut done = 0;
        while done < 50 {
            let g = law.sample_stationary(&mut rng);
            if g.components().sizes.len() != 1 {
                continue;
            }
            let st = VoterState::bernoulli(16, 0.5, &mut rng).unwrap();
            let out = run_voter(&law, g, st, VoterMode::Uniform, 1e6, &mut rng).unwrap();
            assert!(!out.truncated && out.winner.is_some());
            done += 1;
        }
    }
}
