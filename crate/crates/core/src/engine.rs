//! Direct-method Gillespie scheduler over the graph's update clocks and one
//! particle layer (voters or walkers).
//!
//! Every vertex carries a rate-`kappa` update clock, so graph updates arrive
//! at total rate `kappa N` and hit a uniform vertex. The layer contributes
//! its own rate, maintained incrementally through [`GraphObserver`]
//! callbacks and checked against a full recomputation every
//! `audit_every` events.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde_json::json;

use crate::dyngraph::{DynGraph, GraphLaw, GraphObserver};
use crate::error::{Error, Result};

pub const DEFAULT_AUDIT_EVERY: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Vertex `0`-based index resamples its neighbourhood.
    VertexUpdate(usize),
    /// `target` copies the opinion of its neighbour `source`.
    VoterCopy { target: usize, source: usize },
    /// Walker group `group` jumps along an edge.
    WalkerJump {
        group: usize,
        from: usize,
        to: usize,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::VertexUpdate(_) => "update",
            EventKind::VoterCopy { .. } => "voter",
            EventKind::WalkerJump { .. } => "jump",
        }
    }

    fn args(&self) -> Vec<usize> {
        match *self {
            EventKind::VertexUpdate(v) => vec![v + 1],
            EventKind::VoterCopy { target, source } => vec![target + 1, source + 1],
            EventKind::WalkerJump { group, from, to } => vec![group + 1, from + 1, to + 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub kind: EventKind,
    pub time: f64,
}

/// Particle dynamics driven by the evolving graph.
pub trait Layer: GraphObserver {
    /// Current total rate of layer events, maintained incrementally.
    fn rate(&self, g: &DynGraph) -> f64;
    /// The same rate recomputed from scratch.
    fn recompute_rate(&self, g: &DynGraph) -> f64;
    /// Draws the next layer event; only called when `rate > 0`.
    fn sample<R: Rng + ?Sized>(&self, g: &DynGraph, rng: &mut R) -> EventKind;
    fn apply(&mut self, g: &DynGraph, kind: &EventKind);
}

/// Graph dynamics alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl GraphObserver for Idle {}

impl Layer for Idle {
    fn rate(&self, _: &DynGraph) -> f64 {
        0.0
    }
    fn recompute_rate(&self, _: &DynGraph) -> f64 {
        0.0
    }
    fn sample<R: Rng + ?Sized>(&self, _: &DynGraph, _: &mut R) -> EventKind {
        unreachable!("idle layer has rate zero")
    }
    fn apply(&mut self, _: &DynGraph, _: &EventKind) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub updates: u64,
    pub layer: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.updates + self.layer
    }
}

/// Simulation clock and rate bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EventClock {
    pub time: f64,
    pub update_rate: f64,
    pub counts: EventCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Predicate,
    /// Time horizon reached first; the run is censored.
    Horizon,
    /// Total rate hit zero with the predicate still false.
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub stop_time: f64,
    pub reason: StopReason,
    pub events: EventCounts,
}

impl RunSummary {
    pub fn truncated(&self) -> bool {
        self.reason == StopReason::Horizon
    }
}

pub struct Engine<'a, L, R> {
    law: &'a GraphLaw,
    pub graph: DynGraph,
    pub layer: L,
    clock: EventClock,
    rng: R,
    audit_every: u64,
    trace: Option<Box<dyn Write + 'a>>,
}

impl<'a, L: Layer, R: Rng> Engine<'a, L, R> {
    pub fn new(law: &'a GraphLaw, graph: DynGraph, layer: L, rng: R) -> Self {
        let p = law.params();
        let update_rate = p.kappa() * p.n() as f64;
        Self {
            law,
            graph,
            layer,
            clock: EventClock {
                time: 0.0,
                update_rate,
                counts: EventCounts::default(),
            },
            rng,
            audit_every: DEFAULT_AUDIT_EVERY,
            trace: None,
        }
    }

    pub fn with_trace(mut self, out: Box<dyn Write + 'a>) -> Self {
        self.trace = Some(out);
        self
    }

    pub fn with_audit_every(mut self, every: u64) -> Self {
        self.audit_every = every.max(1);
        self
    }

    pub fn clock(&self) -> &EventClock {
        &self.clock
    }

    pub fn time(&self) -> f64 {
        self.clock.time
    }

    pub fn rng(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn total_rate(&self) -> f64 {
        self.clock.update_rate + self.layer.rate(&self.graph)
    }

    /// Samples the next event without applying it.
    pub fn next_event(&mut self) -> Result<SimEvent> {
        let layer_rate = self.layer.rate(&self.graph);
        let total = self.clock.update_rate + layer_rate;
        if total <= 0.0 {
            return Err(Error::Absorbing);
        }
        let dt: f64 = Exp1.sample(&mut self.rng);
        let mut time = self.clock.time + dt / total;
        if time <= self.clock.time {
            time = self.clock.time.next_up();
        }
        let pick = self.rng.random::<f64>() * total;
        let kind = if pick < self.clock.update_rate || layer_rate <= 0.0 {
            EventKind::VertexUpdate(self.rng.random_range(0..self.graph.n()))
        } else {
            self.layer.sample(&self.graph, &mut self.rng)
        };
        Ok(SimEvent { kind, time })
    }

    pub fn apply_event(&mut self, ev: &SimEvent) -> Result<()> {
        debug_assert!(ev.time > self.clock.time);
        self.clock.time = ev.time;
        self.graph.set_sim_time(ev.time);
        match ev.kind {
            EventKind::VertexUpdate(v) => {
                self.law
                    .resample_vertex(&mut self.graph, v, &mut self.rng, &mut self.layer);
                self.clock.counts.updates += 1;
            }
            ref kind => {
                self.layer.apply(&self.graph, kind);
                self.clock.counts.layer += 1;
            }
        }
        if let Some(out) = self.trace.as_mut() {
            let line = json!({"t": ev.time, "kind": ev.kind.name(), "args": ev.kind.args()});
            writeln!(out, "{line}")?;
        }
        if self.clock.counts.total().is_multiple_of(self.audit_every) {
            self.audit_rate()?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<SimEvent> {
        let ev = self.next_event()?;
        self.apply_event(&ev)?;
        Ok(ev)
    }

    /// Maintained layer rate against a full recomputation, 1e-9 relative.
    pub fn audit_rate(&self) -> Result<()> {
        let maintained = self.layer.rate(&self.graph);
        let recomputed = self.layer.recompute_rate(&self.graph);
        let scale = maintained.abs().max(recomputed.abs()).max(1.0);
        if (maintained - recomputed).abs() > 1e-9 * scale {
            return Err(Error::RateAudit {
                maintained,
                recomputed,
            });
        }
        Ok(())
    }

    /// Advances until `stop` holds, the horizon passes, or nothing can happen.
    pub fn run_until<F>(&mut self, mut stop: F, horizon: f64) -> Result<RunSummary>
    where
        F: FnMut(&DynGraph, &L) -> bool,
    {
        let start = self.clock.counts;
        let summary = |this: &Self, reason| RunSummary {
            stop_time: this.clock.time,
            reason,
            events: EventCounts {
                updates: this.clock.counts.updates - start.updates,
                layer: this.clock.counts.layer - start.layer,
            },
        };
        loop {
            if stop(&self.graph, &self.layer) {
                return Ok(summary(self, StopReason::Predicate));
            }
            if self.clock.time >= horizon {
                return Ok(summary(self, StopReason::Horizon));
            }
            let ev = match self.next_event() {
                Ok(ev) => ev,
                Err(Error::Absorbing) => return Ok(summary(self, StopReason::Absorbed)),
                Err(e) => return Err(e),
            };
            if ev.time >= horizon {
                self.clock.time = horizon;
                self.graph.set_sim_time(horizon);
                return Ok(summary(self, StopReason::Horizon));
            }
            self.apply_event(&ev)?;
        }
    }

    pub fn into_parts(self) -> (DynGraph, L) {
        (self.graph, self.layer)
    }
}

/// First time every vertex has rung its rate-`kappa` update clock at least
/// once. After it the graph is exactly stationary, whatever it started as.
pub fn first_full_refresh<R: Rng + ?Sized>(n: usize, kappa: f64, rng: &mut R) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::NeverRefreshes);
    }
    let total = kappa * n as f64;
    let mut seen = vec![false; n];
    let mut left = n;
    let mut t = 0.0;
    while left > 0 {
        let dt: f64 = Exp1.sample(rng);
        t += dt / total;
        let v = rng.random_range(0..n);
        if !seen[v] {
            seen[v] = true;
            left -= 1;
        }
    }
    Ok(t)
}
