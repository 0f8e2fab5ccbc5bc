//! Mutable simple graph under the vertex-update dynamic.
//!
//! Edges live in a flat array so a uniform edge is one index draw; each
//! adjacency entry records the id of its edge and each edge records its slot
//! in both adjacency lists, so insertion and removal are O(1) swap operations.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{EndpointSampler, ModelParams};

pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AdjEntry {
    nbr: u32,
    edge: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EdgeRec {
    a: u32,
    b: u32,
    pos_a: u32,
    pos_b: u32,
}

/// Receives edge-set changes while the graph mutates.
///
/// `on_remove` fires while the edge still holds `id`; if the removal moved
/// the last edge into the freed slot, `on_relocate(from, to)` follows.
pub trait GraphObserver {
    fn on_remove(&mut self, _id: EdgeId, _a: usize, _b: usize) {}
    fn on_relocate(&mut self, _from: EdgeId, _to: EdgeId) {}
    fn on_insert(&mut self, _id: EdgeId, _a: usize, _b: usize) {}
}

impl GraphObserver for () {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynGraph {
    adj: Vec<Vec<AdjEntry>>,
    edges: Vec<EdgeRec>,
    sim_time: f64,
    buf: Vec<u32>,
}

/// Connected components of a graph snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentView {
    /// Component id of every vertex.
    pub component: Vec<u32>,
    pub sizes: Vec<usize>,
    /// Id of a largest component.
    pub largest: usize,
}

impl ComponentView {
    pub fn size_of(&self, v: usize) -> usize {
        self.sizes[self.component[v] as usize]
    }

    pub fn largest_size(&self) -> usize {
        self.sizes.get(self.largest).copied().unwrap_or(0)
    }

    /// `E|C(v)|` for a uniform vertex `v`, i.e. `sum |C|^2 / N`.
    pub fn mean_size_seen_from_vertex(&self) -> f64 {
        let n: usize = self.sizes.iter().sum();
        let sq: f64 = self.sizes.iter().map(|&s| (s * s) as f64).sum();
        sq / n as f64
    }
}

impl DynGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            ..Default::default()
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                g.push_edge(a, b, &mut ());
            }
        }
        g
    }

    /// Builds a graph from 0-based pairs; loops and repeats are skipped.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(a, b) in pairs {
            g.insert_edge(a, b, &mut ());
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `sum_i d(i) = 2|E|`.
    pub fn total_degree(&self) -> usize {
        2 * self.edges.len()
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn sim_time(&self) -> f64 {
        self.sim_time
    }

    pub fn set_sim_time(&mut self, t: f64) {
        self.sim_time = t;
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|e| e.nbr as usize)
    }

    /// `(neighbor, edge id)` pairs at `v`.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, EdgeId)> + '_ {
        self.adj[v]
            .iter()
            .map(|e| (e.nbr as usize, e.edge as usize))
    }

    #[inline]
    pub fn neighbor_at(&self, v: usize, k: usize) -> usize {
        self.adj[v][k].nbr as usize
    }

    pub fn random_neighbor<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Option<usize> {
        let d = self.degree(v);
        (d > 0).then(|| self.neighbor_at(v, rng.random_range(0..d)))
    }

    #[inline]
    pub fn edge(&self, id: EdgeId) -> (usize, usize) {
        let e = self.edges[id];
        (e.a as usize, e.b as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|e| (e.a as usize, e.b as usize))
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (s, t) = if self.degree(a) <= self.degree(b) {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[s].iter().any(|e| e.nbr as usize == t)
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<EdgeId> {
        self.adj[a]
            .iter()
            .find(|e| e.nbr as usize == b)
            .map(|e| e.edge as usize)
    }

    /// Inserts `{a, b}` unless it is a loop or already present.
    pub fn insert_edge<O: GraphObserver + ?Sized>(
        &mut self,
        a: usize,
        b: usize,
        obs: &mut O,
    ) -> Option<EdgeId> {
        if a == b || self.has_edge(a, b) {
            return None;
        }
        Some(self.push_edge(a, b, obs))
    }

    fn push_edge<O: GraphObserver + ?Sized>(&mut self, a: usize, b: usize, obs: &mut O) -> EdgeId {
        let id = self.edges.len();
        let pos_a = self.adj[a].len() as u32;
        let pos_b = self.adj[b].len() as u32;
        self.adj[a].push(AdjEntry {
            nbr: b as u32,
            edge: id as u32,
        });
        self.adj[b].push(AdjEntry {
            nbr: a as u32,
            edge: id as u32,
        });
        self.edges.push(EdgeRec {
            a: a as u32,
            b: b as u32,
            pos_a,
            pos_b,
        });
        obs.on_insert(id, a, b);
        id
    }

    fn detach(&mut self, v: usize, pos: usize) {
        let list = &mut self.adj[v];
        list.swap_remove(pos);
        if let Some(moved) = list.get(pos).copied() {
            let rec = &mut self.edges[moved.edge as usize];
            if rec.a as usize == v {
                rec.pos_a = pos as u32;
            } else {
                rec.pos_b = pos as u32;
            }
        }
    }

    pub fn remove_edge<O: GraphObserver + ?Sized>(&mut self, id: EdgeId, obs: &mut O) {
        let rec = self.edges[id];
        obs.on_remove(id, rec.a as usize, rec.b as usize);
        self.detach(rec.a as usize, rec.pos_a as usize);
        self.detach(rec.b as usize, rec.pos_b as usize);
        self.edges.swap_remove(id);
        if let Some(moved) = self.edges.get(id).copied() {
            self.adj[moved.a as usize][moved.pos_a as usize].edge = id as u32;
            self.adj[moved.b as usize][moved.pos_b as usize].edge = id as u32;
            obs.on_relocate(self.edges.len(), id);
        }
    }

    pub fn remove_edge_between<O: GraphObserver + ?Sized>(
        &mut self,
        a: usize,
        b: usize,
        obs: &mut O,
    ) -> bool {
        match self.edge_id(a, b) {
            Some(id) => {
                self.remove_edge(id, obs);
                true
            }
            None => false,
        }
    }

    /// Removes every edge at `v`.
    pub fn isolate<O: GraphObserver + ?Sized>(&mut self, v: usize, obs: &mut O) {
        while let Some(e) = self.adj[v].last().copied() {
            self.remove_edge(e.edge as usize, obs);
        }
    }

    pub fn sample_edge_id<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EdgeId> {
        if self.edges.is_empty() {
            return Err(Error::NoEdge);
        }
        Ok(rng.random_range(0..self.edges.len()))
    }

    /// A uniformly chosen undirected edge.
    pub fn sample_uniform_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        self.sample_edge_id(rng).map(|id| self.edge(id))
    }

    pub fn components(&self) -> ComponentView {
        let n = self.n();
        let mut component = vec![u32::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if component[s] != u32::MAX {
                continue;
            }
            let id = sizes.len() as u32;
            component[s] = id;
            queue.push_back(s);
            let mut size = 0;
            while let Some(v) = queue.pop_front() {
                size += 1;
                for w in self.neighbors(v) {
                    if component[w] == u32::MAX {
                        component[w] = id;
                        queue.push_back(w);
                    }
                }
            }
            sizes.push(size);
        }
        let largest = sizes
            .iter()
            .enumerate()
            .max_by_key(|&(i, &s)| (s, std::cmp::Reverse(i)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        ComponentView {
            component,
            sizes,
            largest,
        }
    }

    /// `|C(v)|` by breadth-first search from `v` alone.
    pub fn component_size(&self, v: usize) -> usize {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![v];
        seen[v] = true;
        let mut size = 0;
        while let Some(x) = stack.pop() {
            size += 1;
            for y in self.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        size
    }

    /// Full consistency check of the redundant edge bookkeeping.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let n = self.n();
        let mut pairs = std::collections::HashSet::new();
        for (id, e) in self.edges.iter().enumerate() {
            let (a, b) = (e.a as usize, e.b as usize);
            if a == b {
                return Err(format!("loop at {a}"));
            }
            if a >= n || b >= n {
                return Err(format!("edge {id} out of range"));
            }
            if !pairs.insert((a.min(b), a.max(b))) {
                return Err(format!("duplicate edge {{{a}, {b}}}"));
            }
            let ea = self.adj[a].get(e.pos_a as usize);
            let eb = self.adj[b].get(e.pos_b as usize);
            if ea
                != Some(&AdjEntry {
                    nbr: b as u32,
                    edge: id as u32,
                })
                || eb
                    != Some(&AdjEntry {
                        nbr: a as u32,
                        edge: id as u32,
                    })
            {
                return Err(format!("edge {id} slots inconsistent"));
            }
        }
        let listed: usize = self.adj.iter().map(Vec::len).sum();
        if listed != self.total_degree() {
            return Err(format!(
                "degree sum {listed} != 2|E| = {}",
                self.total_degree()
            ));
        }
        for (v, list) in self.adj.iter().enumerate() {
            for ent in list {
                let rec = self
                    .edges
                    .get(ent.edge as usize)
                    .ok_or_else(|| format!("dangling edge id at {v}"))?;
                let other = if rec.a as usize == v {
                    rec.b
                } else if rec.b as usize == v {
                    rec.a
                } else {
                    return Err(format!("edge {} not incident to {v}", ent.edge));
                };
                if other != ent.nbr {
                    return Err(format!("adjacency of {v} disagrees with edge {}", ent.edge));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: `N <N>` then one 1-based `i j` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "N {}", self.n())?;
        for (a, b) in self.edges() {
            writeln!(out, "{} {}", a.min(b) + 1, a.max(b) + 1)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty edge list".into()))??;
        let n: usize = header
            .strip_prefix("N ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad header {header:?}")))?;
        let mut g = Self::empty(n);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j))) if (1..=n).contains(&i) && (1..=n).contains(&j) => {
                    g.insert_edge(i - 1, j - 1, &mut ());
                }
                _ => return Err(Error::Config(format!("bad edge on line {}", k + 2))),
            }
        }
        Ok(g)
    }
}

/// Which construction draws fresh neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResamplePath {
    /// One coin per potential edge; O(N).
    Bernoulli,
    /// `Pois(w(i))` stubs with endpoints drawn from the `j^(-gamma)` table,
    /// loops and repeats dropped; O(w(i)) expected.
    Multigraph,
}

impl ResamplePath {
    pub fn default_for(n: usize) -> Self {
        if n > 64 {
            ResamplePath::Multigraph
        } else {
            ResamplePath::Bernoulli
        }
    }
}

/// The stationary edge law with everything needed to sample from it.
#[derive(Debug, Clone)]
pub struct GraphLaw {
    params: ModelParams,
    endpoints: EndpointSampler,
    stubs: Vec<Option<Poisson<f64>>>,
    path: ResamplePath,
}

impl GraphLaw {
    pub fn new(params: &ModelParams) -> Self {
        Self::with_path(params, ResamplePath::default_for(params.n()))
    }

    pub fn with_path(params: &ModelParams, path: ResamplePath) -> Self {
        let stubs = (0..params.n())
            .map(|v| {
                let w = params.weight_at(v);
                (w > 0.0).then(|| Poisson::new(w).expect("finite positive weight"))
            })
            .collect();
        Self {
            params: params.clone(),
            endpoints: EndpointSampler::for_params(params),
            stubs,
            path,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn endpoints(&self) -> &EndpointSampler {
        &self.endpoints
    }

    pub fn path(&self) -> ResamplePath {
        self.path
    }

    /// Multigraph degree draw `Pois(w(v))` at 0-based `v`.
    #[inline]
    pub fn stub_count<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> u64 {
        match &self.stubs[v] {
            Some(p) => p.sample(rng) as u64,
            None => 0,
        }
    }

    /// A graph from the stationary law: every pair independent with `p_ij`.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> DynGraph {
        let n = self.params.n();
        let mut g = DynGraph::empty(n);
        match self.path {
            ResamplePath::Bernoulli => {
                for a in 0..n {
                    for b in a + 1..n {
                        if rng.random::<f64>() < self.params.prob_at(a, b) {
                            g.push_edge(a, b, &mut ());
                        }
                    }
                }
            }
            ResamplePath::Multigraph => {
                // Stubs of `a` landing on `b > a` are Pois(lambda_ab) per pair
                // by Poisson splitting; the rest are someone else's pairs.
                let mut buf = std::mem::take(&mut g.buf);
                for a in 0..n {
                    buf.clear();
                    for _ in 0..self.stub_count(a, rng) {
                        let b = self.endpoints.sample_index(rng);
                        if b > a {
                            buf.push(b as u32);
                        }
                    }
                    buf.sort_unstable();
                    buf.dedup();
                    for &b in &buf {
                        g.push_edge(a, b as usize, &mut ());
                    }
                }
                g.buf = buf;
            }
        }
        g
    }

    /// Vertex update at 0-based `v`: drop its edges, redraw all `N - 1`
    /// potential edges at `v` from the stationary law.
    pub fn resample_vertex<R, O>(&self, g: &mut DynGraph, v: usize, rng: &mut R, obs: &mut O)
    where
        R: Rng + ?Sized,
        O: GraphObserver + ?Sized,
    {
        g.isolate(v, obs);
        match self.path {
            ResamplePath::Bernoulli => {
                for b in 0..g.n() {
                    if b != v && rng.random::<f64>() < self.params.prob_at(v, b) {
                        g.push_edge(v, b, obs);
                    }
                }
            }
            ResamplePath::Multigraph => {
                let k = self.stub_count(v, rng);
                if k == 0 {
                    return;
                }
                let mut buf = std::mem::take(&mut g.buf);
                buf.clear();
                for _ in 0..k {
                    let b = self.endpoints.sample_index(rng);
                    if b != v {
                        buf.push(b as u32);
                    }
                }
                buf.sort_unstable();
                buf.dedup();
                for &b in &buf {
                    g.push_edge(v, b as usize, obs);
                }
                g.buf = buf;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::{chi_square_gof, Summary};

    fn params(n: usize, beta: f64, gamma: f64) -> ModelParams {
        ModelParams::with_kappa(n, beta, gamma, 1.0).unwrap()
    }

    #[test]
    fn swap_removal_bookkeeping() {
        let mut g = DynGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]);
        g.audit().unwrap();
        assert!(g.remove_edge_between(1, 2, &mut ()));
        assert!(!g.has_edge(1, 2));
        g.audit().unwrap();
        g.isolate(3, &mut ());
        assert_eq!(g.degree(3), 0);
        assert_eq!(g.edge_count(), 2);
        g.audit().unwrap();
        assert_eq!(g.insert_edge(0, 1, &mut ()), None);
        assert_eq!(g.insert_edge(2, 2, &mut ()), None);
    }

    #[test]
    fn uniform_edge_examples() {
        let mut rng = seeded(1);
        let single = DynGraph::from_edges(4, &[(1, 3)]);
        for _ in 0..100 {
            assert_eq!(single.sample_uniform_edge(&mut rng).unwrap(), (1, 3));
        }
        let path = DynGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let hits = (0..100_000)
            .filter(|_| path.sample_uniform_edge(&mut rng).unwrap() == (0, 1))
            .count();
        assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);

        let mut g = DynGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        g.remove_edge_between(1, 2, &mut ());
        for _ in 0..10_000 {
            let (a, b) = g.sample_uniform_edge(&mut rng).unwrap();
            assert_ne!((a.min(b), a.max(b)), (1, 2));
        }
        assert_eq!(
            DynGraph::empty(3).sample_uniform_edge(&mut rng),
            Err(Error::NoEdge)
        );
    }

    #[test]
    fn component_examples() {
        let e = DynGraph::empty(6).components();
        assert_eq!(e.sizes, vec![1; 6]);
        let k = DynGraph::complete(7).components();
        assert_eq!(k.sizes, vec![7]);
        let g = DynGraph::from_edges(6, &[(0, 1), (2, 3), (3, 4)]);
        let c = g.components();
        assert_eq!(c.largest_size(), 3);
        assert_eq!(c.size_of(4), 3);
        assert_eq!(g.component_size(0), 2);
        assert!((c.mean_size_seen_from_vertex() - (4.0 + 9.0 + 1.0) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn erdos_renyi_giant() {
        let law = GraphLaw::new(&params(2000, 4.0, 0.0));
        let mut rng = seeded(2);
        let big = (0..100)
            .filter(|_| {
                let c = law.sample_stationary(&mut rng).components();
                c.largest_size() as f64 / 2000.0 >= 0.9
            })
            .count();
        assert!(big >= 95, "{big}");
    }

    #[test]
    fn zero_beta_is_empty() {
        let mut rng = seeded(3);
        for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
            let law = GraphLaw::with_path(&params(30, 0.0, 0.3), path);
            let mut g = law.sample_stationary(&mut rng);
            assert_eq!(g.edge_count(), 0);
            g.insert_edge(4, 5, &mut ());
            law.resample_vertex(&mut g, 4, &mut rng, &mut ());
            assert_eq!(g.degree(4), 0);
        }
    }

    /// Exact law of the 8 graphs on 3 vertices, indexed by the bitmask over
    /// pairs (0,1), (0,2), (1,2).
    fn three_vertex_masses(p: &ModelParams) -> Vec<f64> {
        let pr = [p.prob_at(0, 1), p.prob_at(0, 2), p.prob_at(1, 2)];
        (0..8)
            .map(|m| {
                (0..3)
                    .map(|k| if m >> k & 1 == 1 { pr[k] } else { 1.0 - pr[k] })
                    .product()
            })
            .collect()
    }

    fn three_vertex_mask(g: &DynGraph) -> usize {
        [(0, 1), (0, 2), (1, 2)]
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| (g.has_edge(a, b) as usize) << k)
            .sum()
    }

    #[test]
    fn stationary_three_vertex_law() {
        let p = params(3, 1.0, 0.4);
        let exact = three_vertex_masses(&p);
        for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
            let law = GraphLaw::with_path(&p, path);
            let mut rng = seeded(4);
            let mut counts = vec![0u64; 8];
            for _ in 0..100_000 {
                counts[three_vertex_mask(&law.sample_stationary(&mut rng))] += 1;
            }
            let pv = chi_square_gof(&counts, &exact);
            assert!(pv > 0.01, "{path:?}: p = {pv}");
        }
    }

    #[test]
    fn stationary_mean_degree() {
        let p = params(40, 1.5, 0.5);
        let exact: f64 = (1..40).map(|j| p.prob_at(0, j)).sum();
        for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
            let law = GraphLaw::with_path(&p, path);
            let mut rng = seeded(5);
            let degs: Vec<f64> = (0..10_000)
                .map(|_| law.sample_stationary(&mut rng).degree(0) as f64)
                .collect();
            let s = Summary::of(&degs);
            assert!(
                (s.mean - exact).abs() < 3.0 * s.se(),
                "{path:?}: {} vs {exact}",
                s.mean
            );
        }
    }

    #[test]
    fn two_vertex_resample() {
        let p = params(2, 1.2, 0.3);
        let p12 = p.prob_at(0, 1);
        for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
            let law = GraphLaw::with_path(&p, path);
            let mut rng = seeded(6);
            let mut g = DynGraph::empty(2);
            let reps = 100_000;
            let hits = (0..reps)
                .filter(|_| {
                    law.resample_vertex(&mut g, 0, &mut rng, &mut ());
                    g.has_edge(0, 1)
                })
                .count();
            let f = hits as f64 / reps as f64;
            let se = (p12 * (1.0 - p12) / reps as f64).sqrt();
            assert!((f - p12).abs() < 3.0 * se, "{path:?}: {f} vs {p12}");
        }
    }

    #[test]
    fn resample_leaves_other_edges() {
        let law = GraphLaw::new(&params(200, 2.0, 0.3));
        let mut rng = seeded(7);
        let mut g = law.sample_stationary(&mut rng);
        let before: std::collections::BTreeSet<_> = g
            .edges()
            .filter(|&(a, b)| a != 5 && b != 5)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        law.resample_vertex(&mut g, 5, &mut rng, &mut ());
        let after: std::collections::BTreeSet<_> = g
            .edges()
            .filter(|&(a, b)| a != 5 && b != 5)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        assert_eq!(before, after);
        g.audit().unwrap();
    }

    #[test]
    fn neighbourhood_law_identical_across_paths() {
        // Vertex 0 at N = 6 has 2^5 possible neighbourhoods.
        let p = params(6, 1.5, 0.3);
        let probs: Vec<f64> = (1..6).map(|j| p.prob_at(0, j)).collect();
        let exact: Vec<f64> = (0..32)
            .map(|m: usize| {
                (0..5)
                    .map(|k| {
                        if m >> k & 1 == 1 {
                            probs[k]
                        } else {
                            1.0 - probs[k]
                        }
                    })
                    .product()
            })
            .collect();
        for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
            let law = GraphLaw::with_path(&p, path);
            let mut rng = seeded(8);
            let mut g = DynGraph::complete(6);
            let mut counts = vec![0u64; 32];
            for _ in 0..100_000 {
                law.resample_vertex(&mut g, 0, &mut rng, &mut ());
                let m: usize = g.neighbors(0).map(|j| 1 << (j - 1)).sum();
                counts[m] += 1;
            }
            let pv = chi_square_gof(&counts, &exact);
            assert!(pv > 0.01, "{path:?}: p = {pv}");
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = DynGraph::from_edges(5, &[(0, 4), (2, 1)]);
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "N 5\n1 5\n2 3\n");
        let h = DynGraph::read_edge_list(&out[..]).unwrap();
        assert!(h.has_edge(0, 4) && h.has_edge(1, 2) && h.edge_count() == 2);
        assert!(DynGraph::read_edge_list(&b"N 3\n1 9\n"[..]).is_err());
    }
}
