use proptest::prelude::*;

use evovoter::coalesce::{run_coalescence, WalkerSystem};
use evovoter::dyngraph::{DynGraph, GraphLaw, ResamplePath};
use evovoter::engine::{Engine, EventKind, Idle, Layer};
use evovoter::fenwick::Fenwick;
use evovoter::harness::{run_sweep, Experiment, GridPoint, SweepConfig};
use evovoter::model::{ModelParams, UpdateRate};
use evovoter::rng::{derive_seed, seeded};
use evovoter::stats::chi_square_gof;
use evovoter::voter::{run_to_consensus, VoterLayer, VoterMode, VoterState};

fn recount_discordant(g: &DynGraph, s: &VoterState) -> usize {
    g.edges()
        .filter(|&(a, b)| s.opinion(a) != s.opinion(b))
        .count()
}

#[test]
fn graph_stays_consistent_under_voter_events() {
    let p = ModelParams::with_kappa(60, 1.2, 0.3, 0.4).unwrap();
    for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
        let law = GraphLaw::with_path(&p, path);
        let mut rng = seeded(1);
        let g = law.sample_stationary(&mut rng);
        let s = VoterState::bernoulli(60, 0.5, &mut rng).unwrap();
        let layer = VoterLayer::new(&g, s, VoterMode::Uniform);
        let mut e = Engine::new(&law, g, layer, rng).with_audit_every(1);
        for k in 0..10_000 {
            e.step().unwrap();
            if k % 97 == 0 {
                e.graph.audit().unwrap();
                let d = recount_discordant(&e.graph, e.layer.state());
                assert_eq!(d, e.layer.discordant_edges());
            }
        }
        e.graph.audit().unwrap();
    }
}

#[test]
fn graph_stays_consistent_under_walker_events() {
    let p = ModelParams::with_kappa(60, 1.5, 0.3, 2.0).unwrap();
    let law = GraphLaw::new(&p);
    let mut rng = seeded(2);
    let g = law.sample_stationary(&mut rng);
    let w = WalkerSystem::everywhere(&g);
    let mut e = Engine::new(&law, g, w, rng).with_audit_every(1);
    let mut groups = e.layer.live_groups();
    for _ in 0..10_000 {
        let ev = e.step().unwrap();
        e.graph.audit().unwrap();
        let now = e.layer.live_groups();
        assert!(now <= groups);
        if !matches!(ev.kind, EventKind::WalkerJump { .. }) {
            assert_eq!(now, groups);
        }
        groups = now;
        let expected: usize = e.layer.occupied_sites().map(|s| e.graph.degree(s)).sum();
        assert_eq!(e.layer.total_walker_rate() as usize, expected);
        if groups == 1 {
            break;
        }
    }
}

#[test]
fn resampling_preserves_the_stationary_law() {
    // Exact law of all eight graphs on three vertices.
    let p = ModelParams::with_kappa(3, 1.0, 0.4, 1.0).unwrap();
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let pr: Vec<f64> = pairs.iter().map(|&(a, b)| p.prob_at(a, b)).collect();
    let exact: Vec<f64> = (0..8)
        .map(|m| {
            (0..3)
                .map(|k| if m >> k & 1 == 1 { pr[k] } else { 1.0 - pr[k] })
                .product()
        })
        .collect();
    for path in [ResamplePath::Bernoulli, ResamplePath::Multigraph] {
        let law = GraphLaw::with_path(&p, path);
        let mut rng = seeded(3);
        let mut counts = vec![0u64; 8];
        for _ in 0..20_000 {
            let mut g = law.sample_stationary(&mut rng);
            for _ in 0..1_000 {
                let v = rand::Rng::random_range(&mut rng, 0..3);
                law.resample_vertex(&mut g, v, &mut rng, &mut ());
            }
            let m: usize = (0..3)
                .map(|k| (g.has_edge(pairs[k].0, pairs[k].1) as usize) << k)
                .sum();
            counts[m] += 1;
        }
        let pv = chi_square_gof(&counts, &exact);
        assert!(pv > 0.01, "{path:?}: p = {pv}");
    }
}

#[test]
fn stationary_graph_idles_consistently() {
    let p = ModelParams::with_kappa(40, 2.0, 0.5, 1.0).unwrap();
    let law = GraphLaw::new(&p);
    let mut rng = seeded(4);
    let g = law.sample_stationary(&mut rng);
    let mut e = Engine::new(&law, g, Idle, rng);
    for _ in 0..10_000 {
        e.step().unwrap();
    }
    e.graph.audit().unwrap();
    assert_eq!(e.clock().counts.updates, 10_000);
}

#[test]
fn same_seed_same_output() {
    let p = ModelParams::with_kappa(50, 0.8, 0.2, 0.2).unwrap();
    let law = GraphLaw::new(&p);
    let a = run_to_consensus(&law, 1e9, seeded(9)).unwrap();
    let b = run_to_consensus(&law, 1e9, seeded(9)).unwrap();
    assert_eq!(a, b);
    let c = run_to_consensus(&law, 1e9, seeded(10)).unwrap();
    assert_ne!(a.time, c.time);
    let a = run_coalescence(&law, 1e9, seeded(9)).unwrap();
    let b = run_coalescence(&law, 1e9, seeded(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweeps_are_deterministic_and_worker_invariant() {
    let mut cfg = SweepConfig::single(
        Experiment::Consensus,
        GridPoint {
            n: 30,
            beta: 0.8,
            gamma: 0.2,
            rate: UpdateRate::Scaled { c: 1.0, alpha: 0.5 },
            u: 0.5,
        },
    );
    cfg.grid.n = vec![20, 30, 40];
    cfg.run.replicas = 12;
    cfg.run.seed = 5;
    let one = run_sweep(&cfg).unwrap().records;
    let again = run_sweep(&cfg).unwrap().records;
    cfg.run.workers = 8;
    let eight = run_sweep(&cfg).unwrap().records;
    assert_eq!(one.len(), 36);
    for ((a, b), c) in one.iter().zip(&again).zip(&eight) {
        assert!(a.same_result(b));
        assert!(a.same_result(c));
    }
    // Seeds are distinct across the whole grid.
    let mut seeds: Vec<u64> = one.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 36);
}

#[test]
fn consensus_is_absorbing() {
    let p = ModelParams::with_kappa(30, 1.0, 0.2, 0.5).unwrap();
    let law = GraphLaw::new(&p);
    let mut rng = seeded(6);
    let g = law.sample_stationary(&mut rng);
    for mode in [VoterMode::Uniform, VoterMode::Discordant] {
        let s = VoterState::from_opinions(vec![true; 30]);
        let layer = VoterLayer::new(&g, s, mode);
        let mut e = Engine::new(&law, g.clone(), layer, seeded(7));
        for _ in 0..5_000 {
            e.step().unwrap();
            assert_eq!(e.layer.state().ones(), 30);
            assert_eq!(e.layer.discordant_edges(), 0);
        }
        if mode == VoterMode::Discordant {
            assert_eq!(e.layer.rate(&e.graph), 0.0);
        }
    }
    // Run to consensus, then keep going: the winner never changes.
    let mut rng = seeded(8);
    let g = law.sample_stationary(&mut rng);
    let s = VoterState::bernoulli(30, 0.5, &mut rng).unwrap();
    let layer = VoterLayer::new(&g, s, VoterMode::Uniform);
    let mut e = Engine::new(&law, g, layer, rng);
    e.run_until(|_, l: &VoterLayer| l.state().is_consensus(), 1e9)
        .unwrap();
    let ones = e.layer.state().ones();
    assert!(ones == 0 || ones == 30);
    for _ in 0..5_000 {
        e.step().unwrap();
        assert_eq!(e.layer.state().ones(), ones);
    }
}

#[test]
fn coalescence_keeps_lowest_index() {
    let p = ModelParams::with_kappa(25, 1.5, 0.2, 1.0).unwrap();
    let law = GraphLaw::new(&p);
    for r in 0..20 {
        let out = run_coalescence(&law, 1e9, seeded(derive_seed(11, 0, r))).unwrap();
        assert_eq!(out.final_group, Some(0));
    }
}

#[derive(Debug, Clone)]
enum Op {
    Insert(usize, usize),
    Remove(usize),
    Update(usize),
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..n, 0..n).prop_map(|(a, b)| Op::Insert(a, b)),
        (0..1000usize).prop_map(Op::Remove),
        (0..n).prop_map(Op::Update),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn edge_store_matches_a_set(ops in prop::collection::vec(op(8), 0..200)) {
        let p = ModelParams::with_kappa(8, 2.0, 0.3, 1.0).unwrap();
        let law = GraphLaw::new(&p);
        let mut rng = seeded(1);
        let mut g = DynGraph::empty(8);
        let mut truth = std::collections::BTreeSet::new();
        for o in ops {
            match o {
                Op::Insert(a, b) => {
                    g.insert_edge(a, b, &mut ());
                    if a != b {
                        truth.insert((a.min(b), a.max(b)));
                    }
                }
                Op::Remove(k) => {
                    if g.edge_count() > 0 {
                        let id = k % g.edge_count();
                        let (a, b) = g.edge(id);
                        g.remove_edge(id, &mut ());
                        truth.remove(&(a.min(b), a.max(b)));
                    }
                }
                Op::Update(v) => {
                    law.resample_vertex(&mut g, v, &mut rng, &mut ());
                    truth.retain(|&(a, b)| a != v && b != v);
                    for w in g.neighbors(v).collect::<Vec<_>>() {
                        truth.insert((v.min(w), v.max(w)));
                    }
                }
            }
            prop_assert!(g.audit().is_ok());
        }
        let got: std::collections::BTreeSet<_> =
            g.edges().map(|(a, b)| (a.min(b), a.max(b))).collect();
        prop_assert_eq!(got, truth);
        let degrees: usize = (0..8).map(|v| g.degree(v)).sum();
        prop_assert_eq!(degrees, 2 * g.edge_count());
    }

    #[test]
    fn voter_layer_tracks_discordance(
        opinions in prop::collection::vec(any::<bool>(), 12),
        steps in prop::collection::vec((0..12usize, 0..12usize, any::<bool>()), 0..100),
    ) {
        let p = ModelParams::with_kappa(12, 2.0, 0.2, 1.0).unwrap();
        let law = GraphLaw::new(&p);
        let mut rng = seeded(2);
        let mut g = law.sample_stationary(&mut rng);
        let mut layer = VoterLayer::new(&g, VoterState::from_opinions(opinions), VoterMode::Discordant);
        for (i, j, update) in steps {
            if update {
                law.resample_vertex(&mut g, i, &mut rng, &mut layer);
            } else if g.has_edge(i, j) {
                layer.apply_voter_event(&g, i, j);
            }
            prop_assert_eq!(layer.discordant_edges(), recount_discordant(&g, layer.state()));
            prop_assert_eq!(layer.rate(&g), layer.recompute_rate(&g));
        }
    }

    #[test]
    fn walker_groups_never_grow(starts in prop::collection::vec(0..15usize, 1..15), seed in any::<u64>()) {
        let p = ModelParams::with_kappa(15, 1.5, 0.2, 1.0).unwrap();
        let law = GraphLaw::new(&p);
        let mut rng = seeded(seed);
        let g = law.sample_stationary(&mut rng);
        let w = WalkerSystem::new(&g, &starts);
        let mut distinct = starts.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(w.live_groups(), distinct.len());
        let mut e = Engine::new(&law, g, w, rng);
        let mut before = e.layer.live_groups();
        for _ in 0..300 {
            e.step().unwrap();
            let now = e.layer.live_groups();
            prop_assert!(now <= before);
            before = now;
            for k in 0..starts.len() {
                let grp = e.layer.group_of(k);
                let pos = e.layer.position_of_group(grp);
                prop_assert_eq!(e.layer.occupant(pos), Some(grp));
                prop_assert!(grp <= k);
            }
        }
    }

    #[test]
    fn fenwick_matches_prefix_sums(weights in prop::collection::vec(0..50i64, 1..40), r in any::<u32>()) {
        let mut f = Fenwick::new(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            f.add(i, w);
        }
        let total: i64 = weights.iter().sum();
        prop_assert_eq!(f.total(), total);
        if total > 0 {
            let target = r as i64 % total;
            let i = f.find(target);
            let before: i64 = weights[..i].iter().sum();
            prop_assert!(before <= target && target < before + weights[i]);
        }
    }

    #[test]
    fn seeds_are_injective(base in any::<u64>(), a in any::<(u32, u32)>(), b in any::<(u32, u32)>()) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(base, a.0, a.1), derive_seed(base, b.0, b.1));
    }
}
