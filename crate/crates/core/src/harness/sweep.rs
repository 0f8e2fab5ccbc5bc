//! Replica execution across a parameter grid with deterministic seeding,
//! incremental output and resumption.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coalesce::{rho_cap, run_walkers_traced, sample_rho, WalkOutcome, WalkerSystem};
use crate::dyngraph::GraphLaw;
use crate::engine::first_full_refresh;
use crate::error::{Error, Result};
use crate::harness::checks::{check_pois_exp_dominance, multiply_occupied};
use crate::harness::config::{Experiment, Format, GridPoint, MeetingStart, SweepConfig, TreeStat};
use crate::localtree::{sample_supertree_size, sample_thinned_order, DEFAULT_NODE_CAP};
use crate::rng::{derive_seed, seeded};
use crate::voter::{init_opinions, run_voter_traced, VoterMode};

pub const CSV_HEADER: &str =
    "experiment,N,beta,gamma,kappa,alpha,u,replica,seed,outcome,truncated,events,wall_ms";

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: Experiment,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha: Option<f64>,
    pub u: f64,
    pub replica: u32,
    pub seed: u64,
    /// `inf` for runs that can never finish, `NaN` for failed replicas.
    #[serde(serialize_with = "put_float", deserialize_with = "get_float")]
    pub outcome: f64,
    pub truncated: bool,
    pub events: u64,
    pub wall_ms: f64,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.outcome.is_nan()
    }

    /// Identifies the (point, replica) pair a row belongs to.
    pub fn key(&self) -> RowKey {
        RowKey {
            experiment: self.experiment,
            n: self.n,
            bits: [
                self.beta,
                self.gamma,
                self.kappa,
                self.alpha.unwrap_or(f64::NAN),
                self.u,
            ]
            .map(f64::to_bits),
            replica: self.replica,
            seed: self.seed,
        }
    }

    /// Same row up to wall time.
    pub fn same_result(&self, other: &RunRecord) -> bool {
        let strip = |r: &RunRecord| RunRecord {
            outcome: 0.0,
            wall_ms: 0.0,
            ..r.clone()
        };
        self.outcome.to_bits() == other.outcome.to_bits() && strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowKey {
    experiment: Experiment,
    n: usize,
    bits: [u64; 5],
    replica: u32,
    seed: u64,
}

fn row_key(experiment: Experiment, p: &GridPoint, replica: u32, seed: u64) -> RowKey {
    RowKey {
        experiment,
        n: p.n,
        bits: [
            p.beta,
            p.gamma,
            p.kappa(),
            p.alpha().unwrap_or(f64::NAN),
            p.u,
        ]
        .map(f64::to_bits),
        replica,
        seed,
    }
}

// JSON has no infinities; write them as text.
fn put_float<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&x.to_string())
    }
}

fn get_float<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Float {
        Num(f64),
        Text(String),
    }
    match Float::deserialize(d)? {
        Float::Num(x) => Ok(x),
        Float::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaResult {
    pub outcome: f64,
    pub truncated: bool,
    pub events: u64,
}

/// Everything a replica needs that is shared across the point's replicas.
pub struct PointContext<'c> {
    pub config: &'c SweepConfig,
    pub point: GridPoint,
    pub law: Option<GraphLaw>,
    pub horizon: f64,
}

impl<'c> PointContext<'c> {
    pub fn new(config: &'c SweepConfig, point: GridPoint) -> Result<Self> {
        let experiment = config.grid.experiment;
        let law = if experiment.uses_graph() {
            Some(GraphLaw::new(&point.params()?))
        } else {
            None
        };
        let horizon = match config.run.horizon {
            Some(h) => h,
            None if experiment.uses_horizon() => point.default_horizon()?,
            None => f64::INFINITY,
        };
        Ok(Self {
            config,
            point,
            law,
            horizon,
        })
    }

    fn law(&self) -> &GraphLaw {
        self.law.as_ref().expect("graph experiment has a law")
    }

    /// Runs one replica from `seed`, optionally tracing events.
    pub fn run(&self, seed: u64, trace: Option<Box<dyn Write + '_>>) -> Result<ReplicaResult> {
        let mut rng = seeded(seed);
        let run = &self.config.run;
        let n = self.point.n;
        let value = |outcome: f64| ReplicaResult {
            outcome,
            truncated: false,
            events: 0,
        };
        match self.config.grid.experiment {
            Experiment::Consensus => {
                let law = self.law();
                let graph = law.sample_stationary(&mut rng);
                let state = init_opinions(law.params(), &mut rng)?;
                let out = run_voter_traced(
                    law,
                    graph,
                    state,
                    VoterMode::default(),
                    self.horizon,
                    rng,
                    trace,
                )?;
                Ok(ReplicaResult {
                    outcome: out.time,
                    truncated: out.truncated,
                    events: out.events.total(),
                })
            }
            Experiment::Coalescence => {
                let law = self.law();
                let graph = law.sample_stationary(&mut rng);
                let walkers = WalkerSystem::everywhere(&graph);
                walk_result(run_walkers_traced(
                    law,
                    graph,
                    walkers,
                    self.horizon,
                    rng,
                    trace,
                )?)
            }
            Experiment::MeetingKac => {
                let law = self.law();
                let (graph, x, y) = match run.init {
                    MeetingStart::Rho => {
                        let s = sample_rho(law, rho_cap(law.params()), &mut rng)?;
                        (s.graph, s.x, s.y)
                    }
                    MeetingStart::Stationary => {
                        let g = law.sample_stationary(&mut rng);
                        (g, rng.random_range(0..n), rng.random_range(0..n))
                    }
                };
                let walkers = WalkerSystem::new(&graph, &[x, y]);
                walk_result(run_walkers_traced(
                    law,
                    graph,
                    walkers,
                    self.horizon,
                    rng,
                    trace,
                )?)
            }
            Experiment::ComponentStats => {
                let g = self.law().sample_stationary(&mut rng);
                let v = rng.random_range(0..n);
                Ok(value(g.component_size(v) as f64))
            }
            Experiment::TreeCheck => {
                let law = self.law();
                let size = match run.tree {
                    TreeStat::Thinned => {
                        let root = rng.random_range(1..=n);
                        sample_thinned_order(root, law, &mut rng)
                    }
                    TreeStat::Component => {
                        let g = law.sample_stationary(&mut rng);
                        g.component_size(rng.random_range(0..n))
                    }
                    TreeStat::Supertree => {
                        let t = sample_supertree_size(law.params(), &mut rng, DEFAULT_NODE_CAP)?;
                        return Ok(ReplicaResult {
                            truncated: t.truncated,
                            ..value(t.size as f64)
                        });
                    }
                };
                Ok(value(size as f64))
            }
            Experiment::RefreshTime => {
                Ok(value(first_full_refresh(n, self.point.kappa(), &mut rng)?))
            }
            Experiment::Birthday => {
                let k = run
                    .birthday_k
                    .ok_or_else(|| Error::Config("birthday_k missing".into()))?;
                let mut total = 0.0;
                for _ in 0..run.trials {
                    total += multiply_occupied(k, n, &mut rng) as f64;
                }
                Ok(value(total / run.trials as f64))
            }
            Experiment::Dominance => {
                let r = check_pois_exp_dominance(run.mu, run.lambda, 0..=run.grid_max)?;
                Ok(value(r.worst_margin))
            }
        }
    }
}

fn walk_result(out: WalkOutcome) -> Result<ReplicaResult> {
    Ok(ReplicaResult {
        outcome: out.time,
        truncated: out.truncated,
        events: out.events.total(),
    })
}

fn record(
    ctx: &PointContext<'_>,
    replica: u32,
    seed: u64,
    r: ReplicaResult,
    wall_ms: f64,
) -> RunRecord {
    let p = ctx.point;
    RunRecord {
        experiment: ctx.config.grid.experiment,
        n: p.n,
        beta: p.beta,
        gamma: p.gamma,
        kappa: p.kappa(),
        alpha: p.alpha(),
        u: p.u,
        replica,
        seed,
        outcome: r.outcome,
        truncated: r.truncated,
        events: r.events,
        wall_ms,
    }
}

/// Runs one replica, turning errors and panics into a failed row.
fn guarded(
    ctx: &PointContext<'_>,
    replica: u32,
    seed: u64,
    trace: Option<Box<dyn Write + '_>>,
) -> RunRecord {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(|| ctx.run(seed, trace)));
    let r = match r {
        Ok(Ok(r)) => r,
        Ok(Err(_)) | Err(_) => ReplicaResult {
            outcome: f64::NAN,
            truncated: false,
            events: 0,
        },
    };
    record(ctx, replica, seed, r, start.elapsed().as_secs_f64() * 1e3)
}

/// Appends records to a file in either format.
pub struct RecordSink {
    format: Format,
    out: BufWriter<File>,
    header_pending: bool,
}

impl RecordSink {
    /// Opens `path` for appending, dropping a partial trailing line.
    pub fn append(path: &Path, format: Format) -> Result<Self> {
        repair_tail(path)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let header_pending = format == Format::Csv && file.metadata()?.len() == 0;
        Ok(Self {
            format,
            out: BufWriter::new(file),
            header_pending,
        })
    }

    pub fn write(&mut self, records: &[RunRecord]) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        match self.format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .has_headers(self.header_pending)
                    .from_writer(&mut self.out);
                for r in records {
                    w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
                }
                w.flush().map_err(io)?;
                self.header_pending = self.header_pending && records.is_empty();
            }
            Format::Jsonl => {
                for r in records {
                    serde_json::to_writer(&mut self.out, r)
                        .map_err(|e| Error::Io(e.to_string()))?;
                    self.out.write_all(b"\n").map_err(io)?;
                }
            }
        }
        self.out.flush().map_err(io)
    }
}

/// Cuts a file back to its last complete line.
fn repair_tail(path: &Path) -> Result<()> {
    let Ok(mut f) = File::open(path) else {
        return Ok(());
    };
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    OpenOptions::new()
        .write(true)
        .open(path)?
        .set_len(keep as u64)?;
    Ok(())
}

/// Reads records back, skipping lines that do not parse.
pub fn read_records(path: &Path, format: Format) -> Result<Vec<RunRecord>> {
    let file = File::open(path)?;
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
            Ok(rdr.deserialize().filter_map(|r| r.ok()).collect())
        }
        Format::Jsonl => Ok(BufReader::new(file)
            .lines()
            .map_while(|l| l.ok())
            .filter_map(|l| serde_json::from_str(&l).ok())
            .collect()),
    }
}

/// Guesses the format from the extension; anything but `.jsonl` is CSV.
pub fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => Format::Jsonl,
        _ => Format::Csv,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Rows produced by this call, in canonical order.
    pub records: Vec<RunRecord>,
    /// Replicas skipped because the output already held them.
    pub skipped: usize,
    pub failed: usize,
}

/// Runs every (point, replica) pair of the grid.
///
/// Rows come out in canonical (point, replica) order whatever the worker
/// count. With an output path the rows are appended chunk by chunk and
/// pairs already present in the file are skipped.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let run = &config.run;
    let points = config.points();
    let mut done = HashSet::new();
    let mut sink = match &config.output.path {
        Some(path) => {
            if path.exists() {
                done.extend(
                    read_records(path, config.output.format)?
                        .iter()
                        .map(RunRecord::key),
                );
            }
            Some(RecordSink::append(path, config.output.format)?)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let mut report = SweepReport {
        records: Vec::new(),
        skipped: 0,
        failed: 0,
    };
    let chunk = (run.workers * 4).max(16);
    for (pi, &point) in points.iter().enumerate() {
        let ctx = PointContext::new(config, point)?;
        let mut todo: Vec<(u32, u64)> = Vec::new();
        for r in 0..run.replicas {
            let seed = derive_seed(run.seed, pi as u32, r);
            if done.contains(&row_key(config.grid.experiment, &point, r, seed)) {
                report.skipped += 1;
            } else {
                todo.push((r, seed));
            }
        }
        let mut rest = &todo[..];
        if pi == 0 && todo.first().is_some_and(|&(r, _)| r == 0) {
            if let Some(path) = &run.trace {
                let trace: Box<dyn Write> = Box::new(BufWriter::new(File::create(path)?));
                let first = guarded(&ctx, 0, todo[0].1, Some(trace));
                emit(&mut report, &mut sink, vec![first])?;
                rest = &todo[1..];
            }
        }
        for batch in rest.chunks(chunk) {
            let rows: Vec<RunRecord> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&(r, seed)| guarded(&ctx, r, seed, None))
                    .collect()
            });
            emit(&mut report, &mut sink, rows)?;
        }
    }
    Ok(report)
}

fn emit(
    report: &mut SweepReport,
    sink: &mut Option<RecordSink>,
    rows: Vec<RunRecord>,
) -> Result<()> {
    if let Some(s) = sink {
        s.write(&rows)?;
    }
    report.failed += rows.iter().filter(|r| r.failed()).count();
    report.records.extend(rows);
    Ok(())
}
