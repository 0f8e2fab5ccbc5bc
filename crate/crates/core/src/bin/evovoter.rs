use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evovoter::coalesce::kac_exact;
use evovoter::dyngraph::GraphLaw;
use evovoter::harness::checks::{
    birthday_asymptotic, birthday_exact, birthday_mc, check_pois_exp_dominance,
};
use evovoter::harness::config::{MeetingStart, TreeStat};
use evovoter::harness::phase::regime_for;
use evovoter::harness::sweep::{format_of, read_records};
use evovoter::harness::{
    fit_slope, predicted_exponent, run_sweep, Experiment, Format, GridPoint, RunRecord, SweepConfig,
};
use evovoter::localtree::mean_component_closed_form;
use evovoter::rng::seeded;
use evovoter::stats::Summary;
use evovoter::{Error, UpdateRate};

#[derive(Parser)]
#[command(
    name = "evovoter",
    version,
    about = "Voter model and coalescing walks on an evolving scale-free graph"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML file with [grid], [run] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<u32>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    /// Per-vertex update rate.
    #[arg(long, conflicts_with = "alpha")]
    kappa: Option<f64>,
    /// Sets kappa = c * N^(-alpha).
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Probability of initial opinion 1.
    #[arg(long, default_value_t = 0.5)]
    u: f64,
    #[arg(long)]
    horizon: Option<f64>,
}

impl ModelArgs {
    fn point(&self) -> GridPoint {
        let rate = match (self.kappa, self.alpha) {
            (_, Some(alpha)) => UpdateRate::Scaled { c: self.c, alpha },
            (Some(k), None) => UpdateRate::Fixed(k),
            (None, None) => UpdateRate::Fixed(0.0),
        };
        GridPoint {
            n: self.n,
            beta: self.beta,
            gamma: self.gamma,
            rate,
            u: self.u,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Rho,
    Stationary,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeArg {
    Thinned,
    Supertree,
    Component,
}

#[derive(Clone, Copy, ValueEnum)]
enum BirthdayArg {
    Exact,
    Asymptotic,
    Mc,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw one stationary graph and write it as an edge list.
    SampleGraph {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Voter model from a stationary graph to consensus.
    RunVoter {
        #[command(flatten)]
        model: ModelArgs,
        /// JSONL event trace of the first replica.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Coalescing walkers from every vertex until one remains.
    RunCoalesce {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Two-walker meeting time, compared with the exact return-time formula.
    MeetKac {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "rho")]
        init: InitArg,
    },
    /// Size of a uniform vertex's component in stationary graphs.
    ComponentStats {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Thinned exploration tree or dominating branching tree sizes.
    TreeCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "thinned")]
        stat: TreeArg,
    },
    /// Time until every vertex has updated at least once.
    RefreshTime {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Occupancy of k uniform labels in N sites.
    Birthday {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: BirthdayArg,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Poisson tail against a shifted exponential tail.
    Dominance {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        from: u64,
        #[arg(long, default_value_t = 30)]
        to: u64,
    },
    /// Run the grid described by --config.
    Sweep,
    /// Log-log slope of mean outcome against N.
    Fit {
        /// CSV or JSONL records.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        experiment: Option<String>,
        /// Exit with status 3 unless every slope lies in lo:hi.
        #[arg(long)]
        assert_slope: Option<String>,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = matches!(
                e.downcast_ref::<Error>(),
                Some(
                    Error::Config(_)
                        | Error::Domain(_)
                        | Error::Index { .. }
                        | Error::Critical
                        | Error::Unresolved
                        | Error::Divergent(_)
                )
            );
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn config_for(
    common: &Common,
    experiment: Experiment,
    model: &ModelArgs,
) -> anyhow::Result<SweepConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let mut cfg = SweepConfig::load(path)?;
            cfg.grid.experiment = experiment;
            cfg
        }
        None => SweepConfig::single(experiment, model.point()),
    };
    if model.horizon.is_some() {
        cfg.run.horizon = model.horizon;
    }
    apply_common(common, &mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn apply_common(common: &Common, cfg: &mut SweepConfig) {
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(r) = common.replicas {
        cfg.run.replicas = r;
    }
    if let Some(w) = common.workers {
        cfg.run.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.output.path = Some(o.clone());
    }
    if let Some(f) = common.format {
        cfg.output.format = f.into();
    }
}

/// Runs the sweep; rows go to the output file or, without one, to stdout.
fn sweep_and_report(cfg: &SweepConfig) -> anyhow::Result<Vec<RunRecord>> {
    let report = run_sweep(cfg)?;
    if cfg.output.path.is_none() {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match cfg.output.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                for r in &report.records {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            Format::Jsonl => {
                for r in &report.records {
                    serde_json::to_writer(&mut out, r)?;
                    writeln!(out)?;
                }
            }
        }
    }
    let mut groups: BTreeMap<String, (Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in &report.records {
        let key = format!(
            "N={} beta={} gamma={} kappa={:.6} u={}",
            r.n, r.beta, r.gamma, r.kappa, r.u
        );
        let g = groups.entry(key).or_default();
        if r.truncated {
            g.1 += 1;
        } else if r.failed() {
            g.2 += 1;
        } else {
            g.0.push(r.outcome);
        }
    }
    for (key, (xs, truncated, failed)) in &groups {
        let s = Summary::of(xs);
        eprintln!(
            "{} {key}: mean {:.6} se {:.6} used {} truncated {truncated} failed {failed}",
            cfg.grid.experiment,
            s.mean,
            s.se(),
            s.n
        );
    }
    if report.skipped > 0 {
        eprintln!("skipped {} replicas already present", report.skipped);
    }
    Ok(report.records)
}

fn finite_mean(records: &[RunRecord]) -> Summary {
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| !r.truncated && r.outcome.is_finite())
        .map(|r| r.outcome)
        .collect();
    Summary::of(&xs)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let common = &cli.common;
    match cli.cmd {
        Cmd::SampleGraph { model } => {
            let params = model.point().params()?;
            let law = GraphLaw::new(&params);
            let mut rng = seeded(common.seed.unwrap_or(0));
            let g = law.sample_stationary(&mut rng);
            let comps = g.components();
            eprintln!(
                "N {} edges {} largest component {} mean component seen from a vertex {:.4}",
                g.n(),
                g.edge_count(),
                comps.largest_size(),
                comps.mean_size_seen_from_vertex()
            );
            match &common.out {
                Some(path) => {
                    let f =
                        std::fs::File::create(path).with_context(|| path.display().to_string())?;
                    g.write_edge_list(io::BufWriter::new(f))?;
                }
                None => g.write_edge_list(io::stdout().lock())?,
            }
        }
        Cmd::RunVoter { model, trace } => {
            let mut cfg = config_for(common, Experiment::Consensus, &model)?;
            cfg.run.trace = trace;
            sweep_and_report(&cfg)?;
        }
        Cmd::RunCoalesce { model, trace } => {
            let mut cfg = config_for(common, Experiment::Coalescence, &model)?;
            cfg.run.trace = trace;
            sweep_and_report(&cfg)?;
        }
        Cmd::MeetKac { model, init } => {
            let mut cfg = config_for(common, Experiment::MeetingKac, &model)?;
            cfg.run.init = match init {
                InitArg::Rho => MeetingStart::Rho,
                InitArg::Stationary => MeetingStart::Stationary,
            };
            let records = sweep_and_report(&cfg)?;
            for p in cfg.points() {
                let kac = kac_exact(&p.params()?)?;
                let rows: Vec<RunRecord> = records.iter().filter(|r| r.n == p.n).cloned().collect();
                let s = finite_mean(&rows);
                eprintln!(
                    "N={} exact {kac:.4} monte-carlo {:.4} +- {:.4} ({:+.2}%)",
                    p.n,
                    s.mean,
                    s.se(),
                    100.0 * (s.mean / kac - 1.0)
                );
            }
        }
        Cmd::ComponentStats { model } => {
            let cfg = config_for(common, Experiment::ComponentStats, &model)?;
            let records = sweep_and_report(&cfg)?;
            let s = finite_mean(&records);
            let closed = mean_component_closed_form(model.beta, model.gamma)
                .map(|x| format!("{x:.6}"))
                .unwrap_or_else(|e| e.to_string());
            eprintln!(
                "E|C| {:.6} +- {:.6}, E|C| - 1 {:.6}, closed form {closed}",
                s.mean,
                s.se(),
                s.mean - 1.0
            );
        }
        Cmd::TreeCheck { model, stat } => {
            let mut cfg = config_for(common, Experiment::TreeCheck, &model)?;
            cfg.run.tree = match stat {
                TreeArg::Thinned => TreeStat::Thinned,
                TreeArg::Supertree => TreeStat::Supertree,
                TreeArg::Component => TreeStat::Component,
            };
            cfg.validate()?;
            sweep_and_report(&cfg)?;
        }
        Cmd::RefreshTime { model } => {
            let cfg = config_for(common, Experiment::RefreshTime, &model)?;
            let records = sweep_and_report(&cfg)?;
            let p = model.point();
            let harmonic: f64 = (1..=p.n).map(|i| 1.0 / i as f64).sum();
            let s = finite_mean(&records);
            eprintln!(
                "mean {:.5} +- {:.5}, H_N / kappa = {:.5}",
                s.mean,
                s.se(),
                harmonic / p.kappa()
            );
        }
        Cmd::Birthday { k, n, mode, trials } => match mode {
            BirthdayArg::Exact => println!("P(X = 0) = {:.8}", birthday_exact(k, n)?),
            BirthdayArg::Asymptotic => println!("P(X = 0) ~ {:.8}", birthday_asymptotic(k, n)?),
            BirthdayArg::Mc => {
                let mut rng = seeded(common.seed.unwrap_or(0));
                let r = birthday_mc(k, n, trials, &mut rng)?;
                println!("trials {}", r.trials);
                println!("P(X = 0) = {:.6}", r.p_none);
                println!("P(X >= {:.4}) = {:.6}", r.threshold, r.p_many);
                println!("E X = {:.6}", r.mean);
            }
        },
        Cmd::Dominance {
            mu,
            lambda,
            from,
            to,
        } => {
            let r = check_pois_exp_dominance(mu, lambda, from..=to)?;
            println!("x,poisson_tail,bound");
            for row in &r.rows {
                println!("{},{:e},{:e}", row.x, row.poisson_tail, row.bound);
            }
            eprintln!(
                "shift {} worst margin {:e} at {:?}: {}",
                r.shift,
                r.worst_margin,
                r.worst_at,
                if r.holds() { "holds" } else { "violated" }
            );
            if !r.holds() {
                return Ok(ExitCode::from(3));
            }
        }
        Cmd::Sweep => {
            let Some(path) = &common.config else {
                return Err(Error::Config("sweep needs --config".into()).into());
            };
            let mut cfg = SweepConfig::load(path)?;
            apply_common(common, &mut cfg);
            cfg.validate()?;
            sweep_and_report(&cfg)?;
        }
        Cmd::Fit {
            input,
            experiment,
            assert_slope,
            resamples,
        } => {
            let band = assert_slope.as_deref().map(parse_band).transpose()?;
            let format = common
                .format
                .map(Format::from)
                .unwrap_or_else(|| format_of(&input));
            let mut records =
                read_records(&input, format).with_context(|| input.display().to_string())?;
            if let Some(e) = experiment {
                let e: Experiment = e.parse()?;
                records.retain(|r| r.experiment == e);
            }
            if records.is_empty() {
                bail!("no records to fit");
            }
            let mut series: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
            for r in records {
                let rate = match r.alpha {
                    Some(a) => format!("alpha={a}"),
                    None => format!("kappa={}", r.kappa),
                };
                let key = format!(
                    "{} beta={} gamma={} {rate} u={}",
                    r.experiment, r.beta, r.gamma, r.u
                );
                series.entry(key).or_default().push(r);
            }
            let mut ok = true;
            for (key, rows) in &series {
                let fit = fit_slope(rows, resamples, common.seed.unwrap_or(0))?;
                let first = &rows[0];
                // A fixed positive kappa moves through the phases as N grows.
                let predicted = if first.alpha.is_none() && first.kappa > 0.0 {
                    "n/a for fixed kappa".to_string()
                } else {
                    predicted_exponent(
                        first.beta,
                        first.gamma,
                        regime_for(first.kappa, first.alpha, first.n),
                    )
                    .map(|p| format!("{} ({})", p.exponent, p.phase))
                    .unwrap_or_else(|e| e.to_string())
                };
                println!(
                    "{key}: slope {:.4} ci [{:.4}, {:.4}] predicted {predicted}{}",
                    fit.slope,
                    fit.ci.0,
                    fit.ci.1,
                    if fit.unreliable() { " UNRELIABLE" } else { "" }
                );
                for s in &fit.sizes {
                    println!(
                        "  N={} mean {:.6} used {} truncated {} dropped {}",
                        s.n, s.mean, s.used, s.truncated, s.dropped
                    );
                }
                if let Some((lo, hi)) = band {
                    ok &= (lo..=hi).contains(&fit.slope);
                }
            }
            if !ok {
                eprintln!("slope outside asserted band");
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_band(s: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("band {s:?} is not lo:hi")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("band {s:?} is not lo:hi")))
    };
    Ok((parse(lo)?, parse(hi)?))
}
