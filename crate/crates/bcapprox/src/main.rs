//! Batch front end: estimation with guarantees, top-k identification, the
//! exact oracle, graph statistics, bound-formula evaluation, and a
//! validation harness that replays runs against the oracle.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 bad usage or a
//! parameter outside its domain, 3 wall-clock budget exhausted (output is
//! partial and flagged), 4 validation refused because the oracle would be
//! too expensive.

use std::fs::File;
use std::io::{BufReader, Write as _};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use bcapprox::bounds;
use bcapprox::engine::{self, probe_stats, resolve_diameter, RunConfig, StopReason};
use bcapprox::error::{Error, Result};
use bcapprox::graph::{brandes_exact_within, load_edge_list, Graph};
use bcapprox::sampler::SampleParams;
use bcapprox::topk::{kth_lower_bound, run_topk, TopKConfig};

#[derive(Parser)]
#[command(
    name = "bcapprox",
    version,
    about = "Betweenness centrality estimation by progressive shortest-path sampling"
)]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate every node's betweenness to additive error epsilon.
    Approx(ApproxArgs),
    /// Identify the k most central nodes to relative error eta.
    Topk(TopkArgs),
    /// Exact betweenness for every node (quadratic; small graphs only).
    Exact(ExactArgs),
    /// Graph summary: size, diameter bound, probe-sample statistics.
    Stats(StatsArgs),
    /// Print one deviation-bound formula value for given parameters.
    BoundsEval(BoundsEvalArgs),
    /// Replay seeded estimation runs against the exact oracle.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: two whitespace-separated node labels per line,
    /// '#'/'%' comments and blank lines skipped.
    #[arg(short = 'g', long)]
    graph: PathBuf,
    /// Treat edges as one-way arcs.
    #[arg(long, conflicts_with = "undirected")]
    directed: bool,
    /// Treat edges as two-way (the default).
    #[arg(long)]
    undirected: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        let file = File::open(&self.graph)?;
        load_edge_list(BufReader::new(file), self.directed)
    }
}

#[derive(Args)]
struct SamplingArgs {
    /// Rademacher trials per sample.
    #[arg(short = 'c', long, default_value_t = 25)]
    trials: usize,
    /// Missing-path-fraction target per bag; the bag multiplier is
    /// ln(1/lambda).
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Geometric base of the variance classes.
    #[arg(long, default_value_t = 2.0)]
    base_a: f64,
    /// Sample-schedule growth factor.
    #[arg(long, default_value_t = 1.2)]
    ratio: f64,
    /// Hard cap on paths per bag.
    #[arg(long, default_value_t = 65_536)]
    bag_cap: usize,
    /// Master RNG seed; everything random derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trusted vertex-diameter upper bound. Required for directed graphs:
    /// the computed directed bound is a heuristic and cannot back the
    /// guarantee.
    #[arg(long)]
    diameter_override: Option<u32>,
    /// Wall-clock budget in seconds; truncation is flagged, never silent.
    #[arg(long)]
    max_seconds: Option<f64>,
}

impl SamplingArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.trials = self.trials;
        cfg.lambda = self.lambda;
        cfg.base_a = self.base_a;
        cfg.ratio = self.ratio;
        cfg.bag_cap = self.bag_cap;
        cfg.diameter_override = self.diameter_override;
        cfg.max_seconds = self.max_seconds;
    }
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Additive accuracy target in (0,1).
    #[arg(short = 'e', long)]
    epsilon: f64,
    /// Failure probability in (0,1).
    #[arg(short = 'd', long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output prefix: report at <OUT>.json, estimates at <OUT>.csv. The
    /// report always goes to stdout as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopkArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// How many top nodes to identify.
    #[arg(short = 'k', long)]
    k: usize,
    /// Relative accuracy target in (0,1).
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Failure probability in (0,1).
    #[arg(short = 'd', long, default_value_t = 0.05)]
    delta: f64,
    /// Distinct-sample appearances per node that end the first phase.
    #[arg(long, default_value_t = 5)]
    kappa: u32,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output path for the report JSON (stdout too).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Output path for the CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Wall-clock budget in seconds; no partial output on timeout.
    #[arg(long)]
    max_seconds: Option<f64>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Failure probability for the probe's mean-path-length bound.
    #[arg(short = 'd', long, default_value_t = 0.05)]
    delta: f64,
    /// Master RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trusted vertex-diameter upper bound.
    #[arg(long)]
    diameter_override: Option<u32>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Output path for the report JSON (stdout too).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Additive accuracy target checked per run.
    #[arg(short = 'e', long, default_value_t = 0.05)]
    epsilon: f64,
    /// Failure probability; the observed failure rate is compared to it.
    #[arg(short = 'd', long, default_value_t = 0.05)]
    delta: f64,
    /// Top-k size; when present, validation checks top-k contracts instead
    /// of the additive one.
    #[arg(short = 'k', long)]
    k: Option<usize>,
    /// Relative accuracy target for top-k validation.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Seeded estimation runs to compare against the oracle.
    #[arg(long, default_value_t = 10)]
    runs: u32,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output path for the report JSON (stdout too).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsEvalArgs {
    #[command(subcommand)]
    formula: Formula,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleKind {
    Main,
    Topk,
}

#[derive(Subcommand)]
enum Formula {
    /// Bernstein variance factor g(x) = x(1-x).
    VarianceFactor {
        #[arg(long)]
        x: f64,
    },
    /// Cramer transform term h(x) = (1+x)ln(1+x) - x.
    CramerH {
        #[arg(long)]
        x: f64,
    },
    /// Rademacher-average bound from the Monte Carlo average.
    EraBound {
        #[arg(long)]
        mcera: f64,
        #[arg(long)]
        wimpy: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        log_term: f64,
    },
    /// Sup-deviation bound for one class.
    ClassDeviation {
        #[arg(long)]
        r_tilde: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        log_term: f64,
    },
    /// Upper bound on the true wimpy variance from the empirical one.
    VarianceBound {
        #[arg(long)]
        wimpy: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        log_term: f64,
    },
    /// Checkpoint log term ln(2^(i+1) * 5t/delta) (main) or
    /// ln(2^i * 5t/delta) (topk).
    ScheduleLogTerm {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        i: u32,
        #[arg(long, value_enum)]
        mode: ScheduleKind,
    },
    /// Unbiased pairwise sample variance from streamed moments.
    PairwiseVariance {
        #[arg(long)]
        sum_x: f64,
        #[arg(long)]
        sum_x2: f64,
        #[arg(long)]
        m: u64,
    },
    /// Fixed point of r(x) = u + sqrt(v + y*x).
    SqrtFixedPoint {
        #[arg(long)]
        u: f64,
        #[arg(long)]
        v: f64,
        #[arg(long)]
        y: f64,
    },
    /// Bernstein bound on the mean internal-node count (range d).
    InternalMeanBernstein {
        #[arg(long)]
        rho_tilde: f64,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Empirical-Bernstein bound on the mean internal-node count.
    InternalMeanEmpirical {
        #[arg(long)]
        rho_tilde: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        delta: f64,
    },
    /// A-priori sufficient sample size for the additive guarantee.
    SufficientSamples {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        nu_hat: f64,
        #[arg(long)]
        rho: f64,
    },
    /// Per-node deviation at estimate level b.
    NodeDeviation {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        nu_hat: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        n: usize,
    },
    /// Per-node confidence interval around an estimate (two lines:
    /// lower, upper).
    NodeCi {
        #[arg(long)]
        b_tilde: f64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        nu_hat: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        n: usize,
    },
}

/// Twelve significant digits, the fixed width of every text report.
fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

fn labeled_sorted(g: &Graph, values: &[f64]) -> Vec<(u64, f64)> {
    let mut rows: Vec<(u64, f64)> = (0..g.node_count())
        .map(|v| (g.label(v as u32), values[v]))
        .collect();
    rows.sort_by_key(|r| r.0);
    rows
}

fn csv_block(header: &str, rows: &[(u64, f64)]) -> String {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (label, value) in rows {
        out.push_str(&format!("{label},{}\n", sig12(*value)));
    }
    out
}

fn emit_json<T: Serialize>(report: &T, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Some(path) = out {
        let mut f = File::create(path.with_extension("json"))?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
    }
    println!("{text}");
    Ok(())
}

/// Directed sampling runs promise a guarantee they cannot back without a
/// trusted diameter bound.
fn guard_directed(g: &Graph, diameter_override: Option<u32>) -> Result<()> {
    if g.is_directed() && diameter_override.is_none() {
        return Err(Error::Parameter(
            "directed graphs need --diameter-override; the computed directed \
             diameter bound is a heuristic"
                .into(),
        ));
    }
    Ok(())
}

fn cmd_approx(a: &ApproxArgs) -> Result<i32> {
    let g = a.graph.load()?;
    guard_directed(&g, a.sampling.diameter_override)?;
    let mut cfg = RunConfig::new(a.epsilon, a.delta, a.sampling.seed);
    a.sampling.apply(&mut cfg);
    let mut report = engine::run(&g, &cfg)?;
    if let Some(prefix) = &a.out {
        let csv_path = prefix.with_extension("csv");
        let rows = labeled_sorted(&g, &report.estimates);
        std::fs::write(&csv_path, csv_block("node,bc_estimate", &rows))?;
        report.estimates_path = Some(csv_path.display().to_string());
    }
    emit_json(&report, a.out.as_ref())?;
    Ok(if report.guaranteed { 0 } else { 3 })
}

fn cmd_topk(a: &TopkArgs) -> Result<i32> {
    let g = a.graph.load()?;
    guard_directed(&g, a.sampling.diameter_override)?;
    let mut cfg = TopKConfig::new(a.k, a.eta, a.delta, a.sampling.seed);
    cfg.kappa = a.kappa;
    cfg.trials = a.sampling.trials;
    cfg.lambda = a.sampling.lambda;
    cfg.base_a = a.sampling.base_a;
    cfg.ratio = a.sampling.ratio;
    cfg.bag_cap = a.sampling.bag_cap;
    cfg.diameter_override = a.sampling.diameter_override;
    cfg.max_seconds = a.sampling.max_seconds;
    let result = run_topk(&g, &cfg)?;
    // Swap dense node ids for the original labels before anything is
    // written.
    let mut value = serde_json::to_value(&result)?;
    if let Some(entries) = value.get_mut("entries").and_then(|e| e.as_array_mut()) {
        for entry in entries {
            let dense = entry["node"].as_u64().unwrap() as u32;
            entry["node"] = serde_json::Value::from(g.label(dense));
        }
    }
    emit_json(&value, a.out.as_ref())?;
    Ok(if result.guaranteed { 0 } else { 3 })
}

fn cmd_exact(a: &ExactArgs) -> Result<i32> {
    let g = a.graph.load()?;
    let exact = brandes_exact_within(&g, a.max_seconds)?;
    let rows = labeled_sorted(&g, exact.values());
    let mut text = format!(
        "# exact graph={} directed={} nodes={} edges={}\n",
        a.graph.graph.display(),
        g.is_directed(),
        g.node_count(),
        g.edge_count()
    );
    text.push_str(&csv_block("node,bc", &rows));
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

#[derive(Serialize, Deserialize)]
struct StatsReport {
    graph: String,
    directed: bool,
    nodes: usize,
    edges: usize,
    diameter_bound: u32,
    diameter_heuristic: bool,
    delta: f64,
    seed: u64,
    probe: engine::ProbeStats,
    wall_time_s: f64,
}

fn cmd_stats(a: &StatsArgs) -> Result<i32> {
    const PROBE_SAMPLES: u64 = 1024;
    let start = std::time::Instant::now();
    let g = a.graph.load()?;
    let diameter = resolve_diameter(&g, a.diameter_override, 4, a.seed);
    let params = SampleParams {
        alpha: (1.0f64 / 0.1).ln(),
        bag_cap: 65_536,
        trials: 1,
    };
    let probe = probe_stats(
        &g,
        &params,
        a.delta,
        a.seed,
        PROBE_SAMPLES,
        diameter.bound,
        a.max_seconds,
    )?;
    let truncated = probe.truncated;
    let report = StatsReport {
        graph: a.graph.graph.display().to_string(),
        directed: g.is_directed(),
        nodes: g.node_count(),
        edges: g.edge_count(),
        diameter_bound: diameter.bound,
        diameter_heuristic: diameter.heuristic,
        delta: a.delta,
        seed: a.seed,
        probe,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    emit_json(&report, a.out.as_ref())?;
    Ok(if truncated { 3 } else { 0 })
}

fn cmd_bounds_eval(a: &BoundsEvalArgs) -> Result<i32> {
    match &a.formula {
        Formula::VarianceFactor { x } => println!("{}", sig12(bounds::g(*x)?)),
        Formula::CramerH { x } => println!("{}", sig12(bounds::h(*x)?)),
        Formula::EraBound {
            mcera,
            wimpy,
            trials,
            m,
            log_term,
        } => println!(
            "{}",
            sig12(bounds::era_upper_bound(*mcera, *wimpy, *trials, *m, *log_term))
        ),
        Formula::ClassDeviation {
            r_tilde,
            nu,
            m,
            log_term,
        } => println!("{}", sig12(bounds::eps_bound(*r_tilde, *nu, *m, *log_term))),
        Formula::VarianceBound { wimpy, m, log_term } => {
            println!("{}", sig12(bounds::var_upper_bound(*wimpy, *m, *log_term)))
        }
        Formula::ScheduleLogTerm { delta, t, i, mode } => {
            let mode = match mode {
                ScheduleKind::Main => bounds::ScheduleMode::Main,
                ScheduleKind::Topk => bounds::ScheduleMode::TopK,
            };
            println!("{}", sig12(bounds::schedule_log_term(*delta, *t, *i, mode)));
        }
        Formula::PairwiseVariance { sum_x, sum_x2, m } => {
            if *m < 2 {
                return Err(Error::Parameter("pairwise variance needs m >= 2".into()));
            }
            println!("{}", sig12(bounds::lambda_streaming(*sum_x, *sum_x2, *m)));
        }
        Formula::SqrtFixedPoint { u, v, y } => {
            if *u < 0.0 || *v < 0.0 || *y < 0.0 {
                return Err(Error::Parameter(
                    "fixed point needs nonnegative u, v, y".into(),
                ));
            }
            println!("{}", sig12(bounds::fixed_point(*u, *v, *y)));
        }
        Formula::InternalMeanBernstein {
            rho_tilde,
            d,
            m,
            delta,
        } => println!(
            "{}",
            sig12(bounds::rho_bound_bernstein(*rho_tilde, *d, *m, *delta)?)
        ),
        Formula::InternalMeanEmpirical {
            rho_tilde,
            lambda,
            d,
            m,
            delta,
        } => println!(
            "{}",
            sig12(bounds::rho_bound_empirical_bernstein(
                *rho_tilde, *lambda, *d, *m, *delta
            )?)
        ),
        Formula::SufficientSamples {
            epsilon,
            delta,
            nu_hat,
            rho,
        } => println!(
            "{}",
            bounds::sufficient_samples(*epsilon, *delta, *nu_hat, *rho)?
        ),
        Formula::NodeDeviation {
            b,
            m,
            delta,
            nu_hat,
            rho,
            n,
        } => {
            let p = bounds::DeviationParams {
                m: *m,
                delta: *delta,
                nu_hat: *nu_hat,
                rho: *rho,
                n: *n,
            };
            println!("{}", sig12(bounds::relative_deviation(*b, &p)));
        }
        Formula::NodeCi {
            b_tilde,
            m,
            delta,
            nu_hat,
            rho,
            n,
        } => {
            let p = bounds::DeviationParams {
                m: *m,
                delta: *delta,
                nu_hat: *nu_hat,
                rho: *rho,
                n: *n,
            };
            let (lower, upper) = bounds::invert_ci(*b_tilde, &p);
            println!("{}", sig12(lower));
            println!("{}", sig12(upper));
        }
    }
    Ok(0)
}

#[derive(Serialize, Deserialize)]
struct ApproxRunCheck {
    run: u32,
    seed: u64,
    guaranteed: bool,
    stop_reason: StopReason,
    m_final: u64,
    sup_deviation: f64,
    within_epsilon: bool,
}

#[derive(Serialize, Deserialize)]
struct TopkRunCheck {
    run: u32,
    seed: u64,
    guaranteed: bool,
    m_final: u64,
    /// Every true top-k node (ties included) was reported.
    containment: bool,
    /// Every reported estimate is within relative error eta of the truth.
    relative_error: bool,
    /// Every reported extra node is near-tied with the k-th true value.
    near_tie_floor: bool,
}

#[derive(Serialize, Deserialize)]
struct ValidateReport {
    mode: String,
    graph: String,
    nodes: usize,
    edges: usize,
    oracle_seconds: f64,
    epsilon: f64,
    delta: f64,
    k: Option<usize>,
    eta: Option<f64>,
    runs_requested: u32,
    /// True when the wall-clock budget stopped the run loop early.
    truncated: bool,
    approx_runs: Vec<ApproxRunCheck>,
    topk_runs: Vec<TopkRunCheck>,
    guaranteed_runs: u32,
    failures: u32,
    failure_rate: f64,
    config: serde_json::Value,
    wall_time_s: f64,
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32> {
    let start = std::time::Instant::now();
    let g = a.graph.load()?;
    let n = g.node_count();
    if n > 100_000 {
        eprintln!("refusing to validate: exact oracle on {n} nodes is too expensive");
        return Ok(4);
    }
    if n > 10_000 {
        eprintln!("warning: exact oracle on {n} nodes may take a while");
    }
    guard_directed(&g, a.sampling.diameter_override)?;
    let exact = match brandes_exact_within(&g, a.sampling.max_seconds) {
        Ok(map) => map,
        Err(Error::Budget(msg)) => {
            eprintln!("oracle ran out of budget: {msg}");
            return Ok(4);
        }
        Err(e) => return Err(e),
    };
    let oracle_seconds = start.elapsed().as_secs_f64();
    let remaining = |spent: f64| -> Option<f64> {
        a.sampling.max_seconds.map(|limit| (limit - spent).max(0.0))
    };

    let mut report = ValidateReport {
        mode: if a.k.is_some() { "topk" } else { "approx" }.into(),
        graph: a.graph.graph.display().to_string(),
        nodes: n,
        edges: g.edge_count(),
        oracle_seconds,
        epsilon: a.epsilon,
        delta: a.delta,
        k: a.k,
        eta: a.k.map(|_| a.eta),
        runs_requested: a.runs,
        truncated: false,
        approx_runs: Vec::new(),
        topk_runs: Vec::new(),
        guaranteed_runs: 0,
        failures: 0,
        failure_rate: 0.0,
        config: serde_json::Value::Null,
        wall_time_s: 0.0,
    };

    match a.k {
        None => {
            for r in 0..a.runs {
                let spent = start.elapsed().as_secs_f64();
                if matches!(a.sampling.max_seconds, Some(limit) if spent >= limit) {
                    report.truncated = true;
                    break;
                }
                let mut cfg = RunConfig::new(a.epsilon, a.delta, a.sampling.seed + r as u64);
                a.sampling.apply(&mut cfg);
                cfg.max_seconds = remaining(spent);
                if r == 0 {
                    report.config = serde_json::to_value(&cfg)?;
                }
                let rep = engine::run(&g, &cfg)?;
                let sup_deviation = rep
                    .estimates
                    .iter()
                    .zip(exact.values())
                    .map(|(est, tru)| (est - tru).abs())
                    .fold(0.0f64, f64::max);
                let within = sup_deviation <= a.epsilon;
                if rep.guaranteed {
                    report.guaranteed_runs += 1;
                    if !within {
                        report.failures += 1;
                    }
                }
                report.approx_runs.push(ApproxRunCheck {
                    run: r,
                    seed: cfg.seed,
                    guaranteed: rep.guaranteed,
                    stop_reason: rep.stop_reason,
                    m_final: rep.m_final,
                    sup_deviation,
                    within_epsilon: within,
                });
            }
        }
        Some(k) => {
            if k == 0 || k >= n {
                return Err(Error::Parameter(format!(
                    "k must be in [1, n-1], got k={k} with n={n}"
                )));
            }
            for r in 0..a.runs {
                let spent = start.elapsed().as_secs_f64();
                if matches!(a.sampling.max_seconds, Some(limit) if spent >= limit) {
                    report.truncated = true;
                    break;
                }
                let mut cfg = TopKConfig::new(k, a.eta, a.delta, a.sampling.seed + r as u64);
                cfg.trials = a.sampling.trials;
                cfg.lambda = a.sampling.lambda;
                cfg.base_a = a.sampling.base_a;
                cfg.ratio = a.sampling.ratio;
                cfg.bag_cap = a.sampling.bag_cap;
                cfg.diameter_override = a.sampling.diameter_override;
                cfg.max_seconds = remaining(spent);
                if r == 0 {
                    report.config = serde_json::to_value(&cfg)?;
                }
                let res = run_topk(&g, &cfg)?;
                let checks = check_topk(&res.entries, exact.values(), k, a.eta);
                if res.guaranteed {
                    report.guaranteed_runs += 1;
                    if !(checks.0 && checks.1 && checks.2) {
                        report.failures += 1;
                    }
                }
                report.topk_runs.push(TopkRunCheck {
                    run: r,
                    seed: cfg.seed,
                    guaranteed: res.guaranteed,
                    m_final: res.m_final,
                    containment: checks.0,
                    relative_error: checks.1,
                    near_tie_floor: checks.2,
                });
            }
        }
    }
    report.failure_rate = if report.guaranteed_runs > 0 {
        report.failures as f64 / report.guaranteed_runs as f64
    } else {
        0.0
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    let truncated = report.truncated;
    emit_json(&report, a.out.as_ref())?;
    Ok(if truncated { 3 } else { 0 })
}

/// The three reported-set contracts, checked against exact values:
/// containment of the true top-k (ties included), per-entry relative error,
/// and the near-tie floor for extra entries.
fn check_topk(
    entries: &[bcapprox::topk::TopKEntry],
    exact: &[f64],
    k: usize,
    eta: f64,
) -> (bool, bool, bool) {
    const TIE_EPS: f64 = 1e-12;
    let bk = kth_lower_bound(exact, k);
    let reported: std::collections::HashSet<u32> = entries.iter().map(|e| e.node).collect();
    let containment = (0..exact.len() as u32)
        .filter(|&v| exact[v as usize] >= bk - TIE_EPS)
        .all(|v| reported.contains(&v));
    let relative_error = entries
        .iter()
        .all(|e| (exact[e.node as usize] - e.estimate).abs() <= eta * exact[e.node as usize]);
    let floor = bk * ((1.0 - eta) / (1.0 + eta)).powi(2);
    let near_tie_floor = entries
        .iter()
        .all(|e| exact[e.node as usize] >= floor - TIE_EPS);
    (containment, relative_error, near_tie_floor)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::EmptyGraph
        | Error::Io(_)
        | Error::Serde(_)
        | Error::Integrity(_) => 1,
        Error::Parameter(_) | Error::DegenerateGraph(_) => 2,
        Error::Budget(_) => 3,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .ok();
    }
    let outcome = match &cli.cmd {
        Cmd::Approx(a) => cmd_approx(a),
        Cmd::Topk(a) => cmd_topk(a),
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::BoundsEval(a) => cmd_bounds_eval(a),
        Cmd::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
