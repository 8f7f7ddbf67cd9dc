//! Progressive sampling engine with an additive sup-deviation guarantee.
//!
//! Run outline:
//!
//! 1. Draw an independent first-phase sample S' of `ceil(ln(1/delta)/eps)`
//!    path bags. From S' alone: the variance partition (frozen), a bound on
//!    the mean internal-node count, a wimpy-variance bound `nu_hat`, and the
//!    a-priori sufficient size `m_hat`. Half the failure budget is reserved
//!    here, split evenly across those three bounds.
//! 2. Grow a fresh main sample geometrically (factor `ratio`, capped at
//!    `m_hat`), starting from the smallest size whose deviation bound could
//!    reach `eps` with a zero Rademacher average. At each checkpoint the
//!    per-class deviation bounds use `L_i = ln(2^(i+1) * 5 * t / delta)`,
//!    which spends the remaining half budget as a geometric series.
//! 3. Stop when every class bound is at most `eps`, or at `m_hat` samples,
//!    whichever comes first. Either way, with probability at least
//!    `1 - delta` every node estimate is within `eps` of its true value.
//!
//! S' is never merged into the main sample. Sample i of each phase is drawn
//! from its own RNG stream, so runs are reproducible; records are ingested
//! in stream order, which makes results independent of worker scheduling.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    era_upper_bound, eps_bound, rho_bound_empirical_bernstein, schedule_log_term,
    sufficient_samples, var_upper_bound, ScheduleMode,
};
use crate::error::{Error, Result};
use crate::estimator::{build_partition, EstimatorState, Partition};
use crate::graph::{vertex_diameter_upper_bound, DiameterBound, Graph};
use crate::sampler::{
    draw_sample_with, stream_rng, SampleParams, SampleRecord, SearchWorkspace, DIAMETER_STREAM,
    PHASE1_STREAM_BASE,
};

/// Tunables for one engine run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Rademacher trials per sample (the Monte Carlo `c`).
    pub trials: usize,
    /// Missing-path-fraction target; the bag multiplier is `ln(1/lambda)`.
    pub lambda: f64,
    /// Geometric base of the variance classes.
    pub base_a: f64,
    /// Sample-schedule growth factor.
    pub ratio: f64,
    /// Hard cap on paths per bag.
    pub bag_cap: usize,
    pub seed: u64,
    /// Double-sweep attempts for the diameter bound.
    pub diameter_pivots: usize,
    /// Trusted externally supplied vertex-diameter bound; wins over the
    /// computed one.
    pub diameter_override: Option<u32>,
    /// Wall-clock budget; exceeding it yields a partial, non-guaranteed
    /// report.
    pub max_seconds: Option<f64>,
}

impl RunConfig {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Self {
        RunConfig {
            epsilon,
            delta,
            trials: 25,
            lambda: 0.1,
            base_a: 2.0,
            ratio: 1.2,
            bag_cap: 65_536,
            seed,
            diameter_pivots: 4,
            diameter_override: None,
            max_seconds: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!(
                "delta must be in (0,1), got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Parameter(format!(
                "lambda must be in (0,1), got {}",
                self.lambda
            )));
        }
        if !(self.base_a > 1.0) {
            return Err(Error::Parameter(format!(
                "base-a must exceed 1, got {}",
                self.base_a
            )));
        }
        if !(self.ratio > 1.0) {
            return Err(Error::Parameter(format!(
                "ratio must exceed 1, got {}",
                self.ratio
            )));
        }
        if self.bag_cap == 0 {
            return Err(Error::Parameter("bag-cap must be positive".into()));
        }
        Ok(())
    }

    pub fn sample_params(&self) -> SampleParams {
        SampleParams {
            alpha: (1.0 / self.lambda).ln(),
            bag_cap: self.bag_cap,
            trials: self.trials,
        }
    }
}

/// Why the run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every class deviation bound reached the target.
    EpsMet,
    /// The a-priori sufficient size was reached.
    MhatReached,
    /// Wall-clock budget exhausted; the report is partial.
    BudgetExceeded,
}

/// Summary of the loaded graph as used by the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub directed: bool,
    pub diameter_bound: u32,
    /// True when the bound came from the directed heuristic (or an
    /// override on a directed graph) rather than the guaranteed
    /// double-sweep bound.
    pub diameter_heuristic: bool,
}

/// Per-class bound snapshot at a checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: usize,
    pub mcera: f64,
    pub wimpy: f64,
    pub nu: f64,
    pub eps: f64,
}

/// One schedule checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationReport {
    pub i: u32,
    pub m_i: u64,
    pub per_class: Vec<ClassReport>,
}

/// Full run description; serializes to the report JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub graph_stats: GraphStats,
    pub m_prime: u64,
    pub rho_tilde: f64,
    pub rho: f64,
    pub nu_hat: f64,
    pub m_hat: u64,
    pub m_start: u64,
    pub iterations: Vec<IterationReport>,
    pub m_final: u64,
    pub stop_reason: StopReason,
    /// False only for budget-truncated runs.
    pub guaranteed: bool,
    pub max_eps: f64,
    pub estimates_path: Option<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub estimates: Vec<f64>,
}

/// Smallest m whose deviation bound with a zero Rademacher average could
/// reach `epsilon` at the first checkpoint (binary search over [1, 2^40]).
pub fn schedule_start(epsilon: f64, nu_hat: f64, t: usize, delta: f64) -> u64 {
    let l1 = schedule_log_term(delta, t, 1, ScheduleMode::Main);
    let mut lo = 1u64;
    let mut hi = 1u64 << 40;
    if eps_bound(0.0, nu_hat, hi, l1) > epsilon {
        return hi;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if eps_bound(0.0, nu_hat, mid, l1) <= epsilon {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Next checkpoint size: grow by `ratio`, always progress, cap at `m_hat`.
pub fn next_m(m_prev: u64, ratio: f64, m_hat: u64) -> u64 {
    let grown = (ratio * m_prev as f64).ceil() as u64;
    grown.max(m_prev + 1).min(m_hat)
}

pub(crate) struct Deadline {
    start: Instant,
    limit: Option<f64>,
}

impl Deadline {
    pub(crate) fn new(limit: Option<f64>) -> Self {
        Deadline {
            start: Instant::now(),
            limit,
        }
    }

    pub(crate) fn exceeded(&self) -> bool {
        match self.limit {
            Some(s) => self.start.elapsed().as_secs_f64() > s,
            None => false,
        }
    }

    pub(crate) fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

pub(crate) const INGEST_BATCH: u64 = 4096;

/// Generate records for streams [start, start+count) in order, in parallel.
pub(crate) fn draw_batch(
    g: &Graph,
    params: &SampleParams,
    master_seed: u64,
    start_stream: u64,
    count: u64,
) -> Vec<SampleRecord> {
    (0..count)
        .into_par_iter()
        .map_init(
            || SearchWorkspace::new(g.node_count()),
            |ws, k| draw_sample_with(g, params, master_seed, start_stream + k, ws),
        )
        .collect()
}

/// Ingest `count` fresh samples starting at the given stream id. Returns
/// false if the deadline was hit before finishing.
pub(crate) fn ingest_range(
    g: &Graph,
    params: &SampleParams,
    master_seed: u64,
    base_stream: u64,
    start: u64,
    count: u64,
    est: &mut EstimatorState,
    deadline: &Deadline,
) -> Result<bool> {
    let mut done = 0u64;
    while done < count {
        if deadline.exceeded() {
            return Ok(false);
        }
        let chunk = (count - done).min(INGEST_BATCH);
        let records = draw_batch(g, params, master_seed, base_stream + start + done, chunk);
        for rec in &records {
            est.ingest_record(rec)?;
        }
        done += chunk;
    }
    Ok(true)
}

/// Vertex-diameter bound as a run would use it: an explicit override wins,
/// otherwise the bound is computed from its own RNG stream. An override on
/// a directed graph still counts as heuristic because its validity rests on
/// the caller.
pub fn resolve_diameter(g: &Graph, cfg_override: Option<u32>, pivots: usize, seed: u64) -> DiameterBound {
    match cfg_override {
        Some(d) => DiameterBound {
            bound: d,
            heuristic: g.is_directed(),
        },
        None => {
            let mut rng = stream_rng(seed, DIAMETER_STREAM);
            vertex_diameter_upper_bound(g, pivots, &mut rng)
        }
    }
}

/// Probe-sample summary used by graph statistics reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeStats {
    pub samples: u64,
    /// True when the wall-clock budget cut the probe short.
    pub truncated: bool,
    /// Sampled mean internal-node count of a random shortest path.
    pub rho_tilde: f64,
    /// Empirical-Bernstein upper bound on the true mean, tightened by the
    /// diameter bound; absent when fewer than two samples were drawn.
    pub rho_bound: Option<f64>,
    /// Largest single-node estimate in the probe.
    pub max_estimate: f64,
}

/// Draw up to `target` samples on the probe stream range and summarize them.
pub fn probe_stats(
    g: &Graph,
    params: &SampleParams,
    delta: f64,
    seed: u64,
    target: u64,
    d_ub: u32,
    max_seconds: Option<f64>,
) -> Result<ProbeStats> {
    if g.node_count() < 2 {
        return Err(Error::DegenerateGraph(
            "probe sampling needs at least two nodes".into(),
        ));
    }
    let deadline = Deadline::new(max_seconds);
    let mut est = EstimatorState::new(g.node_count(), params.trials);
    let finished = ingest_range(
        g,
        params,
        seed,
        crate::sampler::PROBE_STREAM_BASE,
        0,
        target.max(1),
        &mut est,
        &deadline,
    )?;
    let m = est.sample_count();
    let rho_tilde = est.rho_tilde();
    let rho_bound = if m >= 2 {
        let (sum_x, sum_x2) = est.x_moments();
        let lambda = crate::bounds::lambda_streaming(sum_x, sum_x2, m);
        let bound = rho_bound_empirical_bernstein(rho_tilde, lambda, d_ub, m, delta)?;
        Some(bound.min(d_ub as f64))
    } else {
        None
    };
    let max_estimate = est.estimates().iter().cloned().fold(0.0, f64::max);
    Ok(ProbeStats {
        samples: m,
        truncated: !finished,
        rho_tilde,
        rho_bound,
        max_estimate,
    })
}

struct ClassBoundsOut {
    per_class: Vec<ClassReport>,
    max_eps: f64,
}

fn class_bounds(est: &EstimatorState, part: &Partition, trials: usize, l_i: f64) -> ClassBoundsOut {
    // A budget stop can land here with zero samples; the bounds then come
    // out huge, which is the honest answer.
    let m = est.sample_count().max(1);
    let mcera = est.mcera_per_class(part);
    let wimpy = est.wimpy_per_class(part);
    let mut per_class = Vec::with_capacity(part.class_count());
    let mut max_eps = 0.0f64;
    for j in 0..part.class_count() {
        let r_tilde = era_upper_bound(mcera[j], wimpy[j], trials, m, l_i);
        let nu = var_upper_bound(wimpy[j], m, l_i);
        let eps = eps_bound(r_tilde, nu, m, l_i);
        max_eps = max_eps.max(eps);
        per_class.push(ClassReport {
            class: j,
            mcera: mcera[j],
            wimpy: wimpy[j],
            nu,
            eps,
        });
    }
    ClassBoundsOut { per_class, max_eps }
}

/// Run the progressive estimator. On success, with probability at least
/// `1 - delta`, every per-node estimate is within `epsilon` of the true
/// betweenness.
pub fn run(g: &Graph, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let n = g.node_count();
    if n < 2 {
        return Err(Error::DegenerateGraph(
            "estimation needs at least two nodes".into(),
        ));
    }
    let deadline = Deadline::new(cfg.max_seconds);
    let params = cfg.sample_params();

    let diameter = resolve_diameter(g, cfg.diameter_override, cfg.diameter_pivots, cfg.seed);
    let graph_stats = GraphStats {
        nodes: n,
        edges: g.edge_count(),
        directed: g.is_directed(),
        diameter_bound: diameter.bound,
        diameter_heuristic: diameter.heuristic,
    };

    // Phase 1: independent sample S' (at least 2 samples so the pairwise
    // variance below is defined).
    let m_prime = (((1.0 / cfg.delta).ln() / cfg.epsilon).ceil() as u64).max(2);
    let mut phase1 = EstimatorState::new(n, cfg.trials);
    let finished = ingest_range(
        g,
        &params,
        cfg.seed,
        PHASE1_STREAM_BASE,
        0,
        m_prime,
        &mut phase1,
        &deadline,
    )?;
    if !finished {
        return Err(Error::Budget(
            "wall clock ran out during the first phase; nothing to report".into(),
        ));
    }

    // Budget split: delta/2 for the checkpoint series, delta/6 each for the
    // average-internal-count bound, the variance bound, and m_hat itself.
    let delta_part = cfg.delta / 6.0;
    let rho_tilde = phase1.rho_tilde();
    let (sum_x, sum_x2) = phase1.x_moments();
    let lambda_s = crate::bounds::lambda_streaming(sum_x, sum_x2, m_prime);
    let rho_bound =
        rho_bound_empirical_bernstein(rho_tilde, lambda_s, diameter.bound, m_prime, delta_part)?;
    // The diameter bound dominates the true mean internal count, so it can
    // only tighten the probabilistic bound.
    let rho = rho_bound.min(diameter.bound as f64);
    let nu_hat = var_upper_bound(phase1.wimpy_max(), m_prime, (1.0 / delta_part).ln()).min(0.25);
    let partition = build_partition(&phase1, cfg.base_a)?;
    let t_eff = partition.class_count();
    let m_hat = sufficient_samples(cfg.epsilon, delta_part, nu_hat, rho)?;
    let m_start = schedule_start(cfg.epsilon, nu_hat, t_eff, cfg.delta).min(m_hat).max(1);

    // Phase 2: fresh main sample, grown geometrically.
    let mut est = EstimatorState::new(n, cfg.trials);
    let mut iterations: Vec<IterationReport> = Vec::new();
    let mut stop = None;
    let mut max_eps = f64::INFINITY;
    let mut i = 0u32;
    while stop.is_none() {
        i += 1;
        let target = if i == 1 {
            m_start
        } else {
            next_m(est.sample_count(), cfg.ratio, m_hat)
        };
        let have = est.sample_count();
        let finished = ingest_range(
            g,
            &params,
            cfg.seed,
            0,
            have,
            target - have,
            &mut est,
            &deadline,
        )?;
        let l_i = schedule_log_term(cfg.delta, t_eff, i, ScheduleMode::Main);
        let out = class_bounds(&est, &partition, cfg.trials, l_i);
        max_eps = out.max_eps;
        iterations.push(IterationReport {
            i,
            m_i: est.sample_count(),
            per_class: out.per_class,
        });
        if !finished {
            stop = Some(StopReason::BudgetExceeded);
        } else if out.max_eps <= cfg.epsilon {
            stop = Some(StopReason::EpsMet);
        } else if est.sample_count() >= m_hat {
            stop = Some(StopReason::MhatReached);
        }
    }
    let stop_reason = stop.unwrap();

    Ok(RunReport {
        config: cfg.clone(),
        graph_stats,
        m_prime,
        rho_tilde,
        rho,
        nu_hat,
        m_hat,
        m_start,
        m_final: est.sample_count(),
        iterations,
        stop_reason,
        guaranteed: stop_reason != StopReason::BudgetExceeded,
        max_eps,
        estimates_path: None,
        wall_time_s: deadline.elapsed_s(),
        estimates: est.estimates(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn small_graph() -> Graph {
        // Two hubs bridging leaf clusters.
        let mut edges = Vec::new();
        for v in 2..8 {
            edges.push((0u32, v as u32));
        }
        for v in 8..14 {
            edges.push((1u32, v as u32));
        }
        edges.push((0, 1));
        Graph::from_edges(14, &edges, false).unwrap()
    }

    #[test]
    fn schedule_start_collapse() {
        // With nu_hat = 0 the bound is (25/3) L1 / m; the start size is the
        // smallest m at or below epsilon.
        let t = 1;
        let delta = 0.05;
        let l1 = schedule_log_term(delta, t, 1, ScheduleMode::Main);
        let eps = 0.5;
        let m = schedule_start(eps, 0.0, t, delta);
        assert!(eps_bound(0.0, 0.0, m, l1) <= eps);
        assert!(m == 1 || eps_bound(0.0, 0.0, m - 1, l1) > eps);
        let expect = (25.0 / 3.0 * l1 / eps).ceil() as u64;
        assert!(m == expect || m == expect - 1 || m + 1 == expect, "m={m} expect~{expect}");
    }

    #[test]
    fn next_m_growth_and_cap() {
        assert_eq!(next_m(1, 1.2, 1000), 2);
        assert_eq!(next_m(10, 1.2, 1000), 12);
        assert_eq!(next_m(999, 1.2, 1000), 1000);
        assert_eq!(next_m(1000, 1.2, 1000), 1000);
    }

    #[test]
    fn schedule_budget_geometric_series() {
        // sum_{i>=1} 2^-(i+1) never exceeds the reserved half budget; in
        // f64 the partial sums round up to exactly 1/2 near term 53.
        let mut acc = 0.0f64;
        for i in 1..=60 {
            acc += (2.0f64).powi(-(i + 1));
            assert!(acc <= 0.5);
        }
    }

    #[test]
    fn run_reaches_stop_and_reports() {
        let g = small_graph();
        let mut cfg = RunConfig::new(0.1, 0.1, 7);
        cfg.trials = 5;
        let rep = run(&g, &cfg).unwrap();
        assert!(rep.guaranteed);
        assert!(rep.m_final >= 1);
        assert!(!rep.iterations.is_empty());
        assert_eq!(rep.estimates.len(), 14);
        assert!(rep.estimates.iter().all(|&b| (0.0..=1.0).contains(&b)));
        match rep.stop_reason {
            StopReason::EpsMet => assert!(rep.max_eps <= 0.1),
            StopReason::MhatReached => assert!(rep.m_final >= rep.m_hat),
            StopReason::BudgetExceeded => panic!("unexpected budget stop"),
        }
    }

    #[test]
    fn run_is_deterministic_modulo_wall_time() {
        let g = small_graph();
        let mut cfg = RunConfig::new(0.15, 0.1, 42);
        cfg.trials = 5;
        let mut a = run(&g, &cfg).unwrap();
        let mut b = run(&g, &cfg).unwrap();
        a.wall_time_s = 0.0;
        b.wall_time_s = 0.0;
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        assert_eq!(a.estimates, b.estimates);
    }

    #[test]
    fn budget_truncation_flags_report() {
        let g = small_graph();
        let mut cfg = RunConfig::new(0.001, 0.05, 3);
        cfg.trials = 25;
        cfg.max_seconds = Some(0.05);
        match run(&g, &cfg) {
            Ok(rep) => {
                assert_eq!(rep.stop_reason, StopReason::BudgetExceeded);
                assert!(!rep.guaranteed);
            }
            // A budget so small that phase 1 cannot finish is also valid.
            Err(Error::Budget(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn diameter_override_wins() {
        let g = small_graph();
        let mut cfg = RunConfig::new(0.2, 0.1, 1);
        cfg.trials = 3;
        cfg.diameter_override = Some(9);
        let rep = run(&g, &cfg).unwrap();
        assert_eq!(rep.graph_stats.diameter_bound, 9);
        assert!(!rep.graph_stats.diameter_heuristic);
    }

    #[test]
    fn probe_stats_bound_dominates_sampled_mean() {
        let g = small_graph();
        let params = RunConfig::new(0.1, 0.1, 9).sample_params();
        let p = probe_stats(&g, &params, 0.1, 9, 200, 5, None).unwrap();
        assert_eq!(p.samples, 200);
        assert!(!p.truncated);
        let bound = p.rho_bound.unwrap();
        assert!(bound >= p.rho_tilde);
        assert!(bound <= 5.0);
        assert!(p.max_estimate > 0.0 && p.max_estimate <= 1.0);
    }
}
