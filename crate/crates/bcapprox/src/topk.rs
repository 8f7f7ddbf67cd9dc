//! Relative-error identification of the k most central nodes.
//!
//! Phase 1 samples until at least k distinct nodes have each appeared as
//! internal nodes in at least `kappa` distinct samples; that sample fixes
//! the variance partition. Phase 2 starts a fresh sample at twice the
//! phase-1 size and grows it geometrically. At each checkpoint, with
//! `L_i = ln(2^i * 5 * t / delta)`, every node gets the confidence bounds
//!
//! ```text
//! lower(v) = max(0, est(v) - eps_class(v))
//! upper(v) = min(1, est(v) + eps_class(v))
//! ```
//!
//! The candidate set keeps every node whose upper bound reaches the k-th
//! largest lower bound. The run stops when each candidate v satisfies
//!
//! ```text
//! est(v)/(1+eta) <= lower(v)   and   upper(v) <= est(v)/(1-eta)
//! ```
//!
//! at which point, with probability at least 1 - delta, the reported set
//! contains every true top-k node, each reported estimate is within
//! relative error eta, and any extra entry is near-tied with the k-th value.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::bounds::{schedule_log_term, ScheduleMode};
use crate::engine::{
    draw_batch, ingest_range, next_m, Deadline, GraphStats, IterationReport, RunConfig,
    StopReason,
};
use crate::error::{Error, Result};
use crate::estimator::{build_partition, EstimatorState, Partition};
use crate::graph::Graph;
use crate::sampler::{SampleRecord, PHASE1_STREAM_BASE};

/// Tunables for a top-k run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopKConfig {
    pub k: usize,
    /// Relative error target in (0, 1).
    pub eta: f64,
    pub delta: f64,
    /// Distinct-sample appearance threshold ending phase 1.
    pub kappa: u32,
    pub trials: usize,
    pub lambda: f64,
    pub base_a: f64,
    pub ratio: f64,
    pub bag_cap: usize,
    pub seed: u64,
    pub diameter_pivots: usize,
    pub diameter_override: Option<u32>,
    pub max_seconds: Option<f64>,
}

impl TopKConfig {
    pub fn new(k: usize, eta: f64, delta: f64, seed: u64) -> Self {
        let base = RunConfig::new(0.5, delta, seed);
        TopKConfig {
            k,
            eta,
            delta,
            kappa: 5,
            trials: base.trials,
            lambda: base.lambda,
            base_a: base.base_a,
            ratio: base.ratio,
            bag_cap: base.bag_cap,
            seed,
            diameter_pivots: base.diameter_pivots,
            diameter_override: None,
            max_seconds: None,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k >= n {
            return Err(Error::Parameter(format!(
                "k must be in [1, n-1], got k={} with n={n}",
                self.k
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Parameter(format!(
                "eta must be in (0,1), got {}",
                self.eta
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!(
                "delta must be in (0,1), got {}",
                self.delta
            )));
        }
        if self.kappa == 0 {
            return Err(Error::Parameter("kappa must be positive".into()));
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
        if !(self.base_a > 1.0) || !(self.ratio > 1.0) || self.bag_cap == 0 {
            return Err(Error::Parameter(
                "base-a and ratio must exceed 1, bag-cap must be positive".into(),
            ));
        }
        Ok(())
    }

    fn sample_params(&self) -> crate::sampler::SampleParams {
        crate::sampler::SampleParams {
            alpha: (1.0 / self.lambda).ln(),
            bag_cap: self.bag_cap,
            trials: self.trials,
        }
    }
}

/// One reported node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopKEntry {
    /// Dense node id; the CLI swaps in original labels before writing.
    pub node: u32,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Outcome of a top-k run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopKResult {
    pub k: usize,
    pub eta: f64,
    pub delta: f64,
    /// k-th largest lower bound at the final checkpoint.
    pub threshold: f64,
    /// Candidates (upper bound at or above the threshold), sorted by
    /// estimate descending, node id ascending on ties.
    pub entries: Vec<TopKEntry>,
    pub m_prime: u64,
    pub m_final: u64,
    pub iterations: Vec<IterationReport>,
    pub stop_reason: StopReason,
    pub guaranteed: bool,
    pub wall_time_s: f64,
    pub config: TopKConfig,
    pub graph_stats: GraphStats,
}

/// k-th largest of the per-node lower bounds (1-based k). Ties break by
/// value only: any node attaining the k-th value yields the same threshold.
pub fn kth_lower_bound(lowers: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= lowers.len());
    let mut copy = lowers.to_vec();
    let idx = k - 1;
    copy.select_nth_unstable_by(idx, |a, b| b.partial_cmp(a).unwrap());
    copy[idx]
}

fn distinct_internal(rec: &SampleRecord) -> HashSet<u32> {
    let mut set = HashSet::new();
    for path in &rec.bag.paths {
        for &v in path {
            set.insert(v);
        }
    }
    set
}

fn sorted_entries(
    est: &EstimatorState,
    part: &Partition,
    eps_class: &[f64],
    threshold: f64,
) -> Vec<TopKEntry> {
    let estimates = est.estimates();
    let mut entries: Vec<TopKEntry> = (0..estimates.len() as u32)
        .filter_map(|v| {
            let b = estimates[v as usize];
            let e = eps_class[part.class_of(v) as usize];
            let upper = (b + e).min(1.0);
            if upper >= threshold {
                Some(TopKEntry {
                    node: v,
                    estimate: b,
                    lower: (b - e).max(0.0),
                    upper,
                })
            } else {
                None
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.estimate
            .partial_cmp(&a.estimate)
            .unwrap()
            .then(a.node.cmp(&b.node))
    });
    entries
}

/// Run the top-k identification.
pub fn run_topk(g: &Graph, cfg: &TopKConfig) -> Result<TopKResult> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::DegenerateGraph(
            "estimation needs at least two nodes".into(),
        ));
    }
    cfg.validate(n)?;
    let deadline = Deadline::new(cfg.max_seconds);
    let params = cfg.sample_params();
    let diameter =
        crate::engine::resolve_diameter(g, cfg.diameter_override, cfg.diameter_pivots, cfg.seed);
    let graph_stats = GraphStats {
        nodes: n,
        edges: g.edge_count(),
        directed: g.is_directed(),
        diameter_bound: diameter.bound,
        diameter_heuristic: diameter.heuristic,
    };

    // Phase 1: sample until k nodes each hit kappa distinct samples.
    let mut phase1 = EstimatorState::new(n, cfg.trials);
    let mut seen_in = vec![0u32; n];
    let mut achieved = 0usize;
    let mut next_stream = 0u64;
    let mut truncated = false;
    'outer: loop {
        if deadline.exceeded() {
            truncated = true;
            break;
        }
        let records = draw_batch(g, &params, cfg.seed, PHASE1_STREAM_BASE + next_stream, 512);
        next_stream += 512;
        for rec in &records {
            phase1.ingest_record(rec)?;
            for v in distinct_internal(rec) {
                let c = &mut seen_in[v as usize];
                *c += 1;
                if *c == cfg.kappa {
                    achieved += 1;
                }
            }
            if achieved >= cfg.k {
                break 'outer;
            }
        }
    }
    let m_prime = phase1.sample_count();
    if truncated {
        // Not enough signal to even freeze the partition: report the
        // current estimates with vacuous bounds.
        let estimates = phase1.estimates();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| {
            estimates[b as usize]
                .partial_cmp(&estimates[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        let entries = order
            .into_iter()
            .take(cfg.k)
            .map(|v| TopKEntry {
                node: v,
                estimate: estimates[v as usize],
                lower: 0.0,
                upper: 1.0,
            })
            .collect();
        return Ok(TopKResult {
            k: cfg.k,
            eta: cfg.eta,
            delta: cfg.delta,
            threshold: 0.0,
            entries,
            m_prime,
            m_final: 0,
            iterations: Vec::new(),
            stop_reason: StopReason::BudgetExceeded,
            guaranteed: false,
            wall_time_s: deadline.elapsed_s(),
            config: cfg.clone(),
            graph_stats,
        });
    }

    let partition = build_partition(&phase1, cfg.base_a)?;
    let t_eff = partition.class_count();

    // Phase 2: fresh sample, twice the phase-1 size to start.
    let mut est = EstimatorState::new(n, cfg.trials);
    let mut iterations = Vec::new();
    let mut stop = None;
    let mut threshold = 0.0f64;
    let mut eps_class: Vec<f64> = vec![1.0; t_eff];
    let mut i = 0u32;
    while stop.is_none() {
        i += 1;
        let target = if i == 1 {
            (2 * m_prime).max(1)
        } else {
            next_m(est.sample_count(), cfg.ratio, u64::MAX)
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

        let m = est.sample_count().max(1);
        let l_i = schedule_log_term(cfg.delta, t_eff, i, ScheduleMode::TopK);
        let mcera = est.mcera_per_class(&partition);
        let wimpy = est.wimpy_per_class(&partition);
        let mut per_class = Vec::with_capacity(t_eff);
        for j in 0..t_eff {
            let r_tilde =
                crate::bounds::era_upper_bound(mcera[j], wimpy[j], cfg.trials, m, l_i);
            let nu = crate::bounds::var_upper_bound(wimpy[j], m, l_i);
            let eps = crate::bounds::eps_bound(r_tilde, nu, m, l_i);
            eps_class[j] = eps;
            per_class.push(crate::engine::ClassReport {
                class: j,
                mcera: mcera[j],
                wimpy: wimpy[j],
                nu,
                eps,
            });
        }
        iterations.push(IterationReport {
            i,
            m_i: est.sample_count(),
            per_class,
        });

        let estimates = est.estimates();
        let lowers: Vec<f64> = (0..n)
            .map(|v| {
                (estimates[v] - eps_class[partition.class_of(v as u32) as usize]).max(0.0)
            })
            .collect();
        threshold = kth_lower_bound(&lowers, cfg.k);
        let mut all_tight = true;
        for v in 0..n {
            let e = eps_class[partition.class_of(v as u32) as usize];
            let b = estimates[v];
            let upper = (b + e).min(1.0);
            if upper < threshold {
                continue;
            }
            let lower = lowers[v];
            if b / (1.0 + cfg.eta) > lower || upper > b / (1.0 - cfg.eta) {
                all_tight = false;
                break;
            }
        }
        if !finished {
            stop = Some(StopReason::BudgetExceeded);
        } else if all_tight {
            stop = Some(StopReason::EpsMet);
        }
    }
    let stop_reason = stop.unwrap();
    let entries = sorted_entries(&est, &partition, &eps_class, threshold);

    Ok(TopKResult {
        k: cfg.k,
        eta: cfg.eta,
        delta: cfg.delta,
        threshold,
        entries,
        m_prime,
        m_final: est.sample_count(),
        iterations,
        stop_reason,
        guaranteed: stop_reason == StopReason::EpsMet,
        wall_time_s: deadline.elapsed_s(),
        config: cfg.clone(),
        graph_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn kth_lower_bound_examples() {
        assert_eq!(kth_lower_bound(&[0.5, 0.3, 0.1], 2), 0.3);
        for k in 1..=4 {
            assert_eq!(kth_lower_bound(&[0.2; 4], k), 0.2);
        }
    }

    #[test]
    fn kth_lower_bound_matches_sort() {
        use rand::Rng;
        let mut rng = crate::sampler::stream_rng(5, 0);
        for _ in 0..1000 {
            let len = rng.gen_range(1..50);
            let vals: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            let mut sorted = vals.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let k = rng.gen_range(1..=len);
            assert_eq!(kth_lower_bound(&vals, k), sorted[k - 1]);
        }
    }

    #[test]
    fn kth_lower_bound_monotone_under_pointwise_growth() {
        use rand::Rng;
        let mut rng = crate::sampler::stream_rng(6, 0);
        for _ in 0..200 {
            let len = rng.gen_range(1..30);
            let vals: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            let grown: Vec<f64> = vals.iter().map(|v| v + rng.gen::<f64>() * 0.1).collect();
            let k = rng.gen_range(1..=len);
            assert!(kth_lower_bound(&grown, k) >= kth_lower_bound(&vals, k));
        }
    }

    #[test]
    fn star_graph_top1() {
        let edges: Vec<(u32, u32)> = (1..=8).map(|v| (0u32, v)).collect();
        let g = Graph::from_edges(9, &edges, false).unwrap();
        let mut cfg = TopKConfig::new(1, 0.25, 0.1, 11);
        cfg.trials = 5;
        let res = run_topk(&g, &cfg).unwrap();
        assert!(res.guaranteed);
        assert_eq!(res.entries[0].node, 0);
        // Center's true value: 8*7 / (9*8) = 7/9.
        let truth = 7.0 / 9.0;
        assert!((res.entries[0].estimate - truth).abs() <= cfg.eta * truth);
        assert!(res.entries[0].lower <= truth && truth <= res.entries[0].upper);
    }

    #[test]
    fn rejects_bad_k() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap();
        let cfg = TopKConfig::new(3, 0.1, 0.1, 1);
        assert!(run_topk(&g, &cfg).is_err());
        let cfg0 = TopKConfig::new(0, 0.1, 0.1, 1);
        assert!(run_topk(&g, &cfg0).is_err());
    }

    #[test]
    fn determinism() {
        let edges: Vec<(u32, u32)> = (1..=6).map(|v| (0u32, v)).chain([(1, 2)]).collect();
        let g = Graph::from_edges(7, &edges, false).unwrap();
        let mut cfg = TopKConfig::new(1, 0.3, 0.1, 77);
        cfg.trials = 5;
        let mut a = run_topk(&g, &cfg).unwrap();
        let mut b = run_topk(&g, &cfg).unwrap();
        a.wall_time_s = 0.0;
        b.wall_time_s = 0.0;
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
