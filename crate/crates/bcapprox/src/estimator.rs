//! Streaming estimator state and the variance-peeling partition.
//!
//! Each sample i contributes, for every node v, the bag average
//!
//! ```text
//! f_v(tau_i) = |tau_i|^-1 * sum_{path in tau_i} 1[v internal to path]
//! ```
//!
//! which is an unbiased estimate of b(v) regardless of the bag size. The
//! state keeps, per node, the running sums of f, f^2, and the c
//! sign-weighted sums `sum_i sigma_{j,i} f_v(tau_i)` used by the Monte Carlo
//! empirical Rademacher average, plus the streaming moments of
//! `X_i = sum_v f_v(tau_i)` for the average-path-length bounds.
//!
//! Nodes are partitioned into geometric variance classes from an independent
//! first-phase sample: class index `ceil(log_a(min(1/w_v, m')))` computed on
//! the phase-1 empirical wimpy variance `w_v`, empty classes removed. The
//! partition is frozen before the main sampling phase.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sampler::{PathBag, SampleRecord};

/// Running sums over ingested samples.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    n: usize,
    trials: usize,
    m: u64,
    b_sum: Vec<f64>,
    w_sum: Vec<f64>,
    r_sum: Vec<f64>,
    sum_x: f64,
    sum_x2: f64,
    scratch: HashMap<u32, u32>,
    signs_f: Vec<f64>,
}

impl EstimatorState {
    pub fn new(n: usize, trials: usize) -> Self {
        EstimatorState {
            n,
            trials,
            m: 0,
            b_sum: vec![0.0; n],
            w_sum: vec![0.0; n],
            r_sum: vec![0.0; n * trials],
            sum_x: 0.0,
            sum_x2: 0.0,
            scratch: HashMap::new(),
            signs_f: vec![0.0; trials],
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Number of ingested samples (unreachable pairs included).
    pub fn sample_count(&self) -> u64 {
        self.m
    }

    /// Fold one sample into the sums. The signs slice must hold one
    /// Rademacher sign per trial. Endpoints appearing as internal nodes are
    /// rejected as an integrity violation.
    pub fn ingest(&mut self, bag: &PathBag, signs: &[i8]) -> Result<()> {
        if signs.len() != self.trials {
            return Err(Error::Parameter(format!(
                "expected {} signs, got {}",
                self.trials,
                signs.len()
            )));
        }
        self.m += 1;
        if bag.paths.is_empty() {
            return Ok(());
        }
        self.scratch.clear();
        for path in &bag.paths {
            for &v in path {
                if v == bag.s || v == bag.t {
                    return Err(Error::Integrity(format!(
                        "endpoint {v} listed as internal node"
                    )));
                }
                if v as usize >= self.n {
                    return Err(Error::Integrity(format!("node {v} out of range")));
                }
                *self.scratch.entry(v).or_insert(0) += 1;
            }
        }
        for (j, &s) in signs.iter().enumerate() {
            self.signs_f[j] = s as f64;
        }
        let inv = 1.0 / bag.paths.len() as f64;
        let mut x = 0.0;
        for (&v, &cnt) in self.scratch.iter() {
            let f = cnt as f64 * inv;
            let vi = v as usize;
            self.b_sum[vi] += f;
            self.w_sum[vi] += f * f;
            x += f;
            let row = &mut self.r_sum[vi * self.trials..(vi + 1) * self.trials];
            for (r, sgn) in row.iter_mut().zip(self.signs_f.iter()) {
                *r += sgn * f;
            }
        }
        self.sum_x += x;
        self.sum_x2 += x * x;
        Ok(())
    }

    pub fn ingest_record(&mut self, rec: &SampleRecord) -> Result<()> {
        self.ingest(&rec.bag, &rec.signs)
    }

    /// Current estimate for one node.
    pub fn b_tilde(&self, v: u32) -> f64 {
        self.b_sum[v as usize] / self.m.max(1) as f64
    }

    /// All per-node estimates; bit-identical to [`Self::b_tilde`] per node.
    pub fn estimates(&self) -> Vec<f64> {
        let mf = self.m.max(1) as f64;
        self.b_sum.iter().map(|&s| s / mf).collect()
    }

    /// Empirical wimpy variance of one node.
    pub fn wimpy(&self, v: u32) -> f64 {
        self.w_sum[v as usize] / self.m.max(1) as f64
    }

    /// Max empirical wimpy variance over all nodes (single-class view).
    pub fn wimpy_max(&self) -> f64 {
        let mf = self.m.max(1) as f64;
        self.w_sum.iter().fold(0.0f64, |a, &w| a.max(w / mf))
    }

    /// Estimate of the mean internal-node count of a random shortest path:
    /// sum of all per-node estimates.
    pub fn rho_tilde(&self) -> f64 {
        self.sum_x / self.m.max(1) as f64
    }

    /// Streaming sums of X_i and X_i^2 for the sample-variance identity.
    pub fn x_moments(&self) -> (f64, f64) {
        (self.sum_x, self.sum_x2)
    }

    /// Per-class c-trial Monte Carlo empirical Rademacher average:
    /// `(1/c) sum_j max_{v in class} (1/m) sum_i sigma_{j,i} f_v(tau_i)`.
    /// The max ranges over every node of the class, including untouched
    /// nodes whose sums are zero.
    pub fn mcera_per_class(&self, part: &Partition) -> Vec<f64> {
        let t = part.class_count();
        let c = self.trials;
        let mut maxes = vec![f64::NEG_INFINITY; t * c];
        for v in 0..self.n {
            let j = part.class_of(v as u32) as usize;
            let row = &self.r_sum[v * c..(v + 1) * c];
            let dst = &mut maxes[j * c..(j + 1) * c];
            for (d, &r) in dst.iter_mut().zip(row.iter()) {
                if r > *d {
                    *d = r;
                }
            }
        }
        let inv = 1.0 / (c as f64 * self.m.max(1) as f64);
        (0..t)
            .map(|j| maxes[j * c..(j + 1) * c].iter().sum::<f64>() * inv)
            .collect()
    }

    /// Per-class max empirical wimpy variance.
    pub fn wimpy_per_class(&self, part: &Partition) -> Vec<f64> {
        let t = part.class_count();
        let mut maxes = vec![0.0f64; t];
        let mf = self.m.max(1) as f64;
        for v in 0..self.n {
            let j = part.class_of(v as u32) as usize;
            let w = self.w_sum[v] / mf;
            if w > maxes[j] {
                maxes[j] = w;
            }
        }
        maxes
    }
}

/// Frozen node partition into nonempty variance classes.
#[derive(Debug, Clone)]
pub struct Partition {
    class_of: Vec<u32>,
    classes: usize,
    base: f64,
}

impl Partition {
    pub fn class_of(&self, v: u32) -> u32 {
        self.class_of[v as usize]
    }

    /// Number of nonempty classes (the `t` entering the union bounds).
    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Single-class partition (no peeling).
    pub fn trivial(n: usize) -> Self {
        Partition {
            class_of: vec![0; n],
            classes: 1,
            base: 2.0,
        }
    }
}

/// Build the variance partition from a first-phase state: raw class index
/// `ceil(log_a(min(1/w_v, m')))` (nodes with `w_v = 0` land in the last raw
/// class `ceil(log_a m')`), then raw indices are compacted to `0..t` over
/// nonempty classes in increasing raw order.
pub fn build_partition(state: &EstimatorState, base: f64) -> Result<Partition> {
    if !(base > 1.0) {
        return Err(Error::Parameter(format!("partition base must exceed 1, got {base}")));
    }
    if state.sample_count() == 0 {
        return Err(Error::Parameter("partition needs at least one sample".into()));
    }
    let m = state.sample_count() as f64;
    let ln_a = base.ln();
    let cap = (m.ln() / ln_a).ceil() as i64;
    let n = state.node_count();
    let mut raw = vec![0i64; n];
    for v in 0..n {
        let w = state.wimpy(v as u32);
        raw[v] = if w <= 0.0 {
            cap
        } else {
            let idx = ((1.0 / w).min(m).ln() / ln_a).ceil() as i64;
            idx.min(cap).max(0)
        };
    }
    let mut present: Vec<i64> = raw.clone();
    present.sort_unstable();
    present.dedup();
    let lookup: HashMap<i64, u32> = present
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, i as u32))
        .collect();
    let class_of = raw.iter().map(|r| lookup[r]).collect();
    Ok(Partition {
        class_of,
        classes: present.len(),
        base,
    })
}

/// Write samples as JSON lines for replay tests.
pub fn write_sample_log<W: Write>(mut out: W, records: &[SampleRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a JSON-lines sample log.
pub fn read_sample_log<R: BufRead>(input: R) -> Result<Vec<SampleRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}
