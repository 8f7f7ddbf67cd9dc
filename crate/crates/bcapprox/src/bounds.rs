//! Concentration bounds for the progressive estimator.
//!
//! Function-family deviation bounds (per variance class, log term `L`):
//!
//! ```text
//! era   = max(mcera, 0) + sqrt(4 * w * L / (c * m))
//! R     = era + L/m + sqrt((L/m)^2 + 2 * L * era / m)
//! eps   = 2R + sqrt(2 * L * (nu + 4R) / m) + L / (3m)
//! nu    = w + L/m + sqrt((L/m)^2 + 2 * w * L / m)
//! ```
//!
//! where `w` is the class max empirical wimpy variance, `c` the number of
//! Rademacher trials, and `nu` upper-bounds the true wimpy variance.
//!
//! The a-priori sufficient sample size uses `g(x) = x(1-x)` and
//! `h(x) = (1+x)ln(1+x) - x`:
//!
//! ```text
//! m_hat = sup_{x in (0, xhat]} ln(2*rho/(x*delta)) / (g(x) * h(eps/g(x)))
//! ```
//!
//! with `xhat = min(xhat1, xhat2)`, `xhat2 = 1/2 - sqrt(1/4 - nu_hat)`, and
//! `xhat1` the crossing of `g(x) h(eps/g(x)) = 2 eps^2` inside
//! `[1/2 - sqrt(eps/3 - eps^2/9), 1/2]`.
//!
//! Per-node relative deviations invert
//!
//! ```text
//! d(b) = sqrt(2 * min(g(b), nu_hat) * ln(4*min(rho/b, n)/delta) / m)
//!      + ln(4*min(rho/b, n)/delta) / (3m)
//! ```
//!
//! and the average-path-length bounds follow from the fixed point of
//! `r(x) = u + sqrt(v + y*x)`, which is `u + y/2 + sqrt(y^2/4 + u*y + v)`.

use crate::error::{Error, Result};

/// Bernstein variance factor `g(x) = x(1-x)` on [0, 1].
pub fn g(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!("g domain is [0,1], got {x}")));
    }
    Ok(g_raw(x))
}

#[inline]
pub(crate) fn g_raw(x: f64) -> f64 {
    x * (1.0 - x)
}

/// Cramer transform term `h(x) = (1+x)ln(1+x) - x` for `x >= -1`.
pub fn h(x: f64) -> Result<f64> {
    if x < -1.0 || !x.is_finite() {
        return Err(Error::Parameter(format!("h domain is [-1,inf), got {x}")));
    }
    Ok(h_raw(x))
}

#[inline]
pub(crate) fn h_raw(x: f64) -> f64 {
    if x == -1.0 {
        return 1.0;
    }
    (1.0 + x) * (1.0 + x).ln() - x
}

/// `h1(x) = 1 + x - sqrt(1 + 2x)` for `x >= -1/2`; inverse is `x + sqrt(2x)`.
pub fn h1(x: f64) -> Result<f64> {
    if x < -0.5 || !x.is_finite() {
        return Err(Error::Parameter(format!("h1 domain is [-1/2,inf), got {x}")));
    }
    Ok(1.0 + x - (1.0 + 2.0 * x).sqrt())
}

/// Inverse of `h1` on its increasing branch: `h1_inv(x) = x + sqrt(2x)`.
pub fn h1_inv(x: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::Parameter(format!("h1_inv domain is [0,inf), got {x}")));
    }
    Ok(x + (2.0 * x).sqrt())
}

/// Upper bound on the empirical Rademacher average from the c-trial Monte
/// Carlo average. The MCERA is clamped at zero before use.
pub fn era_upper_bound(mcera: f64, wimpy: f64, trials: usize, m: u64, log_term: f64) -> f64 {
    debug_assert!(trials > 0 && m > 0 && log_term >= 0.0 && wimpy >= 0.0);
    mcera.max(0.0) + (4.0 * wimpy * log_term / (trials as f64 * m as f64)).sqrt()
}

/// Supremum-deviation bound for one class from its Rademacher-average bound
/// `r_tilde` and wimpy-variance bound `nu`.
pub fn eps_bound(r_tilde: f64, nu: f64, m: u64, log_term: f64) -> f64 {
    debug_assert!(m > 0 && log_term >= 0.0 && r_tilde >= 0.0 && nu >= 0.0);
    let mf = m as f64;
    let lm = log_term / mf;
    let r = r_tilde + lm + (lm * lm + 2.0 * log_term * r_tilde / mf).sqrt();
    2.0 * r + (2.0 * log_term * (nu + 4.0 * r) / mf).sqrt() + log_term / (3.0 * mf)
}

/// Upper bound on the true wimpy variance from the empirical one.
pub fn var_upper_bound(wimpy: f64, m: u64, log_term: f64) -> f64 {
    debug_assert!(m > 0 && log_term >= 0.0 && wimpy >= 0.0);
    let lm = log_term / m as f64;
    wimpy + lm + (lm * lm + 2.0 * wimpy * lm).sqrt()
}

/// Which schedule the log term serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Additive-guarantee engine: `L_i = ln(2^(i+1) * 5 * t / delta)`.
    Main,
    /// Top-k engine: `L_i = ln(2^i * 5 * t / delta)`.
    TopK,
}

/// Log term for iteration `i >= 1` with `t` nonempty classes and total
/// failure budget `delta`. Evaluated in log space so large `i` cannot
/// overflow.
pub fn schedule_log_term(delta: f64, t: usize, i: u32, mode: ScheduleMode) -> f64 {
    debug_assert!(i >= 1 && t >= 1 && delta > 0.0 && delta < 1.0);
    let doublings = match mode {
        ScheduleMode::Main => (i + 1) as f64,
        ScheduleMode::TopK => i as f64,
    };
    doublings * std::f64::consts::LN_2 + (5.0 * t as f64 / delta).ln()
}

/// Sum of X and X^2 to the unbiased sample variance of pairwise half squared
/// differences: `(m * sum_x2 - sum_x^2) / (m * (m-1))`, clamped at zero.
pub fn lambda_streaming(sum_x: f64, sum_x2: f64, m: u64) -> f64 {
    debug_assert!(m >= 2);
    let mf = m as f64;
    ((mf * sum_x2 - sum_x * sum_x) / (mf * (mf - 1.0))).max(0.0)
}

/// Fixed point of `r(x) = u + sqrt(v + y*x)` for nonnegative u, v, y.
pub fn fixed_point(u: f64, v: f64, y: f64) -> f64 {
    debug_assert!(u >= 0.0 && v >= 0.0 && y >= 0.0);
    u + y / 2.0 + (y * y / 4.0 + u * y + v).sqrt()
}

/// Bernstein-flavored upper bound on the true mean internal-node count from
/// its sampled value, using a vertex-diameter bound `d` as the range.
pub fn rho_bound_bernstein(rho_tilde: f64, d: u32, m: u64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::Parameter(format!("delta must be in (0,1], got {delta}")));
    }
    if m == 0 {
        return Err(Error::Parameter("m must be positive".into()));
    }
    if rho_tilde > d as f64 {
        return Err(Error::Integrity(format!(
            "sampled value {rho_tilde} exceeds diameter bound {d}"
        )));
    }
    let l = (1.0 / delta).ln();
    let df = d as f64;
    let mf = m as f64;
    Ok(rho_tilde
        + ((5.0 / 3.0) * (df * l / mf).powi(2) + 2.0 * df * rho_tilde * l / mf).sqrt()
        + 4.0 * df * l / (3.0 * mf))
}

/// Empirical-Bernstein upper bound on the mean internal-node count, using
/// the streaming pairwise variance `lambda`.
pub fn rho_bound_empirical_bernstein(
    rho_tilde: f64,
    lambda: f64,
    d: u32,
    m: u64,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Parameter(format!("delta must be in (0,1], got {delta}")));
    }
    if m < 2 {
        return Err(Error::Parameter("empirical variance needs m >= 2".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Parameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let l = (2.0 / delta).ln();
    let mf = m as f64;
    Ok(rho_tilde + (2.0 * lambda * l / mf).sqrt() + 7.0 * (d as f64) * l / (3.0 * mf))
}

fn phi(x: f64, eps: f64) -> f64 {
    let gx = g_raw(x);
    gx * h_raw(eps / gx)
}

/// A-priori sufficient sample size for sup-deviation `epsilon` at confidence
/// `delta`, given a wimpy-variance bound `nu_hat` in (0, 1/4] and an
/// average-internal-count bound `rho`. The supremum is evaluated on a
/// log-spaced grid of 10^4 points over `(xhat * 1e-9, xhat]`, refined by
/// ternary search, inflated by 0.1%, and rounded up, so the result dominates
/// the true supremum.
pub fn sufficient_samples(epsilon: f64, delta: f64, nu_hat: f64, rho: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta must be in (0,1), got {delta}")));
    }
    if !(nu_hat > 0.0 && nu_hat <= 0.25) {
        return Err(Error::Parameter(format!("nu_hat must be in (0,1/4], got {nu_hat}")));
    }
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
    }

    // xhat1: crossing of phi(x) = 2 eps^2 inside [lo, 1/2]; phi decreases
    // there and phi(1/2) <= 2 eps^2 always holds.
    let target = 2.0 * epsilon * epsilon;
    let mut lo = 0.5 - (epsilon / 3.0 - epsilon * epsilon / 9.0).sqrt();
    let xhat1 = if phi(lo, epsilon) <= target {
        lo
    } else {
        let mut hi = 0.5;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if phi(mid, epsilon) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let xhat2 = 0.5 - (0.25 - nu_hat).sqrt();
    let xhat = xhat1.min(xhat2);

    let objective = |x: f64| (2.0 * rho / (x * delta)).ln() / phi(x, epsilon);

    const GRID: usize = 10_000;
    let x_lo = xhat * 1e-9;
    let log_lo = x_lo.ln();
    let log_hi = xhat.ln();
    let step = (log_hi - log_lo) / (GRID - 1) as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..GRID {
        let x = (log_lo + step * i as f64).exp();
        let f = objective(x);
        if f > best {
            best = f;
            best_i = i;
        }
    }
    // Ternary refinement (log space) around the grid argmax.
    let mut a = log_lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (log_lo + step * (best_i + 1).min(GRID - 1) as f64).min(log_hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if objective(m1.exp()) < objective(m2.exp()) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let refined = objective((0.5 * (a + b)).exp()).max(best);
    let inflated = refined * 1.001;
    Ok(inflated.max(1.0).ceil() as u64)
}

/// Shared parameters of the per-node deviation bounds.
#[derive(Debug, Clone, Copy)]
pub struct DeviationParams {
    pub m: u64,
    pub delta: f64,
    pub nu_hat: f64,
    pub rho: f64,
    pub n: usize,
}

/// Deviation radius around a value `b` in [0, 1]. At `b = 0` the union-bound
/// cap falls back to `n` and the variance term vanishes.
pub fn relative_deviation(b: f64, p: &DeviationParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&b));
    debug_assert!(p.m > 0 && p.delta > 0.0 && p.delta < 1.0);
    let cap = if b <= 0.0 {
        p.n as f64
    } else {
        (p.rho / b).min(p.n as f64)
    };
    let l = (4.0 * cap / p.delta).ln().max(0.0);
    let v = g_raw(b).min(p.nu_hat);
    let mf = p.m as f64;
    (2.0 * v * l / mf).sqrt() + l / (3.0 * mf)
}

/// Confidence interval around an estimate by inverting the deviation radius:
/// `lower = min{x in [0, b]: b <= x + d(x)}` and
/// `upper = max{x in [b, 1]: x <= b + d(x)}`, each found with 200 bisection
/// steps and rounded outward.
pub fn invert_ci(b_tilde: f64, p: &DeviationParams) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&b_tilde));
    let lower = if b_tilde <= relative_deviation(0.0, p) {
        0.0
    } else {
        // Invariant: pred(lo) false, pred(hi) true, pred = b <= x + d(x).
        let mut lo = 0.0f64;
        let mut hi = b_tilde;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if b_tilde <= mid + relative_deviation(mid, p) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let upper = if 1.0 <= b_tilde + relative_deviation(1.0, p) {
        1.0
    } else {
        // Invariant: pred(lo) true, pred(hi) false, pred = x <= b + d(x).
        let mut lo = b_tilde;
        let mut hi = 1.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= b_tilde + relative_deviation(mid, p) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    (lower, upper)
}
