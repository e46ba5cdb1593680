//! Closed-form concentration bounds and complexity counts.
//!
//! All logarithms are natural.

use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Slack absorbing round-off in `ceil(log_gamma(x))` at exact powers.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil(log_gamma(ratio))`, or 0 when `ratio >= 1`.
pub fn ceil_log(gamma: f64, ratio: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        bail!(Domain, "discount {gamma} outside (0, 1)");
    }
    if !(ratio > 0.0) {
        bail!(Domain, "ratio {ratio} must be positive");
    }
    if ratio >= 1.0 {
        return Ok(0);
    }
    let x = ratio.ln() / gamma.ln();
    Ok((x - CEIL_SLACK).ceil().max(0.0) as usize)
}

/// Hoeffding tail for the mean of `n` draws with range `h`:
/// `exp(-2 n eps^2 / h^2)`.
pub fn hoeffding(n: u64, h: f64, eps: f64) -> f64 {
    debug_assert!(n >= 1 && h > 0.0 && eps >= 0.0);
    (-2.0 * n as f64 * eps * eps / (h * h)).exp()
}

/// Hoeffding tail for a weighted mean: `exp(-2 eps^2 / (h^2 sum w_i^2))`.
pub fn weighted_hoeffding(weights: &[f64], h: f64, eps: f64) -> Result<f64> {
    if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        bail!(Validation, "weights must be a nonempty list of positive reals");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!(Validation, "weights sum to {total}, expected 1");
    }
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok((-2.0 * eps * eps / (h * h * sq)).exp())
}

/// Bound `1 + beta^2 / delta^2` on the expected number of draws before a
/// gap `delta` is resolved.
pub fn expected_leaf_samples(beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 0.0) || !(delta > 0.0) {
        bail!(Domain, "beta and delta must be positive, got {beta}, {delta}");
    }
    Ok(1.0 + beta * beta / (delta * delta))
}

/// `Pr[N > n] <= exp(-2 n^2 delta^2 / beta^2)`.
pub fn leaf_sample_tail(beta: f64, delta: f64, n: u64) -> Result<f64> {
    if !(beta > 0.0) || !(delta > 0.0) {
        bail!(Domain, "beta and delta must be positive, got {beta}, {delta}");
    }
    let n = n as f64;
    Ok((-2.0 * n * n * delta * delta / (beta * beta)).exp())
}

/// One point of a tail curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub x: u64,
    pub bound: f64,
}

/// A depth-tail bound `Pr(K > k)` on a grid of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub k0: usize,
    pub points: Vec<TailPoint>,
}

/// Minimum depth `ceil(log_gamma(delta / beta))` before a branch with gap
/// `delta` can be rejected.
pub fn rejection_depth(beta: f64, delta: f64, gamma: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < beta) {
        bail!(Domain, "gap {delta} outside (0, {beta})");
    }
    ceil_log(gamma, delta / beta)
}

/// Depth tail of a suboptimal branch under the first branch-and-bound
/// planner: 1 up to `k0`, then `exp(-2 (k - k0) delta^2 / beta^2)`.
///
/// Only the dominant exponential is kept; constant prefactors are dropped.
pub fn sbb1_depth_tail(beta: f64, delta: f64, gamma: f64, k: usize) -> Result<TailPoint> {
    let k0 = rejection_depth(beta, delta, gamma)?;
    let bound = if k <= k0 {
        1.0
    } else {
        (-2.0 * (k - k0) as f64 * delta * delta / (beta * beta)).exp()
    };
    Ok(TailPoint { x: k as u64, bound })
}

pub fn sbb1_tail_curve(beta: f64, delta: f64, gamma: f64, ks: &[usize]) -> Result<TailCurve> {
    let k0 = rejection_depth(beta, delta, gamma)?;
    let points = ks
        .iter()
        .map(|&k| sbb1_depth_tail(beta, delta, gamma, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(TailCurve { k0, points })
}

/// Depth tail under half-depth sample reuse:
/// `exp(-2 (k-k0)^2 (1-gamma^2) f^2 / (1 - gamma^(2(k+1))))` with
/// `f = 1 - (1 - gamma^(k+1)) / ((k - k0)(1 - gamma))`; 1 when `f <= 0` or
/// `k <= k0`.
pub fn sbb2_depth_tail(gamma: f64, k: usize, k0: usize) -> Result<f64> {
    Ok(sbb2_depth_log_tail(gamma, k, k0)?.exp().min(1.0))
}

/// Natural log of [`sbb2_depth_tail`], finite where the bound underflows.
pub fn sbb2_depth_log_tail(gamma: f64, k: usize, k0: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        bail!(Domain, "discount {gamma} outside (0, 1)");
    }
    if k0 < 1 {
        bail!(Domain, "k0 must be at least 1");
    }
    if k <= k0 {
        return Ok(0.0);
    }
    let n = (k - k0) as f64;
    let kp1 = (k + 1) as i32;
    let f = 1.0 - (1.0 - gamma.powi(kp1)) / (n * (1.0 - gamma));
    if f <= 0.0 {
        return Ok(0.0);
    }
    Ok((-2.0 * n * n * (1.0 - gamma * gamma) * f * f / (1.0 - gamma.powi(2 * kp1))).min(0.0))
}

/// The large-`k` form `exp(-2 (k-k0)^2 (1-gamma^2))`.
pub fn sbb2_asymptotic_tail(gamma: f64, k: usize, k0: usize) -> f64 {
    let n = k.saturating_sub(k0) as f64;
    (-2.0 * n * n * (1.0 - gamma * gamma)).exp()
}

/// Truncation error of a depth-`k` search: naive `gamma^k / (1 - gamma)`
/// and the smoothness-aware `sum_{n >= k} gamma^n (n - k) / n`.
pub fn tail_error(gamma: f64, k: u32) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        bail!(Domain, "discount {gamma} outside (0, 1)");
    }
    if k < 1 {
        bail!(Domain, "depth must be at least 1");
    }
    let naive = gamma.powi(k as i32) / (1.0 - gamma);
    let mut smooth = 0.0;
    let mut n = k;
    let mut g = gamma.powi(k as i32);
    while g / (1.0 - gamma) >= 1e-12 {
        smooth += g * f64::from(n - k) / f64::from(n);
        n += 1;
        g *= gamma;
    }
    Ok((naive, smooth))
}

/// Undiscounted horizon-`t` truncation error: `(T - k, T - k (1 + ln(T / k)))`.
pub fn undiscounted_tail_error(t: u64, k: u64) -> Result<(f64, f64)> {
    if k < 1 || k > t {
        bail!(Domain, "need 1 <= k <= T, got k = {k}, T = {t}");
    }
    let (t, k) = (t as f64, k as f64);
    Ok((t - k, t - k * (1.0 + (t / k).ln())))
}

/// Depth `ceil(log_gamma(eps / beta))` of the flat oracle search.
pub fn flat_oracle_depth(gamma: f64, epsilon: f64, beta: f64) -> Result<usize> {
    ceil_log(gamma, epsilon / beta)
}

/// Leaf evaluations of an iterative-deepening flat oracle search that runs
/// through depth `k`: `sum_{j=0}^{k} phi^j`. Saturates at `u128::MAX`.
pub fn flat_oracle_evaluations(phi: u64, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=k {
        total = total.saturating_add(level);
        level = level.saturating_mul(u128::from(phi));
    }
    total
}

/// `phi^(1 + k)`, the order bound on the flat oracle's cost.
pub fn flat_oracle_bound(phi: u64, k: usize) -> u128 {
    (0..=k).fold(1u128, |acc, _| acc.saturating_mul(u128::from(phi)))
}

/// Depth `ceil(log_gamma(eps / (2 beta)))` of the flat stochastic search.
pub fn flat_stochastic_depth(gamma: f64, epsilon: f64, beta: f64) -> Result<usize> {
    ceil_log(gamma, epsilon / (2.0 * beta))
}

/// Draws per leaf, `max(1, ceil(2 k ln phi))`.
pub fn flat_stochastic_samples(k: usize, phi: u64) -> usize {
    let m = (2.0 * k as f64 * (phi as f64).ln() - CEIL_SLACK).ceil();
    if m < 1.0 {
        1
    } else {
        m as usize
    }
}

/// Leaf evaluations `m phi^k` of the flat stochastic search.
pub fn flat_stochastic_evaluations(phi: u64, k: usize, m: usize) -> u128 {
    (0..k).fold(m as u128, |acc, _| acc.saturating_mul(u128::from(phi)))
}
