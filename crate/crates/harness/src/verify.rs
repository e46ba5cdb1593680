//! Simulation checks of the concentration and perturbation bounds.
//!
//! Each check produces rows pairing an empirical quantity with the bound it
//! is meant to respect. Probabilities carry 99% Clopper-Pearson intervals
//! and pass when the interval does not lie entirely above the bound.
//! Deterministic inequalities pass when they hold outright.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use sbb_core::belief::{dirichlet_step_bound, BeliefState, Posterior, Transition};
use sbb_core::concentration::{
    expected_leaf_samples, hoeffding, leaf_sample_tail, rejection_depth, sbb1_depth_tail, sbb2_depth_tail,
    weighted_hoeffding,
};
use sbb_core::mdp::{perturbation_gap, policy_evaluation, FiniteMdp, Policy};
use sbb_core::rng::{Domain, StreamRng, Streams};
use sbb_core::search::{sbb1_search, sbb2_search, Algorithm, SearchConfig};
use sbb_core::Error;

use crate::error::{HarnessError, Result};
use crate::synthetic::TwoBranchChain;

pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    /// Samples needed before a leaf's mean upper bound recovers.
    L3,
    /// Depth tail of a suboptimal branch under SBB1.
    L4,
    /// Depth tail of a suboptimal branch under SBB2.
    L5,
    /// Martingale and Lipschitz behaviour of Dirichlet means.
    L6,
    /// Value error under perturbed models.
    L7,
    /// Weighted-average Hoeffding bound.
    Hoeffding,
}

impl Lemma {
    pub const ALL: [Lemma; 6] = [Lemma::L3, Lemma::L4, Lemma::L5, Lemma::L6, Lemma::L7, Lemma::Hoeffding];
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Lemma::L3 => "L3",
            Lemma::L4 => "L4",
            Lemma::L5 => "L5",
            Lemma::L6 => "L6",
            Lemma::L7 => "L7",
            Lemma::Hoeffding => "Hoeffding",
        };
        f.write_str(name)
    }
}

impl FromStr for Lemma {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown check {s:?}")).into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub point: String,
    pub empirical: f64,
    pub bound: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub pass: bool,
}

impl VerifyRow {
    /// A frequency `hits / trials` that must not exceed `bound`.
    pub fn tail(point: impl Into<String>, hits: u64, trials: u64, bound: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, trials, CONFIDENCE);
        Self {
            point: point.into(),
            empirical: hits as f64 / trials as f64,
            bound,
            ci_low,
            ci_high,
            trials,
            pass: ci_low <= bound,
        }
    }

    /// A quantity that must not exceed `bound`, with no sampling error.
    pub fn exact(point: impl Into<String>, value: f64, bound: f64, trials: u64) -> Self {
        Self {
            point: point.into(),
            empirical: value,
            bound,
            ci_low: value,
            ci_high: value,
            trials,
            pass: value <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub lemma: Lemma,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn row(&self, point: &str) -> Option<&VerifyRow> {
        self.rows.iter().find(|r| r.point == point)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))?;
        Ok(())
    }
}

/// Two-sided Clopper-Pearson interval for a binomial proportion.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (x, n) = (hits as f64, trials as f64);
    let low = if hits == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("valid shape").inverse_cdf(alpha / 2.0)
    };
    let high = if hits >= trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .expect("valid shape")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Runs the named check with `trials` replications.
pub fn verify_lemma(lemma: Lemma, trials: u64, seed: u64) -> Result<VerifyReport> {
    if trials < 100 {
        return Err(Error::Validation(format!("need at least 100 trials, got {trials}")).into());
    }
    let streams = Streams::new(seed);
    let rows = match lemma {
        Lemma::L3 => leaf_samples(trials, &streams)?,
        Lemma::L4 => sbb1_depths(trials, seed)?,
        Lemma::L5 => sbb2_depths(trials, seed)?,
        Lemma::L6 => dirichlet_martingale(trials, &streams)?,
        Lemma::L7 => perturbation(trials, &streams)?,
        Lemma::Hoeffding => weighted_averages(trials, &streams)?,
    };
    Ok(VerifyReport { lemma, rows })
}

/// Draws from `Uniform[0, beta]` until the running mean exceeds
/// `beta / 2 - delta`; returns the number of draws.
pub fn stopping_time(beta: f64, delta: f64, rng: &mut StreamRng) -> u64 {
    let target = beta / 2.0 - delta;
    let mut sum = 0.0;
    let mut n = 0u64;
    loop {
        n += 1;
        sum += beta * rng.random::<f64>();
        if sum / n as f64 > target {
            return n;
        }
    }
}

fn leaf_samples(trials: u64, streams: &Streams) -> Result<Vec<VerifyRow>> {
    let beta = 1.0;
    let mut rows = Vec::new();
    for (tag, delta) in [0.25f64, 0.5].into_iter().enumerate() {
        let times: Vec<u64> = (0..trials)
            .map(|t| stopping_time(beta, delta, &mut streams.stream(Domain::Experiment, tag as u64, t)))
            .collect();
        let n = trials as f64;
        let mean = times.iter().sum::<u64>() as f64 / n;
        let var = times.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = 2.5758 * (var / n).sqrt();
        let bound = expected_leaf_samples(beta, delta)?;
        rows.push(VerifyRow {
            point: format!("delta={delta} mean"),
            empirical: mean,
            bound,
            ci_low: mean - half,
            ci_high: mean + half,
            trials,
            pass: mean - half <= bound,
        });
        for k in 0..=8u64 {
            let hits = times.iter().filter(|&&x| x > k).count() as u64;
            rows.push(VerifyRow::tail(
                format!("delta={delta} n={k}"),
                hits,
                trials,
                leaf_sample_tail(beta, delta, k)?,
            ));
        }
    }
    Ok(rows)
}

/// Parameters of the two-branch tail experiments.
pub const TAIL_GAMMA: f64 = 0.5;
pub const TAIL_BETA: f64 = 2.0;
pub const TAIL_DELTA: f64 = 0.5;
pub const TAIL_BUDGET: u64 = 200;

/// Final depth of the suboptimal branch over `trials` seeded runs.
pub fn suboptimal_depths(algorithm: Algorithm, trials: u64, seed: u64) -> Result<Vec<usize>> {
    let space = TwoBranchChain::new(TAIL_GAMMA, TAIL_BETA, TAIL_DELTA);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let config = SearchConfig::new(algorithm, TAIL_DELTA)
                .with_gamma(TAIL_GAMMA)
                .with_budget(TAIL_BUDGET)
                .with_seed(seed.wrapping_mul(1_000_003).wrapping_add(t));
            let out = match algorithm {
                Algorithm::Sbb1 => sbb1_search(&space, (0, 0), &config)?,
                Algorithm::Sbb2 => sbb2_search(&space, (0, 0), &config)?,
                other => return Err(Error::Capability(format!("{other} has no depth tail")).into()),
            };
            Ok(out.report.branch_depths[1])
        })
        .collect()
}

pub fn tail_count(depths: &[usize], k: usize) -> u64 {
    depths.iter().filter(|&&d| d > k).count() as u64
}

fn sbb1_depths(trials: u64, seed: u64) -> Result<Vec<VerifyRow>> {
    let k0 = rejection_depth(TAIL_BETA, TAIL_DELTA, TAIL_GAMMA)?;
    let depths = suboptimal_depths(Algorithm::Sbb1, trials, seed)?;
    let shallow = depths.iter().filter(|&&d| d < k0).count() as u64;
    let mut rows = vec![VerifyRow::tail(format!("depth<{k0}"), shallow, trials, 0.0)];
    for k in k0..=k0 + 8 {
        let bound = sbb1_depth_tail(TAIL_BETA, TAIL_DELTA, TAIL_GAMMA, k)?.bound;
        rows.push(VerifyRow::tail(format!("k={k}"), tail_count(&depths, k), trials, bound));
    }
    Ok(rows)
}

fn sbb2_depths(trials: u64, seed: u64) -> Result<Vec<VerifyRow>> {
    let k0 = rejection_depth(TAIL_BETA, TAIL_DELTA, TAIL_GAMMA)?;
    let two = suboptimal_depths(Algorithm::Sbb2, trials, seed)?;
    let one = suboptimal_depths(Algorithm::Sbb1, trials, seed)?;
    let mut rows = Vec::new();
    for k in k0 + 5..=k0 + 10 {
        let hits = tail_count(&two, k);
        rows.push(VerifyRow::tail(
            format!("k={k}"),
            hits,
            trials,
            sbb2_depth_tail(TAIL_GAMMA, k, k0)?,
        ));
        let mut paired = VerifyRow::tail(
            format!("k={k} vs sbb1"),
            hits,
            trials,
            tail_count(&one, k) as f64 / trials as f64,
        );
        paired.pass = paired.empirical <= paired.bound;
        rows.push(paired);
    }
    Ok(rows)
}

/// Random Dirichlet rows: a uniform prior plus a random burn-in.
fn random_row(rng: &mut StreamRng) -> BeliefState {
    let ns = rng.random_range(2..=4);
    let mut belief = BeliefState::uniform(ns, 1);
    for _ in 0..rng.random_range(0..20) {
        let s_next = rng.random_range(0..ns);
        belief = belief
            .posterior_update(&Transition::new(0, 0, 0, s_next))
            .expect("indices in range");
    }
    belief
}

fn dirichlet_mean(belief: &BeliefState) -> Vec<f64> {
    let row = belief.transition_counts(0, 0);
    let n: f64 = row.iter().sum();
    row.iter().map(|c| c / n).collect()
}

pub const LIPSCHITZ_STEPS: u32 = 20;

fn dirichlet_martingale(trials: u64, streams: &Streams) -> Result<Vec<VerifyRow>> {
    let mut martingale_err: f64 = 0.0;
    let mut worst = vec![0.0f64; LIPSCHITZ_STEPS as usize];
    for t in 0..trials {
        let mut rng = streams.stream(Domain::Experiment, 0, t);
        let start = random_row(&mut rng);
        let ns = start.n_states();
        let mean = dirichlet_mean(&start);
        let pred = start.predictive(0, 0)?.next_state_marginal();
        for (i, m) in mean.iter().enumerate() {
            let expected: f64 = (0..ns)
                .map(|j| {
                    let next = start
                        .posterior_update(&Transition::new(0, 0, 0, j))
                        .expect("indices in range");
                    pred[j] * dirichlet_mean(&next)[i]
                })
                .sum();
            martingale_err = martingale_err.max((expected - m).abs());
        }
        let n: f64 = start.transition_counts(0, 0).iter().sum();
        let mut belief = start.clone();
        for k in 1..=LIPSCHITZ_STEPS {
            let u: f64 = rng.random();
            let probs = belief.predictive(0, 0)?.next_state_marginal();
            let mut acc = 0.0;
            let mut s_next = ns - 1;
            for (j, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    s_next = j;
                    break;
                }
            }
            belief = belief.posterior_update(&Transition::new(0, 0, 0, s_next))?;
            let moved = dirichlet_mean(&belief)
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let ratio = moved / dirichlet_step_bound(n, k);
            worst[k as usize - 1] = worst[k as usize - 1].max(ratio);
        }
    }
    let mut rows = vec![VerifyRow::exact("martingale", martingale_err, 1e-12, trials)];
    for (k, w) in worst.iter().enumerate() {
        rows.push(VerifyRow::exact(
            format!("lipschitz k={}", k + 1),
            *w,
            1.0 + 1e-12,
            trials,
        ));
    }
    Ok(rows)
}

/// A model within `eps` of `mdp`: rows mixed with another kernel at weight
/// `eps / 2` (so each row moves by at most `eps` in L1) and rewards shifted
/// by at most `eps`.
pub fn perturb(mdp: &FiniteMdp, eps: f64, rng: &mut StreamRng) -> Result<FiniteMdp> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let other = BeliefState::uniform(ns, na).sample_mdp(mdp.discount(), rng);
    let lambda = eps / 2.0;
    let transition = mdp
        .transitions()
        .iter()
        .zip(other.transitions())
        .map(|(p, q)| (1.0 - lambda) * p + lambda * q)
        .collect();
    let rewards = mdp
        .rewards()
        .iter()
        .map(|r| (r + eps * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
        .collect();
    Ok(FiniteMdp::new(ns, na, transition, rewards, mdp.discount())?)
}

/// Largest row L1 distance between two kernels and largest reward gap.
pub fn model_distance(a: &FiniteMdp, b: &FiniteMdp) -> f64 {
    let ns = a.n_states();
    let kernel = a
        .transitions()
        .chunks(ns)
        .zip(b.transitions().chunks(ns))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let reward = a
        .rewards()
        .iter()
        .zip(b.rewards())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    kernel.max(reward)
}

pub const PERTURBATION_GRID: [(f64, f64); 4] = [(0.01, 0.5), (0.01, 0.9), (0.1, 0.5), (0.1, 0.9)];

fn perturbation(trials: u64, streams: &Streams) -> Result<Vec<VerifyRow>> {
    let mut worst = [0.0f64; 4];
    let mut counts = [0u64; 4];
    for t in 0..trials {
        let cell = (t % 4) as usize;
        let (eps, gamma) = PERTURBATION_GRID[cell];
        let mut rng = streams.stream(Domain::Experiment, 0, t);
        let (ns, na) = (rng.random_range(2..=4), rng.random_range(1..=3));
        let mdp = BeliefState::uniform(ns, na).sample_mdp(gamma, &mut rng);
        let near = perturb(&mdp, eps, &mut rng)?;
        debug_assert!(model_distance(&mdp, &near) <= eps + 1e-12);
        let policy = Policy((0..ns).map(|_| rng.random_range(0..na)).collect());
        let v = policy_evaluation(&mdp, &policy)?;
        let w = policy_evaluation(&near, &policy)?;
        let gap = v.0.iter().zip(&w.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst[cell] = worst[cell].max(gap / perturbation_gap(eps, gamma)?);
        counts[cell] += 1;
    }
    Ok(PERTURBATION_GRID
        .iter()
        .enumerate()
        .map(|(i, (eps, gamma))| VerifyRow::exact(format!("eps={eps} gamma={gamma}"), worst[i], 1.0, counts[i]))
        .collect())
}

/// Random normalized weights; every tenth vector is one-hot.
pub fn random_weights(index: u64, rng: &mut StreamRng) -> Vec<f64> {
    let n = rng.random_range(1..=20);
    if index.is_multiple_of(10) {
        let mut w = vec![0.0; n];
        w[rng.random_range(0..n)] = 1.0;
        return w;
    }
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn weighted_averages(trials: u64, streams: &Streams) -> Result<Vec<VerifyRow>> {
    let mut uniform_err: f64 = 0.0;
    let mut max_sq: f64 = 0.0;
    let mut spurious = 0u64;
    let mut degenerate_err: f64 = 0.0;
    for t in 0..trials {
        let mut rng = streams.stream(Domain::Experiment, 0, t);
        let n = rng.random_range(1..=50u64);
        let (h, eps) = (0.1 + 2.0 * rng.random::<f64>(), rng.random::<f64>());
        let uniform = vec![1.0 / n as f64; n as usize];
        uniform_err = uniform_err.max((weighted_hoeffding(&uniform, h, eps)? - hoeffding(n, h, eps)).abs());
        let w = random_weights(t, &mut rng);
        let sq: f64 = w.iter().map(|x| x * x).sum();
        max_sq = max_sq.max(sq);
        let one_hot = w.iter().filter(|&&x| x > 0.0).count() == 1;
        if one_hot {
            degenerate_err = degenerate_err.max((sq - 1.0).abs());
        } else if sq >= 1.0 - 1e-12 {
            spurious += 1;
        }
    }
    let mut rows = vec![
        VerifyRow::exact("uniform weights", uniform_err, 1e-12, trials),
        VerifyRow::exact("sum of squares", max_sq, 1.0, trials),
        VerifyRow::exact("degenerate sum of squares", degenerate_err, 1e-12, trials),
        VerifyRow::exact("non-degenerate at one", spurious as f64, 0.0, trials),
    ];
    // Deviation frequencies of weighted means of Uniform[0, 1] draws.
    let mut rng = streams.stream(Domain::Experiment, 1, 0);
    for (i, eps) in [0.1, 0.2, 0.3].into_iter().enumerate() {
        let w = random_weights(i as u64 + 1, &mut rng);
        let bound = weighted_hoeffding(&w, 1.0, eps)?;
        let hits = (0..trials)
            .filter(|&t| {
                let mut r = streams.stream(Domain::Experiment, 2 + i as u64, t);
                let mean: f64 = w.iter().map(|wi| wi * r.random::<f64>()).sum();
                mean - 0.5 >= eps
            })
            .count() as u64;
        rows.push(VerifyRow::tail(
            format!("deviation eps={eps} n={}", w.len()),
            hits,
            trials,
            bound,
        ));
    }
    Ok(rows)
}
