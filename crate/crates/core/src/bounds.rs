//! Monte-Carlo and exact bounds on hyper-state values.
//!
//! For a hyper-state `(s, xi)` the Bayes-optimal value lies between
//! `E_xi[V^{pi*(mean MDP)}_mu(s)]` and `E_xi[V*_mu(s)]`. Upper draws solve a
//! sampled MDP; lower draws evaluate the mean-MDP optimal policy on it.

use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;
use rand::Rng;

use crate::belief::Posterior;
use crate::error::{bail, Result};
use crate::mdp::{policy_evaluation, solve_optimal, FiniteMdp, Policy};
use crate::rng::{Domain, Streams};

/// Running record of bound draws at one node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundEstimate {
    samples: Vec<f64>,
    sum: f64,
}

impl BoundEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<f64>) -> Self {
        let sum = samples.iter().sum();
        Self { samples, sum }
    }

    pub fn push(&mut self, value: f64) {
        self.samples.push(value);
        self.sum += value;
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    /// Sample mean, `None` before the first draw.
    pub fn mean(&self) -> Option<f64> {
        (!self.samples.is_empty()).then(|| self.sum / self.samples.len() as f64)
    }

    /// Standard error of the mean, `None` with fewer than two draws.
    pub fn std_error(&self) -> Option<f64> {
        let n = self.samples.len();
        if n < 2 {
            return None;
        }
        let mean = self.sum / n as f64;
        let var = self.samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Some((var / n as f64).sqrt())
    }
}

/// A hyper-state: the current MDP state and the posterior over MDPs.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperState<B> {
    pub state: usize,
    pub belief: B,
}

impl<B: Posterior> HyperState<B> {
    pub fn new(state: usize, belief: B) -> Self {
        Self { state, belief }
    }

    pub fn validate(&self) -> Result<()> {
        if self.state >= self.belief.n_states() {
            bail!(
                Validation,
                "state {} out of range for {} states",
                self.state,
                self.belief.n_states()
            );
        }
        Ok(())
    }
}

/// The policy the lower bound pins: optimal for the mean MDP.
pub fn pinned_policy<B: Posterior>(hyper: &HyperState<B>, discount: f64) -> Result<Policy> {
    let mean = hyper.belief.mean_mdp(discount)?;
    Ok(solve_optimal(&mean)?.1)
}

/// One upper draw `V*_mu(s)` with `mu ~ xi`.
pub fn sample_upper<B: Posterior, R: Rng + ?Sized>(hyper: &HyperState<B>, discount: f64, rng: &mut R) -> Result<f64> {
    let mu = hyper.belief.sample_mdp(discount, rng);
    Ok(solve_optimal(&mu)?.0.value(hyper.state))
}

/// One lower draw `V^{pinned}_mu(s)` with `mu ~ xi`.
pub fn sample_lower<B: Posterior, R: Rng + ?Sized>(
    hyper: &HyperState<B>,
    pinned: &Policy,
    discount: f64,
    rng: &mut R,
) -> Result<f64> {
    let mu = hyper.belief.sample_mdp(discount, rng);
    Ok(policy_evaluation(&mu, pinned)?.value(hyper.state))
}

/// Lower and upper draws on one shared sampled MDP.
pub fn sample_pair<B: Posterior, R: Rng + ?Sized>(
    hyper: &HyperState<B>,
    pinned: &Policy,
    discount: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mu = hyper.belief.sample_mdp(discount, rng);
    let upper = solve_optimal(&mu)?.0.value(hyper.state);
    let lower = policy_evaluation(&mu, pinned)?.value(hyper.state);
    Ok((lower, upper))
}

/// Per-action lower draws `Q^{pinned}_mu(s, a)` on one sampled MDP.
pub fn sample_action_lower<B: Posterior, R: Rng + ?Sized>(
    hyper: &HyperState<B>,
    pinned: &Policy,
    discount: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mu = hyper.belief.sample_mdp(discount, rng);
    let v = policy_evaluation(&mu, pinned)?;
    Ok((0..mu.n_actions())
        .map(|a| mu.q_value(hyper.state, a, v.as_slice()))
        .collect())
}

/// `m` paired draws; draw `j` uses stream `(Paired, key, j)`.
pub fn estimate_bounds<B: Posterior>(
    hyper: &HyperState<B>,
    discount: f64,
    m: usize,
    streams: &Streams,
    key: u64,
) -> Result<(BoundEstimate, BoundEstimate)> {
    if m == 0 {
        bail!(Validation, "at least one draw is required");
    }
    let pinned = pinned_policy(hyper, discount)?;
    let mut lower = BoundEstimate::new();
    let mut upper = BoundEstimate::new();
    for j in 0..m {
        let mut rng = streams.stream(Domain::Paired, key, j as u64);
        let (l, u) = sample_pair(hyper, &pinned, discount, &mut rng)?;
        lower.push(l);
        upper.push(u);
    }
    Ok((lower, upper))
}

/// Exact bounds for a finite-support posterior, state values and per-action
/// `Q` forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBounds {
    pub lower: f64,
    pub upper: f64,
    /// `sum_k w_k Q^{pi*(mean)}_{mu_k}(s, a)` per action.
    pub action_lower: Vec<f64>,
    /// `sum_k w_k Q*_{mu_k}(s, a)` per action.
    pub action_upper: Vec<f64>,
}

fn check_support<M: Borrow<FiniteMdp>>(state: usize, support: &[(M, f64)]) -> Result<()> {
    if support.is_empty() {
        bail!(Validation, "finite support is empty");
    }
    let first = support[0].0.borrow();
    if state >= first.n_states() {
        bail!(Validation, "state {state} out of range");
    }
    if support.iter().any(|(m, w)| {
        let m = m.borrow();
        !(*w > 0.0) || m.n_states() != first.n_states() || m.n_actions() != first.n_actions()
    }) {
        bail!(Validation, "support weights must be positive over MDPs of one shape");
    }
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!(Validation, "support weights sum to {total}, expected 1");
    }
    Ok(())
}

fn weighted_mean_mdp<M: Borrow<FiniteMdp>>(support: &[(M, f64)], discount: f64) -> FiniteMdp {
    let first = support[0].0.borrow();
    let mut transition = vec![0.0; first.transitions().len()];
    let mut rewards = vec![0.0; first.rewards().len()];
    for (m, w) in support {
        let m = m.borrow();
        for (acc, p) in transition.iter_mut().zip(m.transitions()) {
            *acc += w * p;
        }
        for (acc, r) in rewards.iter_mut().zip(m.rewards()) {
            *acc += w * r;
        }
    }
    for row in transition.chunks_mut(first.n_states()) {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    FiniteMdp::from_raw(first.n_states(), first.n_actions(), transition, rewards, discount)
}

/// `(lower, upper)` at `state` for the posterior `support`, as finite sums.
pub fn exact_bounds<M: Borrow<FiniteMdp>>(state: usize, support: &[(M, f64)], discount: f64) -> Result<(f64, f64)> {
    let b = exact_action_bounds(state, support, discount)?;
    Ok((b.lower, b.upper))
}

pub fn exact_action_bounds<M: Borrow<FiniteMdp>>(
    state: usize,
    support: &[(M, f64)],
    discount: f64,
) -> Result<ExactBounds> {
    check_support(state, support)?;
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    let mean = weighted_mean_mdp(support, discount);
    let pinned = solve_optimal(&mean)?.1;
    let n_actions = mean.n_actions();
    let mut out = ExactBounds {
        lower: 0.0,
        upper: 0.0,
        action_lower: vec![0.0; n_actions],
        action_upper: vec![0.0; n_actions],
    };
    for (m, w) in support {
        let w = w / total;
        let m = m.borrow();
        let mu = FiniteMdp::from_raw(
            m.n_states(),
            m.n_actions(),
            m.transitions().to_vec(),
            m.rewards().to_vec(),
            discount,
        );
        let (v_star, _) = solve_optimal(&mu)?;
        let v_pin = policy_evaluation(&mu, &pinned)?;
        out.upper += w * v_star.value(state);
        out.lower += w * v_pin.value(state);
        for a in 0..n_actions {
            out.action_upper[a] += w * mu.q_value(state, a, v_star.as_slice());
            out.action_lower[a] += w * mu.q_value(state, a, v_pin.as_slice());
        }
    }
    Ok(out)
}
