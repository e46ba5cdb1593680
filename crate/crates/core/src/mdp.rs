//! Known finite MDPs: representation, exact policy evaluation and optimal
//! control.
//!
//! Values follow the backwards-induction convention used throughout the
//! crate: the immediate reward is undiscounted,
//! `V(s) = max_a [ r(s,a) + gamma * sum_s' P(s'|s,a) V(s') ]`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg;

/// Row-sum tolerance for transition distributions.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Default accuracy for [`value_iteration`].
pub const DEFAULT_VI_TOL: f64 = 1e-9;

/// Relative tolerance under which two action values count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// `transition[(s * n_actions + a) * n_states + s']`
    transition: Vec<f64>,
    /// `mean_reward[s * n_actions + a]`, the Bernoulli success probability.
    mean_reward: Vec<f64>,
    discount: f64,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        mean_reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            mean_reward,
            discount,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Builds an MDP without checking it. Callers guarantee the invariants.
    pub(crate) fn from_raw(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        mean_reward: Vec<f64>,
        discount: f64,
    ) -> Self {
        Self {
            n_states,
            n_actions,
            transition,
            mean_reward,
            discount,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, na) = (self.n_states, self.n_actions);
        if ns == 0 || na == 0 {
            bail!(Validation, "an MDP needs at least one state and one action");
        }
        if self.transition.len() != ns * na * ns {
            bail!(
                Validation,
                "transition table has {} entries, expected {}",
                self.transition.len(),
                ns * na * ns
            );
        }
        if self.mean_reward.len() != ns * na {
            bail!(
                Validation,
                "reward table has {} entries, expected {}",
                self.mean_reward.len(),
                ns * na
            );
        }
        if !(0.0..1.0).contains(&self.discount) {
            bail!(Validation, "discount {} outside [0, 1)", self.discount);
        }
        for s in 0..ns {
            for a in 0..na {
                let row = self.row(s, a);
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    bail!(
                        Validation,
                        "transition row ({s}, {a}) has a negative or non-finite entry"
                    );
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > STOCHASTIC_TOL {
                    bail!(Validation, "transition row ({s}, {a}) sums to {total}");
                }
                let r = self.reward(s, a);
                if !(0.0..=1.0).contains(&r) {
                    bail!(Validation, "mean reward {r} at ({s}, {a}) outside [0, 1]");
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            bail!(Validation, "discount {discount} outside [0, 1)");
        }
        self.discount = discount;
        Ok(self)
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.mean_reward[s * self.n_actions + a]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    pub fn rewards(&self) -> &[f64] {
        &self.mean_reward
    }

    /// One-step lookahead `r(s,a) + gamma * E[V(s')]`.
    pub fn q_value(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        let future: f64 = self.row(s, a).iter().zip(values).map(|(p, v)| p * v).sum();
        self.reward(s, a) + self.discount * future
    }

    /// Greedy deterministic policy with respect to `values`, lowest action
    /// index on ties.
    pub fn greedy_policy(&self, values: &[f64]) -> Policy {
        let actions = (0..self.n_states)
            .map(|s| {
                let q: Vec<f64> = (0..self.n_actions).map(|a| self.q_value(s, a, values)).collect();
                argmax_lowest(&q)
            })
            .collect();
        Policy(actions)
    }

    fn bellman(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| {
                (0..self.n_actions)
                    .map(|a| self.q_value(s, a, values))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    /// Largest absolute Bellman-optimality residual `|T V - V|`.
    pub fn bellman_residual(&self, values: &[f64]) -> f64 {
        self.bellman(values)
            .iter()
            .zip(values)
            .map(|(t, v)| (t - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy(pub Vec<usize>);

impl Policy {
    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn validate_for(&self, mdp: &FiniteMdp) -> Result<()> {
        if self.0.len() != mdp.n_states() {
            bail!(
                Validation,
                "policy covers {} states, MDP has {}",
                self.0.len(),
                mdp.n_states()
            );
        }
        if let Some((s, a)) = self.0.iter().enumerate().find(|(_, &a)| a >= mdp.n_actions()) {
            bail!(
                Validation,
                "policy picks action {a} in state {s}, MDP has {}",
                mdp.n_actions()
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn value(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Index of the largest entry; among entries within a relative `1e-12` of
/// the maximum the lowest index wins.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * best.abs().max(1.0);
    values.iter().position(|&v| v >= best - slack).unwrap_or(0)
}

/// Value iteration to sup-norm accuracy `tol`, plus the greedy policy.
///
/// Iterates the Bellman operator until successive iterates differ by at most
/// `tol * (1 - gamma) / (2 * gamma)`, which puts the returned values within
/// `tol / 2` of the fixed point.
pub fn value_iteration(mdp: &FiniteMdp, tol: f64) -> Result<(ValueFunction, Policy)> {
    if !(tol > 0.0) {
        bail!(Validation, "value iteration tolerance must be positive, got {tol}");
    }
    mdp.validate()?;
    let gamma = mdp.discount();
    let mut values = vec![0.0; mdp.n_states()];
    if gamma == 0.0 {
        values = mdp.bellman(&values);
    } else {
        let threshold = tol * (1.0 - gamma) / (2.0 * gamma);
        loop {
            let next = mdp.bellman(&values);
            let change = next.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            values = next;
            if change <= threshold {
                break;
            }
        }
    }
    let policy = mdp.greedy_policy(&values);
    Ok((ValueFunction(values), policy))
}

/// Exact value of a deterministic policy from `(I - gamma P_pi) V = r_pi`.
pub fn policy_evaluation(mdp: &FiniteMdp, policy: &Policy) -> Result<ValueFunction> {
    policy.validate_for(mdp)?;
    Ok(ValueFunction(evaluate_unchecked(mdp, policy)?))
}

fn evaluate_unchecked(mdp: &FiniteMdp, policy: &Policy) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let mut matrix = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for s in 0..n {
        let a = policy.action(s);
        for (t, p) in mdp.row(s, a).iter().enumerate() {
            matrix[s * n + t] = -gamma * p;
        }
        matrix[s * n + s] += 1.0;
        rhs[s] = mdp.reward(s, a);
    }
    let mut values = linalg::solve(matrix.clone(), rhs.clone(), n)?;
    // One round of iterative refinement keeps the residual near machine precision.
    let residual: Vec<f64> = (0..n)
        .map(|s| rhs[s] - (0..n).map(|t| matrix[s * n + t] * values[t]).sum::<f64>())
        .collect();
    if residual.iter().any(|r| r.abs() > 1e-14) {
        let correction = linalg::solve(matrix, residual, n)?;
        for (v, c) in values.iter_mut().zip(correction) {
            *v += c;
        }
    }
    Ok(values)
}

/// Optimal values and policy by policy iteration.
///
/// Exact up to linear-solve round-off, and much cheaper than value
/// iteration at high discounts; this is the solver behind every bound draw.
/// The returned policy is greedy with respect to the returned values with
/// lowest-index tie-breaking.
pub fn solve_optimal(mdp: &FiniteMdp) -> Result<(ValueFunction, Policy)> {
    let mut policy = Policy(
        (0..mdp.n_states())
            .map(|s| {
                let r: Vec<f64> = (0..mdp.n_actions()).map(|a| mdp.reward(s, a)).collect();
                argmax_lowest(&r)
            })
            .collect(),
    );
    // Policy iteration terminates in at most |A|^|S| steps; the cap only
    // guards against round-off cycling between equally good policies.
    let max_rounds = 64 + 4 * mdp.n_states() * mdp.n_actions();
    let mut values = evaluate_unchecked(mdp, &policy)?;
    for _ in 0..max_rounds {
        let mut changed = false;
        for s in 0..mdp.n_states() {
            let current = mdp.q_value(s, policy.action(s), &values);
            let q: Vec<f64> = (0..mdp.n_actions()).map(|a| mdp.q_value(s, a, &values)).collect();
            let best = argmax_lowest(&q);
            if q[best] > current + TIE_TOL * current.abs().max(1.0) {
                policy.0[s] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        values = evaluate_unchecked(mdp, &policy)?;
    }
    let policy = mdp.greedy_policy(&values);
    Ok((ValueFunction(values), policy))
}

/// Sup-norm bound `eps / (1 - gamma)^2` on `|V^pi - V'^pi|` for two MDPs whose
/// transition kernels (induced infinity norm) and reward tables differ by at
/// most `eps`.
pub fn perturbation_gap(epsilon: f64, gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        bail!(Domain, "discount {gamma} outside [0, 1)");
    }
    if !(epsilon >= 0.0) {
        bail!(Domain, "perturbation size {epsilon} must be non-negative");
    }
    Ok(epsilon / ((1.0 - gamma) * (1.0 - gamma)))
}


#[cfg(test)]
mod tests {
    use super::testutil::random_mdp;
    use super::*;
    use crate::rng::{Domain, Streams};
    use rand::Rng;

    fn single(r: f64, gamma: f64) -> FiniteMdp {
        FiniteMdp::new(1, 1, vec![1.0], vec![r], gamma).unwrap()
    }

    /// Closed-form 2x2 solve of (I - gamma P) v = r by Cramer's rule.
    fn evaluate_2x2(mdp: &FiniteMdp, policy: [usize; 2]) -> [f64; 2] {
        let g = mdp.discount();
        let p0 = mdp.row(0, policy[0]);
        let p1 = mdp.row(1, policy[1]);
        let (a, b) = (1.0 - g * p0[0], -g * p0[1]);
        let (c, d) = (-g * p1[0], 1.0 - g * p1[1]);
        let (r0, r1) = (mdp.reward(0, policy[0]), mdp.reward(1, policy[1]));
        let det = a * d - b * c;
        [(r0 * d - b * r1) / det, (a * r1 - c * r0) / det]
    }

    #[test]
    fn geometric_series_single_state() {
        let (v, pi) = value_iteration(&single(1.0, 0.5), DEFAULT_VI_TOL).unwrap();
        assert!((v.value(0) - 2.0).abs() < 1e-9);
        assert_eq!(pi, Policy(vec![0]));
    }

    #[test]
    fn zero_rewards_zero_values() {
        let mut rng = Streams::new(3).stream(Domain::Experiment, 0, 0);
        let base = random_mdp(&mut rng, 3, 2, 0.9);
        let mdp = FiniteMdp::new(3, 2, base.transitions().to_vec(), vec![0.0; 6], 0.9).unwrap();
        let (v, _) = value_iteration(&mdp, DEFAULT_VI_TOL).unwrap();
        assert!(v.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn value_iteration_matches_policy_enumeration() {
        let mut rng = Streams::new(11).stream(Domain::Experiment, 0, 0);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 2, 2, 0.9);
            let mut best = [f64::NEG_INFINITY; 2];
            for a0 in 0..2 {
                for a1 in 0..2 {
                    let v = evaluate_2x2(&mdp, [a0, a1]);
                    best[0] = best[0].max(v[0]);
                    best[1] = best[1].max(v[1]);
                }
            }
            let (v, _) = value_iteration(&mdp, DEFAULT_VI_TOL).unwrap();
            assert!((v.value(0) - best[0]).abs() < 1e-6);
            assert!((v.value(1) - best[1]).abs() < 1e-6);
            let (exact, _) = solve_optimal(&mdp).unwrap();
            assert!((exact.value(0) - best[0]).abs() < 1e-10);
            assert!((exact.value(1) - best[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn single_state_policy_evaluation() {
        let v = policy_evaluation(&single(0.5, 0.5), &Policy(vec![0])).unwrap();
        assert!((v.value(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn policy_evaluation_residual() {
        let mut rng = Streams::new(5).stream(Domain::Experiment, 0, 0);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 4, 3, 0.95);
            let policy = Policy((0..4).map(|_| rng.random_range(0..3)).collect());
            let v = policy_evaluation(&mdp, &policy).unwrap();
            for s in 0..4 {
                let residual = v.value(s) - mdp.q_value(s, policy.action(s), v.as_slice());
                assert!(residual.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn optimal_policy_evaluation_matches_value_iteration() {
        // Uniform chain: every action moves to a uniformly random state.
        let ns = 4;
        let transition = vec![0.25; ns * 2 * ns];
        let rewards = vec![0.1, 0.9, 0.4, 0.3, 0.8, 0.2, 0.6, 0.6];
        let mdp = FiniteMdp::new(ns, 2, transition, rewards, 0.8).unwrap();
        let (v, pi) = value_iteration(&mdp, 1e-9).unwrap();
        let exact = policy_evaluation(&mdp, &pi).unwrap();
        for s in 0..ns {
            assert!((v.value(s) - exact.value(s)).abs() <= 1e-9);
        }
    }

    #[test]
    fn policy_evaluation_matches_rollouts() {
        let streams = Streams::new(99);
        let mut rng = streams.stream(Domain::Experiment, 0, 0);
        let mdp = random_mdp(&mut rng, 3, 2, 0.8);
        let policy = Policy(vec![1, 0, 1]);
        let exact = policy_evaluation(&mdp, &policy).unwrap();
        let horizon = 120; // 0.8^120 < 1e-11
        let runs = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..runs {
            let mut s = 0;
            let mut ret = 0.0;
            let mut weight = 1.0;
            for _ in 0..horizon {
                let a = policy.action(s);
                if rng.random::<f64>() < mdp.reward(s, a) {
                    ret += weight;
                }
                weight *= 0.8;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut next = mdp.n_states() - 1;
                for (t, p) in mdp.row(s, a).iter().enumerate() {
                    acc += p;
                    if u < acc {
                        next = t;
                        break;
                    }
                }
                s = next;
            }
            sum += ret;
            sum_sq += ret * ret;
        }
        let mean = sum / runs as f64;
        let se = ((sum_sq / runs as f64 - mean * mean) / runs as f64).sqrt();
        assert!(
            (mean - exact.value(0)).abs() <= 3.0 * se,
            "{mean} vs {}",
            exact.value(0)
        );
    }

    #[test]
    fn bellman_residual_within_tolerance() {
        let mut rng = Streams::new(21).stream(Domain::Experiment, 0, 0);
        for &gamma in &[0.3, 0.9, 0.99] {
            let mdp = random_mdp(&mut rng, 5, 3, gamma);
            let tol = 1e-6;
            let (v, _) = value_iteration(&mdp, tol).unwrap();
            assert!(mdp.bellman_residual(v.as_slice()) <= tol * (1.0 + gamma) / (1.0 - gamma));
        }
    }

    #[test]
    fn greedy_policy_dominates_every_policy() {
        let mut rng = Streams::new(8).stream(Domain::Experiment, 0, 0);
        let tol = 1e-9;
        for _ in 0..10 {
            let mdp = random_mdp(&mut rng, 3, 3, 0.9);
            let (_, greedy) = value_iteration(&mdp, tol).unwrap();
            let greedy_v = policy_evaluation(&mdp, &greedy).unwrap();
            for code in 0..27 {
                let pi = Policy(vec![code % 3, (code / 3) % 3, code / 9]);
                let v = policy_evaluation(&mdp, &pi).unwrap();
                for s in 0..3 {
                    assert!(greedy_v.value(s) >= v.value(s) - 2.0 * tol);
                }
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_action() {
        let mdp = FiniteMdp::new(1, 3, vec![1.0; 3], vec![0.5, 0.5, 0.5], 0.9).unwrap();
        let (_, pi) = value_iteration(&mdp, 1e-9).unwrap();
        assert_eq!(pi, Policy(vec![0]));
        assert_eq!(solve_optimal(&mdp).unwrap().1, Policy(vec![0]));
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = FiniteMdp::new(1, 1, vec![0.9], vec![0.5], 0.5).unwrap_err();
        assert!(matches!(err, crate::Error::Validation(_)));
        let err = FiniteMdp::new(2, 1, vec![1.2, -0.2, 0.5, 0.5], vec![0.5, 0.5], 0.5).unwrap_err();
        assert!(matches!(err, crate::Error::Validation(_)));
        assert!(value_iteration(&single(1.0, 0.5), 0.0).is_err());
    }

    #[test]
    fn policy_dimension_mismatch() {
        let mdp = single(0.5, 0.5);
        assert!(policy_evaluation(&mdp, &Policy(vec![0, 0])).is_err());
        assert!(policy_evaluation(&mdp, &Policy(vec![1])).is_err());
    }

    #[test]
    fn perturbation_gap_values() {
        assert!((perturbation_gap(0.1, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(perturbation_gap(0.0, 0.7).unwrap(), 0.0);
        assert!((perturbation_gap(0.01, 0.9).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(perturbation_gap(0.1, 1.0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn perturbed_values_stay_within_gap() {
        let mut rng = Streams::new(17).stream(Domain::Experiment, 7, 0);
        for trial in 0..100 {
            let gamma = [0.5, 0.9][trial % 2];
            let eps = [0.01, 0.1][(trial / 2) % 2];
            let mdp = random_mdp(&mut rng, 3, 2, gamma);
            let other = random_mdp(&mut rng, 3, 2, gamma);
            // Mixing with weight eps/2 moves every row by at most eps in L1.
            let lambda = eps / 2.0;
            let transition: Vec<f64> = mdp
                .transitions()
                .iter()
                .zip(other.transitions())
                .map(|(p, q)| (1.0 - lambda) * p + lambda * q)
                .collect();
            let rewards: Vec<f64> = mdp
                .rewards()
                .iter()
                .map(|r| (r + eps * (2.0 * rng.random::<f64>() - 1.0)).clamp(0.0, 1.0))
                .collect();
            let near = FiniteMdp::new(3, 2, transition, rewards, gamma).unwrap();
            let policy = Policy((0..3).map(|_| rng.random_range(0..2)).collect());
            let v = policy_evaluation(&mdp, &policy).unwrap();
            let w = policy_evaluation(&near, &policy).unwrap();
            let gap = v.0.iter().zip(&w.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= perturbation_gap(eps, gamma).unwrap(), "trial {trial}");
        }
    }
}
