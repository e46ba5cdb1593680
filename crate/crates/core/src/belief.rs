//! Posteriors over finite MDPs with Bernoulli rewards.
//!
//! [`BeliefState`] is the conjugate Dirichlet (transitions) and Beta
//! (rewards) posterior. [`MixtureBelief`] is a Bayes posterior over a finite
//! list of MDPs; it exists so that bound values can be computed exactly.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{bail, Result};
use crate::mdp::FiniteMdp;

/// One observed step `(s, a, r, s')` with `r` in `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: u8,
    pub s_next: usize,
}

impl Transition {
    pub fn new(s: usize, a: usize, r: u8, s_next: usize) -> Self {
        Self { s, a, r, s_next }
    }

    fn check(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.s >= n_states || self.s_next >= n_states || self.a >= n_actions || self.r > 1 {
            bail!(
                Validation,
                "transition {:?} out of range for {} states, {} actions",
                self,
                n_states,
                n_actions
            );
        }
        Ok(())
    }
}

/// Joint one-step predictive over `(r, s')` for a fixed `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    n_states: usize,
    /// `probs[r * n_states + s']`
    probs: Vec<f64>,
}

impl Predictive {
    pub fn prob(&self, r: u8, s_next: usize) -> f64 {
        self.probs[r as usize * self.n_states + s_next]
    }

    /// Expected reward, `Pr(r = 1)`.
    pub fn expected_reward(&self) -> f64 {
        self.probs[self.n_states..].iter().sum()
    }

    /// Marginal over next states.
    pub fn next_state_marginal(&self) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| self.probs[s] + self.probs[self.n_states + s])
            .collect()
    }

    /// Outcomes `(s', r, probability)` ordered by `s'` then `r`.
    pub fn outcomes(&self) -> impl Iterator<Item = (usize, u8, f64)> + '_ {
        (0..self.n_states).flat_map(move |s| (0..2u8).map(move |r| (s, r, self.prob(r, s))))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// A posterior over MDPs sharing one state and action space.
pub trait Posterior: Clone + PartialEq + Send + Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// The posterior after observing `obs`.
    fn update(&self, obs: &Transition) -> Result<Self>;
    fn predictive(&self, s: usize, a: usize) -> Result<Predictive>;
    /// The MDP whose kernel and rewards are the posterior expectations.
    fn mean_mdp(&self, discount: f64) -> Result<FiniteMdp>;
    /// One MDP drawn from the posterior.
    fn sample_mdp<R: Rng + ?Sized>(&self, discount: f64, rng: &mut R) -> FiniteMdp;
    /// The posterior as an explicit weighted list, when it has finite support.
    fn support(&self) -> Option<Vec<(Arc<FiniteMdp>, f64)>>;
}

/// Dirichlet counts per transition row and Beta parameters per reward.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    n_states: usize,
    n_actions: usize,
    /// `transition_counts[(s * n_actions + a) * n_states + s']`
    transition_counts: Vec<f64>,
    /// `(alpha, beta)` per `s * n_actions + a`
    reward_params: Vec<(f64, f64)>,
}

impl BeliefState {
    /// The uninformative prior: all Dirichlet counts 1 and Beta(1, 1) rewards.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            transition_counts: vec![1.0; n_states * n_actions * n_states],
            reward_params: vec![(1.0, 1.0); n_states * n_actions],
        }
    }

    pub fn from_parts(
        n_states: usize,
        n_actions: usize,
        transition_counts: Vec<f64>,
        reward_params: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            bail!(Validation, "a belief needs at least one state and one action");
        }
        if transition_counts.len() != n_states * n_actions * n_states {
            bail!(
                Validation,
                "expected {} transition counts, got {}",
                n_states * n_actions * n_states,
                transition_counts.len()
            );
        }
        if reward_params.len() != n_states * n_actions {
            bail!(
                Validation,
                "expected {} reward parameter pairs, got {}",
                n_states * n_actions,
                reward_params.len()
            );
        }
        if transition_counts.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            bail!(Validation, "transition counts must be positive and finite");
        }
        if reward_params
            .iter()
            .any(|&(a, b)| !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0))
        {
            bail!(Validation, "Beta parameters must be positive and finite");
        }
        Ok(Self {
            n_states,
            n_actions,
            transition_counts,
            reward_params,
        })
    }

    pub fn transition_counts(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition_counts[start..start + self.n_states]
    }

    pub fn reward_params(&self, s: usize, a: usize) -> (f64, f64) {
        self.reward_params[s * self.n_actions + a]
    }

    fn check_pair(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.n_states || a >= self.n_actions {
            bail!(Validation, "state-action ({s}, {a}) out of range");
        }
        Ok(())
    }

    pub fn posterior_update(&self, obs: &Transition) -> Result<Self> {
        obs.check(self.n_states, self.n_actions)?;
        let mut next = self.clone();
        next.transition_counts[(obs.s * self.n_actions + obs.a) * self.n_states + obs.s_next] += 1.0;
        let params = &mut next.reward_params[obs.s * self.n_actions + obs.a];
        if obs.r == 1 {
            params.0 += 1.0;
        } else {
            params.1 += 1.0;
        }
        Ok(next)
    }

    pub fn mean_mdp(&self, discount: f64) -> Result<FiniteMdp> {
        let mut transition = Vec::with_capacity(self.transition_counts.len());
        for row in self.transition_counts.chunks(self.n_states) {
            let total: f64 = row.iter().sum();
            transition.extend(row.iter().map(|c| c / total));
        }
        let rewards = self.reward_params.iter().map(|&(a, b)| a / (a + b)).collect();
        FiniteMdp::new(self.n_states, self.n_actions, transition, rewards, discount)
    }

    pub fn predictive_distribution(&self, s: usize, a: usize) -> Result<Predictive> {
        self.check_pair(s, a)?;
        let row = self.transition_counts(s, a);
        let total: f64 = row.iter().sum();
        let (alpha, beta) = self.reward_params(s, a);
        let p_one = alpha / (alpha + beta);
        let mut probs = Vec::with_capacity(2 * self.n_states);
        probs.extend(row.iter().map(|c| (1.0 - p_one) * c / total));
        probs.extend(row.iter().map(|c| p_one * c / total));
        Ok(Predictive {
            n_states: self.n_states,
            probs,
        })
    }

    /// Draws each transition row from its Dirichlet and each reward mean from
    /// its Beta, independently.
    pub fn sample_mdp<R: Rng + ?Sized>(&self, discount: f64, rng: &mut R) -> FiniteMdp {
        let mut transition = Vec::with_capacity(self.transition_counts.len());
        let mut logs = vec![0.0; self.n_states];
        for row in self.transition_counts.chunks(self.n_states) {
            for (l, &c) in logs.iter_mut().zip(row) {
                *l = log_gamma_variate(c, rng);
            }
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
            transition.extend(logs.iter().map(|l| (l - top).exp() / total));
        }
        let rewards = self
            .reward_params
            .iter()
            .map(|&(a, b)| {
                let la = log_gamma_variate(a, rng);
                let lb = log_gamma_variate(b, rng);
                1.0 / (1.0 + (lb - la).exp())
            })
            .collect();
        FiniteMdp::from_raw(self.n_states, self.n_actions, transition, rewards, discount)
    }
}

/// Logarithm of a Gamma(shape, 1) variate, accurate for tiny shapes.
///
/// For `shape < 1` uses `G(shape) = G(shape + 1) * U^(1 / shape)`, which
/// keeps the log finite where the variate itself would underflow to zero.
fn log_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

impl Posterior for BeliefState {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn update(&self, obs: &Transition) -> Result<Self> {
        self.posterior_update(obs)
    }

    fn predictive(&self, s: usize, a: usize) -> Result<Predictive> {
        self.predictive_distribution(s, a)
    }

    fn mean_mdp(&self, discount: f64) -> Result<FiniteMdp> {
        BeliefState::mean_mdp(self, discount)
    }

    fn sample_mdp<R: Rng + ?Sized>(&self, discount: f64, rng: &mut R) -> FiniteMdp {
        BeliefState::sample_mdp(self, discount, rng)
    }

    fn support(&self) -> Option<Vec<(Arc<FiniteMdp>, f64)>> {
        None
    }
}

/// Bayes posterior over a finite list of candidate MDPs.
///
/// The candidates' own discounts are ignored; every query takes the discount
/// explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBelief {
    components: Vec<Arc<FiniteMdp>>,
    weights: Vec<f64>,
}

impl MixtureBelief {
    pub fn new(components: Vec<FiniteMdp>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            bail!(Validation, "a mixture needs at least one component");
        }
        if components.len() != weights.len() {
            bail!(
                Validation,
                "{} components but {} weights",
                components.len(),
                weights.len()
            );
        }
        let (ns, na) = (components[0].n_states(), components[0].n_actions());
        if components.iter().any(|m| m.n_states() != ns || m.n_actions() != na) {
            bail!(Validation, "mixture components must share state and action counts");
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            bail!(Validation, "mixture weights must be positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            bail!(Validation, "mixture weights sum to {total}, expected 1");
        }
        Ok(Self {
            components: components.into_iter().map(Arc::new).collect(),
            weights,
        })
    }

    pub fn components(&self) -> &[Arc<FiniteMdp>] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn likelihood(mdp: &FiniteMdp, obs: &Transition) -> f64 {
        let p_r = mdp.reward(obs.s, obs.a);
        let p_r = if obs.r == 1 { p_r } else { 1.0 - p_r };
        p_r * mdp.row(obs.s, obs.a)[obs.s_next]
    }
}

impl Posterior for MixtureBelief {
    fn n_states(&self) -> usize {
        self.components[0].n_states()
    }

    fn n_actions(&self) -> usize {
        self.components[0].n_actions()
    }

    /// Bayes' rule on the weights. An observation impossible under every
    /// component leaves the belief unchanged.
    fn update(&self, obs: &Transition) -> Result<Self> {
        obs.check(self.n_states(), self.n_actions())?;
        let raw: Vec<f64> = self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * Self::likelihood(m, obs))
            .collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Ok(self.clone());
        }
        Ok(Self {
            components: self.components.clone(),
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    fn predictive(&self, s: usize, a: usize) -> Result<Predictive> {
        let ns = self.n_states();
        if s >= ns || a >= self.n_actions() {
            bail!(Validation, "state-action ({s}, {a}) out of range");
        }
        let mut probs = vec![0.0; 2 * ns];
        for (m, w) in self.components.iter().zip(&self.weights) {
            let p_one = m.reward(s, a);
            for (t, p) in m.row(s, a).iter().enumerate() {
                probs[t] += w * (1.0 - p_one) * p;
                probs[ns + t] += w * p_one * p;
            }
        }
        Ok(Predictive { n_states: ns, probs })
    }

    fn mean_mdp(&self, discount: f64) -> Result<FiniteMdp> {
        let first = &self.components[0];
        let mut transition = vec![0.0; first.transitions().len()];
        let mut rewards = vec![0.0; first.rewards().len()];
        for (m, w) in self.components.iter().zip(&self.weights) {
            for (acc, p) in transition.iter_mut().zip(m.transitions()) {
                *acc += w * p;
            }
            for (acc, r) in rewards.iter_mut().zip(m.rewards()) {
                *acc += w * r;
            }
        }
        let ns = first.n_states();
        for row in transition.chunks_mut(ns) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        for r in rewards.iter_mut() {
            *r = r.clamp(0.0, 1.0);
        }
        FiniteMdp::new(ns, first.n_actions(), transition, rewards, discount)
    }

    fn sample_mdp<R: Rng + ?Sized>(&self, discount: f64, rng: &mut R) -> FiniteMdp {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        let m = &self.components[pick];
        FiniteMdp::from_raw(
            m.n_states(),
            m.n_actions(),
            m.transitions().to_vec(),
            m.rewards().to_vec(),
            discount,
        )
    }

    fn support(&self) -> Option<Vec<(Arc<FiniteMdp>, f64)>> {
        Some(
            self.components
                .iter()
                .zip(&self.weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(m, w)| (m.clone(), *w))
                .collect(),
        )
    }
}

/// The k-step movement bound `k / (2 (n + k))` for a Dirichlet mean
/// coordinate with total count `n`.
pub fn dirichlet_step_bound(n: f64, k: u32) -> f64 {
    debug_assert!(n > 0.0 && k >= 1);
    let k = f64::from(k);
    k / (2.0 * (n + k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, Streams};
    use proptest::prelude::*;
    use rand::Rng;
    use std::vec;

    fn one_row(counts: &[f64], reward: (f64, f64)) -> BeliefState {
        BeliefState::from_parts(
            counts.len(),
            1,
            {
                let mut all = Vec::new();
                for _ in 0..counts.len() {
                    all.extend_from_slice(counts);
                }
                all
            },
            vec![reward; counts.len()],
        )
        .unwrap()
    }

    #[test]
    fn update_increments_counts() {
        let b = BeliefState::uniform(2, 1);
        let next = b.posterior_update(&Transition::new(0, 0, 1, 0)).unwrap();
        assert_eq!(next.transition_counts(0, 0), &[2.0, 1.0]);
        assert_eq!(next.reward_params(0, 0), (2.0, 1.0));
        assert_eq!(next.transition_counts(1, 0), &[1.0, 1.0]);
        assert!(b.posterior_update(&Transition::new(2, 0, 1, 0)).is_err());
        assert!(b.posterior_update(&Transition::new(0, 0, 2, 0)).is_err());
    }

    #[test]
    fn mean_mdp_normalizes_counts() {
        let b = one_row(&[1.0, 1.0, 2.0], (3.0, 1.0));
        let m = b.mean_mdp(0.9).unwrap();
        assert_eq!(m.row(0, 0), &[0.25, 0.25, 0.5]);
        assert_eq!(m.reward(0, 0), 0.75);
        let sym = one_row(&[7.0; 4], (1.0, 1.0)).mean_mdp(0.9).unwrap();
        assert!(sym.row(2, 0).iter().all(|&p| p == 0.25));
    }

    #[test]
    fn uniform_predictive_is_flat() {
        let p = BeliefState::uniform(2, 2).predictive_distribution(0, 1).unwrap();
        for (_, _, q) in p.outcomes() {
            assert_eq!(q, 0.25);
        }
        let d = one_row(&[100.0, 1e-9], (1.0, 1.0))
            .predictive_distribution(0, 0)
            .unwrap();
        assert!(d.next_state_marginal()[0] > 1.0 - 1e-10);
    }

    #[test]
    fn predictive_matches_sample_then_step() {
        let b = BeliefState::from_parts(2, 1, vec![2.0, 0.5, 1.0, 1.0], vec![(0.7, 1.9), (1.0, 1.0)]).unwrap();
        let p = b.predictive_distribution(0, 0).unwrap();
        let mut rng = Streams::new(4).stream(Domain::Experiment, 0, 0);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let m = b.sample_mdp(0.9, &mut rng);
            let r = u8::from(rng.random::<f64>() < m.reward(0, 0));
            let s = usize::from(rng.random::<f64>() >= m.row(0, 0)[0]);
            counts[r as usize * 2 + s] += 1;
        }
        for r in 0..2u8 {
            for s in 0..2 {
                let q = p.prob(r, s);
                let freq = counts[r as usize * 2 + s] as f64 / n as f64;
                let se = (q * (1.0 - q) / n as f64).sqrt();
                assert!((freq - q).abs() <= 3.0 * se, "({r},{s}): {freq} vs {q}");
            }
        }
    }

    #[test]
    fn concentrated_rows_sample_near_vertex() {
        let b = one_row(&[1e9, 1.0], (1.0, 1.0));
        let mut rng = Streams::new(5).stream(Domain::Experiment, 0, 0);
        let hits = (0..1000)
            .filter(|_| (b.sample_mdp(0.9, &mut rng).row(0, 0)[0] - 1.0).abs() < 1e-3)
            .count();
        assert!(hits >= 990);
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let b = BeliefState::uniform(3, 2);
        let s = Streams::new(77);
        let m1 = b.sample_mdp(0.9, &mut s.stream(Domain::Upper, 5, 0));
        let m2 = b.sample_mdp(0.9, &mut s.stream(Domain::Upper, 5, 0));
        assert_eq!(m1, m2);
        m1.validate().unwrap();
    }

    #[test]
    fn sampled_rows_average_to_mean_mdp() {
        let b = one_row(&[0.3, 2.0, 5.0], (1.0, 1.0));
        let mean = b.mean_mdp(0.9).unwrap();
        let mut rng = Streams::new(6).stream(Domain::Experiment, 0, 0);
        let n = 100_000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| b.sample_mdp(0.9, &mut rng).row(0, 0).to_vec()).collect();
        // 3.5 standard errors keeps the family-wise false alarm rate under 0.2% over three cells.
        for i in 0..3 {
            let avg = rows.iter().map(|r| r[i]).sum::<f64>() / n as f64;
            let var = rows.iter().map(|r| (r[i] - avg).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((avg - mean.row(0, 0)[i]).abs() <= 3.5 * se);
        }
    }

    #[test]
    fn tiny_shapes_stay_stochastic() {
        let b = one_row(&[1e-9, 1e-9, 1e-9], (1e-9, 1e9));
        let mut rng = Streams::new(8).stream(Domain::Experiment, 0, 0);
        for _ in 0..100 {
            let m = b.sample_mdp(0.9, &mut rng);
            m.validate().unwrap();
            assert!(m.reward(0, 0) < 1e-6);
        }
    }

    #[test]
    fn step_bound_values() {
        assert!((dirichlet_step_bound(2.0, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(dirichlet_step_bound(1.0, 1), 0.25);
        assert!(dirichlet_step_bound(1e12, 1) < 1e-12);
        // From (0.5, 0.5) either observation moves the mean by exactly 1/4.
        let b = one_row(&[0.5, 0.5], (1.0, 1.0));
        for s_next in 0..2 {
            let next = b.posterior_update(&Transition::new(0, 0, 0, s_next)).unwrap();
            let moved = next.mean_mdp(0.5).unwrap().row(0, 0)[0] - 0.5;
            assert!((moved.abs() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn step_bound_fails_on_unbalanced_rows() {
        // One observation from (1, 1, 1) moves a coordinate by 1/6 > 1/8.
        let b = one_row(&[1.0, 1.0, 1.0], (1.0, 1.0));
        let next = b.posterior_update(&Transition::new(0, 0, 0, 0)).unwrap();
        let moved = next.mean_mdp(0.5).unwrap().row(0, 0)[0] - 1.0 / 3.0;
        assert!((moved - 1.0 / 6.0).abs() < 1e-15);
        assert!(moved > dirichlet_step_bound(3.0, 1));
    }

    fn mixture_pair() -> MixtureBelief {
        let a = FiniteMdp::new(1, 2, vec![1.0, 1.0], vec![0.2, 0.8], 0.9).unwrap();
        let b = FiniteMdp::new(1, 2, vec![1.0, 1.0], vec![0.7, 0.4], 0.9).unwrap();
        MixtureBelief::new(vec![a, b], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn mixture_bayes_update() {
        let m = mixture_pair();
        let next = m.update(&Transition::new(0, 0, 1, 0)).unwrap();
        let expect = 0.5 * 0.2 / (0.5 * 0.2 + 0.5 * 0.7);
        assert!((next.weights()[0] - expect).abs() < 1e-15);
        let p = m.predictive(0, 0).unwrap();
        assert!((p.expected_reward() - 0.45).abs() < 1e-15);
        assert!((m.mean_mdp(0.9).unwrap().reward(0, 1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let a = FiniteMdp::new(1, 1, vec![1.0], vec![0.5], 0.9).unwrap();
        assert!(MixtureBelief::new(vec![a.clone()], vec![0.7]).is_err());
        assert!(MixtureBelief::new(vec![], vec![]).is_err());
        assert!(MixtureBelief::new(vec![a.clone(), a], vec![1.0, 0.0]).is_err());
    }

    fn arb_belief() -> impl Strategy<Value = BeliefState> {
        (2usize..=4).prop_flat_map(|ns| {
            (
                proptest::collection::vec(0.05f64..6.0, ns * 2 * ns),
                proptest::collection::vec((0.05f64..6.0, 0.05f64..6.0), ns * 2),
            )
                .prop_map(move |(c, r)| BeliefState::from_parts(ns, 2, c, r).unwrap())
        })
    }

    proptest! {
        #[test]
        fn martingale_identity(b in arb_belief(), s in 0usize..2, a in 0usize..2) {
            let pred = b.predictive_distribution(s, a).unwrap();
            let prior = b.mean_mdp(0.5).unwrap();
            let ns = b.n_states();
            let mut expected = vec![0.0; ns];
            let mut reward = 0.0;
            for (s_next, r, p) in pred.outcomes() {
                let post = b.posterior_update(&Transition::new(s, a, r, s_next)).unwrap();
                let m = post.mean_mdp(0.5).unwrap();
                for (e, q) in expected.iter_mut().zip(m.row(s, a)) {
                    *e += p * q;
                }
                reward += p * m.reward(s, a);
            }
            for (e, q) in expected.iter().zip(prior.row(s, a)) {
                prop_assert!((e - q).abs() <= 1e-12);
            }
            prop_assert!((reward - prior.reward(s, a)).abs() <= 1e-12);
            prop_assert!((pred.total() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn predictive_matches_mean_mdp(b in arb_belief(), s in 0usize..2, a in 0usize..2) {
            let pred = b.predictive_distribution(s, a).unwrap();
            let m = b.mean_mdp(0.5).unwrap();
            for (p, q) in pred.next_state_marginal().iter().zip(m.row(s, a)) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
            prop_assert!((pred.expected_reward() - m.reward(s, a)).abs() <= 1e-12);
        }

        #[test]
        fn updates_commute(b in arb_belief(), x in (0usize..2, 0usize..2, 0u8..2, 0usize..2),
                           y in (0usize..2, 0usize..2, 0u8..2, 0usize..2)) {
            let ox = Transition::new(x.0, x.1, x.2, x.3);
            let oy = Transition::new(y.0, y.1, y.2, y.3);
            let xy = b.posterior_update(&ox).unwrap().posterior_update(&oy).unwrap();
            let yx = b.posterior_update(&oy).unwrap().posterior_update(&ox).unwrap();
            prop_assert_eq!(xy, yx);
        }

        #[test]
        fn update_touches_one_cell(b in arb_belief(), o in (0usize..2, 0usize..2, 0u8..2, 0usize..2)) {
            let obs = Transition::new(o.0, o.1, o.2, o.3);
            let next = b.posterior_update(&obs).unwrap();
            for s in 0..b.n_states() {
                for a in 0..2 {
                    let before: f64 = b.transition_counts(s, a).iter().sum();
                    let after: f64 = next.transition_counts(s, a).iter().sum();
                    if (s, a) == (obs.s, obs.a) {
                        prop_assert!((after - before - 1.0).abs() < 1e-12);
                    } else {
                        prop_assert_eq!(b.transition_counts(s, a), next.transition_counts(s, a));
                        prop_assert_eq!(b.reward_params(s, a), next.reward_params(s, a));
                    }
                }
            }
        }

        #[test]
        fn single_step_move_within_max_side_bound(b in arb_belief(), s_next in 0usize..2) {
            // The movement is bounded by k * max(psi, n - psi) / (n (n + k)).
            let row = b.transition_counts(0, 0).to_vec();
            let n: f64 = row.iter().sum();
            let next = b.posterior_update(&Transition::new(0, 0, 0, s_next)).unwrap();
            let after = next.transition_counts(0, 0);
            for (i, &psi) in row.iter().enumerate() {
                let moved = (after[i] / (n + 1.0) - psi / n).abs();
                prop_assert!(moved <= psi.max(n - psi) / (n * (n + 1.0)) + 1e-15);
            }
        }
    }
}
