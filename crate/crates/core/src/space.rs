//! What the planners search over.
//!
//! A [`SearchSpace`] supplies a node's successors under each action and
//! the bound draws at a node. [`BamdpSpace`] is the Bayes-adaptive MDP;
//! tests and experiments plug in synthetic spaces with controlled bounds.

use alloc::vec::Vec;

use crate::belief::{Posterior, Transition};
use crate::bounds::{self, exact_action_bounds, ExactBounds, HyperState};
use crate::error::{bail, Result};
use crate::mdp::Policy;
use crate::rng::StreamRng;

/// One child of a node under a fixed action.
#[derive(Debug, Clone, PartialEq)]
pub struct Successor<N> {
    pub node: N,
    pub prob: f64,
    pub reward: f64,
    pub next_state: usize,
}

pub trait SearchSpace: Sync {
    type Node: Clone + Send + Sync;
    /// Per-node data computed once and reused by every lower draw.
    type Pinned: Clone + Send + Sync;

    /// Discount applied by the backup.
    fn discount(&self) -> f64;
    /// Width of the interval every bound draw lies in.
    fn value_range(&self) -> f64;
    fn n_actions(&self, node: &Self::Node) -> usize;
    /// Children under `action`, ordered by next state then reward.
    fn successors(&self, node: &Self::Node, action: usize) -> Result<Vec<Successor<Self::Node>>>;

    /// Total number of children over all actions.
    fn branching_factor(&self, node: &Self::Node) -> Result<usize> {
        let mut total = 0;
        for a in 0..self.n_actions(node) {
            total += self.successors(node, a)?.len();
        }
        Ok(total)
    }

    fn pin(&self, node: &Self::Node) -> Result<Self::Pinned>;
    fn draw_upper(&self, node: &Self::Node, rng: &mut StreamRng) -> Result<f64>;
    fn draw_lower(&self, node: &Self::Node, pinned: &Self::Pinned, rng: &mut StreamRng) -> Result<f64>;
    /// Per-action lower draws at `node` from one shared random draw.
    fn draw_action_lower(&self, node: &Self::Node, pinned: &Self::Pinned, rng: &mut StreamRng) -> Result<Vec<f64>>;
    /// Exact bounds, when the space can compute them.
    fn exact(&self, node: &Self::Node) -> Result<Option<ExactBounds>>;

    /// Checks that `node` can serve as a search root.
    fn validate_root(&self, _node: &Self::Node) -> Result<()> {
        Ok(())
    }
}

/// The Bayes-adaptive MDP over posterior `B` with Bernoulli rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BamdpSpace<B> {
    n_states: usize,
    n_actions: usize,
    discount: f64,
    _belief: core::marker::PhantomData<fn() -> B>,
}

impl<B: Posterior> BamdpSpace<B> {
    pub fn new(n_states: usize, n_actions: usize, discount: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            bail!(Validation, "need at least one state and one action");
        }
        if !(0.0..1.0).contains(&discount) {
            bail!(Validation, "discount {discount} outside [0, 1)");
        }
        Ok(Self {
            n_states,
            n_actions,
            discount,
            _belief: core::marker::PhantomData,
        })
    }

    /// Checks that `root` lives in this space.
    pub fn check_root(&self, root: &HyperState<B>) -> Result<()> {
        if root.belief.n_states() != self.n_states || root.belief.n_actions() != self.n_actions {
            bail!(
                Validation,
                "belief has {}x{} states and actions, space has {}x{}",
                root.belief.n_states(),
                root.belief.n_actions(),
                self.n_states,
                self.n_actions
            );
        }
        root.validate()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
}

impl<B: Posterior> SearchSpace for BamdpSpace<B> {
    type Node = HyperState<B>;
    type Pinned = Policy;

    fn discount(&self) -> f64 {
        self.discount
    }

    fn value_range(&self) -> f64 {
        1.0 / (1.0 - self.discount)
    }

    fn n_actions(&self, _node: &Self::Node) -> usize {
        self.n_actions
    }

    fn successors(&self, node: &Self::Node, action: usize) -> Result<Vec<Successor<Self::Node>>> {
        let pred = node.belief.predictive(node.state, action)?;
        pred.outcomes()
            .map(|(s_next, r, prob)| {
                let belief = node.belief.update(&Transition::new(node.state, action, r, s_next))?;
                Ok(Successor {
                    node: HyperState::new(s_next, belief),
                    prob,
                    reward: f64::from(r),
                    next_state: s_next,
                })
            })
            .collect()
    }

    fn branching_factor(&self, _node: &Self::Node) -> Result<usize> {
        Ok(2 * self.n_states * self.n_actions)
    }

    fn pin(&self, node: &Self::Node) -> Result<Policy> {
        bounds::pinned_policy(node, self.discount)
    }

    fn draw_upper(&self, node: &Self::Node, rng: &mut StreamRng) -> Result<f64> {
        bounds::sample_upper(node, self.discount, rng)
    }

    fn draw_lower(&self, node: &Self::Node, pinned: &Policy, rng: &mut StreamRng) -> Result<f64> {
        bounds::sample_lower(node, pinned, self.discount, rng)
    }

    fn draw_action_lower(&self, node: &Self::Node, pinned: &Policy, rng: &mut StreamRng) -> Result<Vec<f64>> {
        bounds::sample_action_lower(node, pinned, self.discount, rng)
    }

    fn exact(&self, node: &Self::Node) -> Result<Option<ExactBounds>> {
        match node.belief.support() {
            Some(support) => Ok(Some(exact_action_bounds(node.state, &support, self.discount)?)),
            None => Ok(None),
        }
    }

    fn validate_root(&self, node: &Self::Node) -> Result<()> {
        self.check_root(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::BeliefState;

    #[test]
    fn bamdp_successors_follow_predictive() {
        let space = BamdpSpace::new(2, 2, 0.9).unwrap();
        let root = HyperState::new(0, BeliefState::uniform(2, 2));
        assert_eq!(space.branching_factor(&root).unwrap(), 8);
        let kids = space.successors(&root, 1).unwrap();
        assert_eq!(kids.len(), 4);
        let order: Vec<(usize, f64)> = kids.iter().map(|c| (c.next_state, c.reward)).collect();
        assert_eq!(order, [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]);
        assert!(kids.iter().all(|c| c.prob == 0.25));
        assert_eq!(kids[0].node.belief.transition_counts(0, 1), &[2.0, 1.0]);
        assert_eq!(kids[0].node.belief.reward_params(0, 1), (1.0, 2.0));
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(BamdpSpace::<BeliefState>::new(0, 1, 0.5).is_err());
        assert!(BamdpSpace::<BeliefState>::new(1, 1, 1.0).is_err());
        let space = BamdpSpace::new(2, 1, 0.5).unwrap();
        assert!(space
            .check_root(&HyperState::new(0, BeliefState::uniform(3, 1)))
            .is_err());
        assert!(space
            .check_root(&HyperState::new(2, BeliefState::uniform(2, 1)))
            .is_err());
    }
}
