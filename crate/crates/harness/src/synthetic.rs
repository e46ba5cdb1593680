//! A degenerate two-branch problem with controlled bound draws.
//!
//! Below a two-action root each branch is a single chain of nodes. Branch 0
//! has value `v_star`, branch 1 has `v_star - delta`. An upper draw at depth
//! `d` is uniform on an interval of width `beta * gamma^d` centred on the
//! branch value, plus the worst-case bias `beta * gamma^d` for branch 1.
//! Rewards are zero and the backup does not discount, so a chain node's
//! backed-up value is its leaf value.

use rand::Rng;

use sbb_core::bounds::ExactBounds;
use sbb_core::rng::StreamRng;
use sbb_core::space::{SearchSpace, Successor};
use sbb_core::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBranchChain {
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
    pub v_star: f64,
}

/// A chain node: `(branch, depth)`; the root is `(0, 0)`.
pub type ChainNode = (usize, usize);

impl TwoBranchChain {
    pub fn new(gamma: f64, beta: f64, delta: f64) -> Self {
        Self {
            gamma,
            beta,
            delta,
            v_star: beta / 2.0,
        }
    }

    pub fn branch_value(&self, branch: usize) -> f64 {
        if branch == 0 {
            self.v_star
        } else {
            self.v_star - self.delta
        }
    }

    fn width(&self, depth: usize) -> f64 {
        self.beta * self.gamma.powi(depth as i32)
    }

    /// Mean of the upper draws at `node`.
    pub fn upper_mean(&self, node: &ChainNode) -> f64 {
        let bias = if node.0 == 1 { self.width(node.1) } else { 0.0 };
        self.branch_value(node.0) + bias
    }
}

impl SearchSpace for TwoBranchChain {
    type Node = ChainNode;
    type Pinned = ();

    fn discount(&self) -> f64 {
        1.0
    }

    fn value_range(&self) -> f64 {
        self.beta
    }

    fn n_actions(&self, node: &ChainNode) -> usize {
        if node.1 == 0 {
            2
        } else {
            1
        }
    }

    fn successors(&self, node: &ChainNode, action: usize) -> Result<Vec<Successor<ChainNode>>> {
        let branch = if node.1 == 0 { action } else { node.0 };
        Ok(vec![Successor {
            node: (branch, node.1 + 1),
            prob: 1.0,
            reward: 0.0,
            next_state: 0,
        }])
    }

    fn pin(&self, _node: &ChainNode) -> Result<()> {
        Ok(())
    }

    fn draw_upper(&self, node: &ChainNode, rng: &mut StreamRng) -> Result<f64> {
        let w = self.width(node.1);
        Ok(self.upper_mean(node) - w / 2.0 + w * rng.random::<f64>())
    }

    fn draw_lower(&self, node: &ChainNode, _pinned: &(), rng: &mut StreamRng) -> Result<f64> {
        Ok((self.branch_value(node.0) - self.width(node.1) * rng.random::<f64>()).max(0.0))
    }

    fn draw_action_lower(&self, _node: &ChainNode, _pinned: &(), rng: &mut StreamRng) -> Result<Vec<f64>> {
        let w = self.width(0);
        Ok((0..2)
            .map(|b| (self.branch_value(b) - w * rng.random::<f64>()).max(0.0))
            .collect())
    }

    fn exact(&self, _node: &ChainNode) -> Result<Option<ExactBounds>> {
        Ok(None)
    }
}
