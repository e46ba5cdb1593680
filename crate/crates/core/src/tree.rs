//! Arena-backed search tree with backwards-induction backups.
//!
//! Nodes are appended in creation order, so every child has a larger id
//! than its parent and a reverse sweep over ids visits children first. The
//! children of one node under one action occupy a contiguous id range.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::bounds::BoundEstimate;
use crate::error::{bail, Result};
use crate::space::SearchSpace;

/// Default cap on the number of nodes in a tree.
pub const DEFAULT_MAX_NODES: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct TreeNode<N, P> {
    pub id: usize,
    pub node: N,
    pub depth: usize,
    pub parent: Option<usize>,
    /// Root action whose branch contains this node; `None` at the root.
    pub branch: Option<usize>,
    pub action_in: Option<usize>,
    pub reward_in: Option<f64>,
    pub prob_in: f64,
    pub next_state: Option<usize>,
    children: Option<Vec<Range<usize>>>,
    pub lower: BoundEstimate,
    pub upper: BoundEstimate,
    pub pinned: Option<P>,
    /// Values written by the last [`BeliefTree::backup`], `(lower, upper)`.
    pub backed_up: (Option<f64>, Option<f64>),
}

impl<N, P> TreeNode<N, P> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    /// Child id ranges, one per action; `None` for a leaf.
    pub fn children(&self) -> Option<&[Range<usize>]> {
        self.children.as_deref()
    }
}

/// Where leaf values come from in a backup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafValueSource {
    /// Exact lower bound; requires a space with exact bounds.
    ExactLower,
    /// Exact upper bound; requires a space with exact bounds.
    ExactUpper,
    /// Mean of the lower draws stored at the leaf.
    MeanLower,
    /// Mean of the upper draws stored at the leaf.
    MeanUpper,
}

impl LeafValueSource {
    fn is_upper(self) -> bool {
        matches!(self, Self::ExactUpper | Self::MeanUpper)
    }
}

/// Result of a backup: a value for every node and per-action root values.
#[derive(Debug, Clone, PartialEq)]
pub struct Backup {
    pub values: Vec<f64>,
    pub root_actions: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BeliefTree<N, P> {
    nodes: Vec<TreeNode<N, P>>,
    max_nodes: usize,
}

impl<N: Clone, P: Clone> BeliefTree<N, P> {
    pub fn new(root: N, max_nodes: usize) -> Self {
        let root = TreeNode {
            id: 0,
            node: root,
            depth: 0,
            parent: None,
            branch: None,
            action_in: None,
            reward_in: None,
            prob_in: 1.0,
            next_state: None,
            children: None,
            lower: BoundEstimate::new(),
            upper: BoundEstimate::new(),
            pinned: None,
            backed_up: (None, None),
        };
        Self {
            nodes: vec![root],
            max_nodes: max_nodes.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn root(&self) -> &TreeNode<N, P> {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode<N, P> {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: usize) -> &mut TreeNode<N, P> {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode<N, P>] {
        &self.nodes
    }

    /// Leaf ids in increasing order.
    pub fn leaves(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id).collect()
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Deepest node per root action.
    pub fn branch_depths(&self, n_branches: usize) -> Vec<usize> {
        let mut depths = vec![0; n_branches];
        for n in &self.nodes {
            if let Some(b) = n.branch {
                depths[b] = depths[b].max(n.depth);
            }
        }
        depths
    }

    /// Node ids from `id` up to the root, `id` first.
    pub fn path_to_root(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Creates every child of leaf `id` and returns their id range.
    pub fn expand_node<S>(&mut self, space: &S, id: usize) -> Result<Range<usize>>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        if id >= self.nodes.len() {
            bail!(Validation, "node {id} does not exist");
        }
        if !self.nodes[id].is_leaf() {
            bail!(State, "node {id} is already expanded");
        }
        let parent = &self.nodes[id];
        let n_actions = space.n_actions(&parent.node);
        let mut per_action = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            per_action.push(space.successors(&parent.node, a)?);
        }
        let total: usize = per_action.iter().map(Vec::len).sum();
        if self.nodes.len() + total > self.max_nodes {
            bail!(
                Resource,
                "expanding node {id} would exceed the cap of {} nodes",
                self.max_nodes
            );
        }
        let depth = parent.depth + 1;
        let parent_branch = parent.branch;
        let first = self.nodes.len();
        let mut ranges = Vec::with_capacity(n_actions);
        for (a, kids) in per_action.into_iter().enumerate() {
            let start = self.nodes.len();
            for child in kids {
                let cid = self.nodes.len();
                self.nodes.push(TreeNode {
                    id: cid,
                    node: child.node,
                    depth,
                    parent: Some(id),
                    branch: Some(parent_branch.unwrap_or(a)),
                    action_in: Some(a),
                    reward_in: Some(child.reward),
                    prob_in: child.prob,
                    next_state: Some(child.next_state),
                    children: None,
                    lower: BoundEstimate::new(),
                    upper: BoundEstimate::new(),
                    pinned: None,
                    backed_up: (None, None),
                });
            }
            ranges.push(start..self.nodes.len());
        }
        self.nodes[id].children = Some(ranges);
        Ok(first..self.nodes.len())
    }

    /// The pinned data of node `id`, computed on first use.
    pub fn pinned<S>(&mut self, space: &S, id: usize) -> Result<P>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        if let Some(p) = &self.nodes[id].pinned {
            return Ok(p.clone());
        }
        let p = space.pin(&self.nodes[id].node)?;
        self.nodes[id].pinned = Some(p.clone());
        Ok(p)
    }

    /// `sum_c prob_c (reward_c + discount * values[c])` per action of an
    /// expanded node.
    pub fn action_values(&self, id: usize, discount: f64, values: &[f64]) -> Vec<f64> {
        let Some(ranges) = &self.nodes[id].children else {
            return Vec::new();
        };
        ranges
            .iter()
            .map(|range| {
                range
                    .clone()
                    .map(|c| {
                        let child = &self.nodes[c];
                        child.prob_in * (child.reward_in.unwrap_or(0.0) + discount * values[c])
                    })
                    .sum()
            })
            .collect()
    }

    /// Backwards induction from arbitrary leaf values.
    pub fn backup_with<F>(&self, discount: f64, mut leaf_value: F) -> Result<Backup>
    where
        F: FnMut(&TreeNode<N, P>) -> Result<f64>,
    {
        if self.nodes[0].is_leaf() {
            bail!(State, "the root has not been expanded");
        }
        let mut values = vec![0.0; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            values[id] = if node.is_leaf() {
                leaf_value(node)?
            } else {
                self.action_values(id, discount, &values)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
        }
        let root_actions = self.action_values(0, discount, &values);
        Ok(Backup { values, root_actions })
    }

    /// Backup from stored or exact leaf values; records the result on every
    /// node and returns per-action root values.
    pub fn backup<S>(&mut self, space: &S, source: LeafValueSource) -> Result<Vec<f64>>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        let result = self.backup_with(space.discount(), |leaf| leaf_value(space, leaf, source))?;
        for (node, v) in self.nodes.iter_mut().zip(&result.values) {
            if source.is_upper() {
                node.backed_up.1 = Some(*v);
            } else {
                node.backed_up.0 = Some(*v);
            }
        }
        Ok(result.root_actions)
    }
}

fn leaf_value<S: SearchSpace>(space: &S, leaf: &TreeNode<S::Node, S::Pinned>, source: LeafValueSource) -> Result<f64> {
    let missing = |what: &str| -> Result<f64> { bail!(State, "leaf {} has no {what}", leaf.id) };
    match source {
        LeafValueSource::MeanLower => leaf.lower.mean().map_or_else(|| missing("lower draws"), Ok),
        LeafValueSource::MeanUpper => leaf.upper.mean().map_or_else(|| missing("upper draws"), Ok),
        LeafValueSource::ExactLower | LeafValueSource::ExactUpper => match space.exact(&leaf.node)? {
            Some(b) if source == LeafValueSource::ExactLower => Ok(b.lower),
            Some(b) => Ok(b.upper),
            None => missing("exact bounds"),
        },
    }
}

/// Per-branch bracket on the optimal value from full expansion to a fixed
/// depth.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchValues {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Whether leaves used exact bounds (otherwise `0` / `beta` padding).
    pub exact: bool,
    pub nodes: usize,
}

/// Number of nodes in a full tree of uniform branching `phi` and depth `k`,
/// root included, saturating on overflow.
pub fn full_tree_size(phi: usize, k: usize) -> usize {
    let mut total: usize = 1;
    let mut level: usize = 1;
    for _ in 0..k {
        level = level.saturating_mul(phi);
        total = total.saturating_add(level);
    }
    total
}

/// Expands `root` fully to depth `horizon` and backs up leaf bounds.
///
/// Leaves take exact bounds when the space provides them and `0` / `beta`
/// otherwise. At horizon 0 the branch values are the one-step forms
/// `Q(s, a)` of the same leaf bounds.
pub fn exhaustive_bamdp_value<S: SearchSpace>(
    space: &S,
    root: S::Node,
    horizon: usize,
    max_nodes: usize,
    beta: f64,
) -> Result<BranchValues> {
    let gamma = space.discount();
    let n_actions = space.n_actions(&root);
    let exact_root = space.exact(&root)?;
    if horizon == 0 {
        if let Some(b) = exact_root {
            return Ok(BranchValues {
                lower: b.action_lower,
                upper: b.action_upper,
                exact: true,
                nodes: 1,
            });
        }
        let mut lower = Vec::with_capacity(n_actions);
        let mut upper = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let r: f64 = space.successors(&root, a)?.iter().map(|c| c.prob * c.reward).sum();
            lower.push(r);
            upper.push(r + gamma * beta);
        }
        return Ok(BranchValues {
            lower,
            upper,
            exact: false,
            nodes: 1,
        });
    }
    let phi = space.branching_factor(&root)?;
    let needed = full_tree_size(phi, horizon);
    if needed > max_nodes {
        bail!(
            Resource,
            "full expansion to depth {horizon} needs {needed} nodes, cap is {max_nodes}"
        );
    }
    let exact = exact_root.is_some();
    let mut tree: BeliefTree<S::Node, S::Pinned> = BeliefTree::new(root, max_nodes);
    let mut frontier = vec![0usize];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for id in frontier {
            next.extend(tree.expand_node(space, id)?);
        }
        frontier = next;
    }
    let mut leaf_bounds = vec![(0.0, beta); tree.len()];
    if exact {
        for &id in &frontier {
            let b = space
                .exact(&tree.node(id).node)?
                .ok_or_else(|| crate::Error::Capability(alloc::format!("node {id} has no exact bounds")))?;
            leaf_bounds[id] = (b.lower, b.upper);
        }
    }
    let lower = tree.backup_with(gamma, |leaf| Ok(leaf_bounds[leaf.id].0))?.root_actions;
    let upper = tree.backup_with(gamma, |leaf| Ok(leaf_bounds[leaf.id].1))?.root_actions;
    Ok(BranchValues {
        lower,
        upper,
        exact,
        nodes: tree.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{BeliefState, MixtureBelief, Posterior};
    use crate::bounds::{ExactBounds, HyperState};
    use crate::mdp::testutil::random_mdp;
    use crate::mdp::FiniteMdp;
    use crate::rng::{Domain, StreamRng, Streams};
    use crate::space::{BamdpSpace, Successor};
    use std::vec;

    /// Uniform branching, zero rewards, two actions with two children each.
    struct FlatSpace {
        gamma: f64,
    }

    impl SearchSpace for FlatSpace {
        type Node = ();
        type Pinned = ();
        fn discount(&self) -> f64 {
            self.gamma
        }
        fn value_range(&self) -> f64 {
            1.0
        }
        fn n_actions(&self, _: &()) -> usize {
            2
        }
        fn successors(&self, _: &(), _: usize) -> Result<Vec<Successor<()>>> {
            Ok(vec![
                Successor {
                    node: (),
                    prob: 0.5,
                    reward: 0.0,
                    next_state: 0,
                },
                Successor {
                    node: (),
                    prob: 0.5,
                    reward: 0.0,
                    next_state: 1,
                },
            ])
        }
        fn pin(&self, _: &()) -> Result<()> {
            Ok(())
        }
        fn draw_upper(&self, _: &(), _: &mut StreamRng) -> Result<f64> {
            Ok(1.0)
        }
        fn draw_lower(&self, _: &(), _: &(), _: &mut StreamRng) -> Result<f64> {
            Ok(0.0)
        }
        fn draw_action_lower(&self, _: &(), _: &(), _: &mut StreamRng) -> Result<Vec<f64>> {
            Ok(vec![0.0, 0.0])
        }
        fn exact(&self, _: &()) -> Result<Option<ExactBounds>> {
            Ok(None)
        }
    }

    fn bandit_space() -> (BamdpSpace<BeliefState>, HyperState<BeliefState>) {
        (
            BamdpSpace::new(1, 2, 0.9).unwrap(),
            HyperState::new(0, BeliefState::uniform(1, 2)),
        )
    }

    #[test]
    fn expansion_creates_phi_children() {
        let space = BamdpSpace::new(2, 2, 0.9).unwrap();
        let mut tree = BeliefTree::new(HyperState::new(0, BeliefState::uniform(2, 2)), 100);
        let kids = tree.expand_node(&space, 0).unwrap();
        assert_eq!(kids.len(), 8);
        for range in tree.root().children().unwrap() {
            let total: f64 = range.clone().map(|c| tree.node(c).prob_in).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for c in range.clone() {
                assert_eq!(tree.node(c).prob_in, 0.25);
                assert_eq!(tree.node(c).depth, 1);
            }
        }
        let first = tree.node(1);
        assert_eq!(first.node.belief.transition_counts(0, 0), &[2.0, 1.0]);
        assert!(matches!(tree.expand_node(&space, 0), Err(crate::Error::State(_))));
    }

    #[test]
    fn node_cap_is_a_resource_error() {
        let (space, root) = bandit_space();
        let mut tree = BeliefTree::new(root, 4);
        assert!(matches!(tree.expand_node(&space, 0), Err(crate::Error::Resource(_))));
        assert!(tree.root().is_leaf());
    }

    #[test]
    fn depth_one_zero_discount_backup_is_expected_reward() {
        let space = BamdpSpace::new(1, 2, 0.0).unwrap();
        let belief = BeliefState::from_parts(1, 2, vec![1.0, 1.0], vec![(3.0, 1.0), (1.0, 4.0)]).unwrap();
        let mut tree = BeliefTree::new(HyperState::new(0, belief), 100);
        tree.expand_node(&space, 0).unwrap();
        let v = tree.backup_with(0.0, |_| Ok(123.0)).unwrap().root_actions;
        assert!((v[0] - 0.75).abs() < 1e-15);
        assert!((v[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_leaves_zero_rewards() {
        let space = FlatSpace { gamma: 0.7 };
        let mut tree = BeliefTree::new((), 100);
        tree.expand_node(&space, 0).unwrap();
        let v = tree.backup_with(0.7, |_| Ok(2.0)).unwrap().root_actions;
        assert!(v.iter().all(|x| (x - 1.4).abs() < 1e-15));
    }

    #[test]
    fn missing_leaf_values_are_state_errors() {
        let (space, root) = bandit_space();
        let mut tree = BeliefTree::new(root, 100);
        assert!(matches!(
            tree.backup(&space, LeafValueSource::MeanLower),
            Err(crate::Error::State(_))
        ));
        tree.expand_node(&space, 0).unwrap();
        assert!(matches!(
            tree.backup(&space, LeafValueSource::MeanUpper),
            Err(crate::Error::State(_))
        ));
        assert!(matches!(
            tree.backup(&space, LeafValueSource::ExactUpper),
            Err(crate::Error::State(_))
        ));
    }

    /// `E[max(p1, p2)]` for independent Beta variates by midpoint quadrature.
    fn expected_max(a: (f64, f64), b: (f64, f64)) -> f64 {
        fn density(x: f64, (al, be): (f64, f64)) -> f64 {
            x.powf(al - 1.0) * (1.0 - x).powf(be - 1.0)
        }
        let n = 400;
        let h = 1.0 / n as f64;
        let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let za: f64 = grid.iter().map(|&x| density(x, a)).sum::<f64>() * h;
        let zb: f64 = grid.iter().map(|&x| density(x, b)).sum::<f64>() * h;
        let mut total = 0.0;
        for &x in &grid {
            for &y in &grid {
                total += x.max(y) * density(x, a) * density(y, b);
            }
        }
        total * h * h / (za * zb)
    }

    #[test]
    fn depth_two_bandit_matches_path_enumeration() {
        let gamma = 0.9;
        let (space, root) = bandit_space();
        let mut tree = BeliefTree::new(root, 1000);
        tree.expand_node(&space, 0).unwrap();
        for id in 1..5 {
            tree.expand_node(&space, id).unwrap();
        }
        assert_eq!(tree.leaves().len(), 16);
        let leaf = |b: &BeliefState| expected_max(b.reward_params(0, 0), b.reward_params(0, 1)) / (1.0 - gamma);
        let backed = tree
            .backup_with(gamma, |n| Ok(leaf(&n.node.belief)))
            .unwrap()
            .root_actions;

        // Hand enumeration over (a1, r1, a2, r2) with explicit Beta counts.
        let params = |counts: [(f64, f64); 2]| BeliefState::from_parts(1, 2, vec![1.0, 1.0], counts.to_vec()).unwrap();
        for a1 in 0..2 {
            let mut total = 0.0;
            for r1 in 0..2 {
                let mut c1 = [(1.0, 1.0); 2];
                let p1 = 0.5; // Beta(1, 1) predictive
                if r1 == 1 {
                    c1[a1].0 += 1.0
                } else {
                    c1[a1].1 += 1.0
                }
                let mut best = f64::NEG_INFINITY;
                for a2 in 0..2 {
                    let (al, be) = c1[a2];
                    let mut q = 0.0;
                    for r2 in 0..2 {
                        let mut c2 = c1;
                        let p2 = if r2 == 1 { al / (al + be) } else { be / (al + be) };
                        if r2 == 1 {
                            c2[a2].0 += 1.0
                        } else {
                            c2[a2].1 += 1.0
                        }
                        q += p2 * (r2 as f64 + gamma * leaf(&params(c2)));
                    }
                    best = best.max(q);
                }
                total += p1 * (r1 as f64 + gamma * best);
            }
            assert!((backed[a1] - total).abs() < 1e-12, "{a1}: {} vs {total}", backed[a1]);
        }
    }

    #[test]
    fn full_expansion_node_count() {
        let space = BamdpSpace::new(2, 1, 0.5).unwrap();
        let root = HyperState::new(0, BeliefState::uniform(2, 1));
        let v = exhaustive_bamdp_value(&space, root, 3, 10_000, 2.0).unwrap();
        // phi = 4: 1 + 4 + 16 + 64
        assert_eq!(v.nodes, 85);
        assert_eq!(full_tree_size(4, 3), 85);
        assert!(85 - 1 < 4usize.pow(4));
    }

    #[test]
    fn upper_backup_dominates_lower_backup() {
        let (space, root) = bandit_space();
        let mut tree = BeliefTree::new(root, 1000);
        tree.expand_node(&space, 0).unwrap();
        tree.expand_node(&space, 2).unwrap();
        let streams = Streams::new(3);
        for id in tree.leaves() {
            let pinned = tree.pinned(&space, id).unwrap();
            for j in 0..20 {
                let mut rng = streams.stream(Domain::Paired, id as u64, j);
                let hyper = &tree.node(id).node;
                let (l, u) = crate::bounds::sample_pair(hyper, &pinned, 0.9, &mut rng).unwrap();
                tree.node_mut(id).lower.push(l);
                tree.node_mut(id).upper.push(u);
            }
        }
        tree.backup(&space, LeafValueSource::MeanLower).unwrap();
        tree.backup(&space, LeafValueSource::MeanUpper).unwrap();
        for n in tree.nodes() {
            assert!(n.backed_up.0.unwrap() <= n.backed_up.1.unwrap() + 1e-12);
        }
    }

    #[test]
    fn horizon_zero_is_one_step() {
        let (space, root) = bandit_space();
        let v = exhaustive_bamdp_value(&space, root, 0, 10, 10.0).unwrap();
        assert_eq!(v.lower, vec![0.5, 0.5]);
        assert!((v.upper[0] - (0.5 + 9.0)).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_cap_is_checked_up_front() {
        let (space, root) = bandit_space();
        let err = exhaustive_bamdp_value(&space, root, 10, 1000, 10.0).unwrap_err();
        assert!(matches!(err, crate::Error::Resource(_)));
    }

    fn random_mixture(seed: u64, n_states: usize, gamma: f64) -> HyperState<MixtureBelief> {
        let mut rng = Streams::new(seed).stream(Domain::Experiment, 0, 0);
        let comps: Vec<FiniteMdp> = (0..3).map(|_| random_mdp(&mut rng, n_states, 2, gamma)).collect();
        HyperState::new(0, MixtureBelief::new(comps, vec![0.5, 0.3, 0.2]).unwrap())
    }

    #[test]
    fn finite_support_brackets_tighten() {
        for seed in 0..5 {
            let root = random_mixture(seed, 1, 0.9);
            let space = BamdpSpace::new(1, 2, 0.9).unwrap();
            let beta = 10.0;
            let mut prev: Option<BranchValues> = None;
            for k in 1..=4 {
                let v = exhaustive_bamdp_value(&space, root.clone(), k, 1_000_000, beta).unwrap();
                assert!(v.exact);
                for b in 0..2 {
                    assert!(v.upper[b] - v.lower[b] <= 2.0 * beta * 0.9f64.powi(k as i32) + 1e-9);
                    if let Some(p) = &prev {
                        assert!(v.upper[b] <= p.upper[b] + 1e-9);
                        assert!(v.lower[b] >= p.lower[b] - 1e-9);
                    }
                }
                prev = Some(v);
            }
        }
    }

    #[test]
    fn multi_state_upper_is_monotone() {
        for seed in 10..13 {
            let root = random_mixture(seed, 2, 0.9);
            let space = BamdpSpace::new(2, 2, 0.9).unwrap();
            let mut prev = f64::INFINITY;
            for k in 1..=3 {
                let v = exhaustive_bamdp_value(&space, root.clone(), k, 1_000_000, 10.0).unwrap();
                let best = v.upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(best <= prev + 1e-9);
                prev = best;
            }
        }
    }

    #[test]
    fn mixture_children_keep_posterior_support() {
        let root = random_mixture(1, 2, 0.9);
        let space = BamdpSpace::new(2, 2, 0.9).unwrap();
        let mut tree = BeliefTree::new(root, 100);
        tree.expand_node(&space, 0).unwrap();
        for id in tree.leaves() {
            let support = tree.node(id).node.belief.support().unwrap();
            let total: f64 = support.iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
