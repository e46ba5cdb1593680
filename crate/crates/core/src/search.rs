//! The planners: flat oracle search, flat stochastic search and the two
//! stochastic branch-and-bound variants.
//!
//! A branch is the set of policies sharing one root action, so every planner
//! returns a root action. Leaf evaluations (one bound draw, or one exact
//! bound) are the unit of cost; expansions are free up to the node cap.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;
use rand::Rng;

use crate::concentration::{
    flat_oracle_depth, flat_stochastic_depth, flat_stochastic_evaluations, flat_stochastic_samples,
};
use crate::error::{bail, Error, Result};
use crate::mdp::argmax_lowest;
use crate::rng::{Domain, Streams};
use crate::space::SearchSpace;
use crate::tree::{full_tree_size, BeliefTree, LeafValueSource, DEFAULT_MAX_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    FlatOracle,
    FlatStochastic,
    Sbb1,
    Sbb2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::FlatOracle,
        Algorithm::FlatStochastic,
        Algorithm::Sbb1,
        Algorithm::Sbb2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FlatOracle => "flat-oracle",
            Algorithm::FlatStochastic => "flat-stochastic",
            Algorithm::Sbb1 => "sbb1",
            Algorithm::Sbb2 => "sbb2",
        }
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: alloc::string::String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "flatoracle" => Ok(Algorithm::FlatOracle),
            "flatstochastic" => Ok(Algorithm::FlatStochastic),
            "sbb1" => Ok(Algorithm::Sbb1),
            "sbb2" => Ok(Algorithm::Sbb2),
            _ => Err(Error::Validation(alloc::format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Planner settings. `gamma` and `beta` default to the space's discount
/// and value range.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    /// Draws per leaf for the flat stochastic search.
    pub samples_per_leaf: Option<usize>,
    /// Search depth for the flat searches.
    pub depth: Option<usize>,
    /// Leaf evaluations available.
    pub budget: u64,
    pub seed: u64,
    pub max_nodes: usize,
    /// Lower draws per frontier leaf for the branch-and-bound final choice.
    pub final_lower_samples: usize,
    /// Record an audit log of draws and expansions.
    pub audit: bool,
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm, epsilon: f64) -> Self {
        Self {
            algorithm,
            epsilon,
            gamma: None,
            beta: None,
            samples_per_leaf: None,
            depth: None,
            budget: 10_000,
            seed: 0,
            max_nodes: DEFAULT_MAX_NODES,
            final_lower_samples: 32,
            audit: false,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn with_samples_per_leaf(mut self, m: usize) -> Self {
        self.samples_per_leaf = Some(m);
        self
    }

    pub fn with_max_nodes(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn with_final_lower_samples(mut self, n: usize) -> Self {
        self.final_lower_samples = n;
        self
    }

    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    fn resolve<S: SearchSpace>(&self, space: &S) -> Result<(f64, f64)> {
        let gamma = self.gamma.unwrap_or_else(|| space.discount());
        if !(gamma > 0.0 && gamma < 1.0) {
            bail!(Validation, "gamma {gamma} outside (0, 1)");
        }
        let range = space.value_range();
        let beta = self.beta.unwrap_or(range);
        if !(beta >= range * (1.0 - 1e-12)) {
            bail!(Validation, "beta {beta} is below the value range {range}");
        }
        if !(self.epsilon > 0.0) {
            bail!(Validation, "epsilon must be positive, got {}", self.epsilon);
        }
        if self.budget < 1 {
            bail!(Validation, "budget must be at least 1");
        }
        if self.samples_per_leaf == Some(0) {
            bail!(Validation, "samples per leaf must be at least 1");
        }
        if self.final_lower_samples == 0 {
            bail!(Validation, "final lower samples must be at least 1");
        }
        Ok((gamma, beta))
    }
}

/// Per-run metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub chosen_branch: usize,
    pub leaf_evaluations: u64,
    pub node_expansions: u64,
    pub max_depth_reached: usize,
    /// Deepest node per root action.
    pub branch_depths: Vec<usize>,
    /// Per-branch values behind the choice.
    pub branch_values: Vec<f64>,
    /// Depth used by the flat searches.
    pub depth: Option<usize>,
    /// Draws per leaf used by the flat stochastic search.
    pub samples_per_leaf: Option<usize>,
    pub regret: Option<f64>,
    pub bracket_width: Option<f64>,
    /// Filled in by callers that own a clock.
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuditEvent {
    /// An upper draw at a node during a sampling pass.
    Sample { node: usize, value: f64 },
    /// An expansion creating `n_children` nodes from `first_child` on.
    Expand {
        node: usize,
        first_child: usize,
        n_children: usize,
    },
    /// A lower draw for the final branch choice.
    FinalSample { node: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRecord {
    pub iteration: u64,
    pub event: AuditEvent,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome<N, P> {
    pub report: RunReport,
    pub tree: BeliefTree<N, P>,
    pub audit: Vec<AuditRecord>,
    /// Samples that fell outside the half-depth window (SBB2 only).
    pub window_violations: u64,
}

/// Runs the planner selected by `config.algorithm`.
pub fn run_search<S: SearchSpace>(
    space: &S,
    root: S::Node,
    config: &SearchConfig,
) -> Result<SearchOutcome<S::Node, S::Pinned>> {
    space.validate_root(&root)?;
    match config.algorithm {
        Algorithm::FlatOracle => flat_oracle_search(space, root, config),
        Algorithm::FlatStochastic => flat_stochastic_search(space, root, config),
        Algorithm::Sbb1 => sbb1_search(space, root, config),
        Algorithm::Sbb2 => sbb2_search(space, root, config),
    }
}

fn gap_of(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[0] - sorted[1]
}

struct Run<N, P> {
    tree: BeliefTree<N, P>,
    audit: Vec<AuditRecord>,
    record: bool,
    evals: u64,
    expansions: u64,
}

impl<N: Clone, P: Clone> Run<N, P> {
    fn new(root: N, config: &SearchConfig) -> Self {
        Self {
            tree: BeliefTree::new(root, config.max_nodes),
            audit: Vec::new(),
            record: config.audit,
            evals: 0,
            expansions: 0,
        }
    }

    fn log(&mut self, iteration: u64, event: AuditEvent) {
        if self.record {
            self.audit.push(AuditRecord { iteration, event });
        }
    }

    fn expand<S>(&mut self, space: &S, id: usize, iteration: u64) -> Result<()>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        let kids = self.tree.expand_node(space, id)?;
        self.expansions += 1;
        self.log(
            iteration,
            AuditEvent::Expand {
                node: id,
                first_child: kids.start,
                n_children: kids.len(),
            },
        );
        Ok(())
    }

    /// Expands every node of `frontier`, returning the new frontier.
    fn expand_level<S>(&mut self, space: &S, frontier: &[usize]) -> Result<Vec<usize>>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        let mut next = Vec::new();
        for &id in frontier {
            self.expand(space, id, 0)?;
            let ranges = self.tree.node(id).children().unwrap_or(&[]);
            next.extend(ranges.iter().flat_map(|r| r.clone()));
        }
        Ok(next)
    }

    /// One upper draw at every leaf.
    fn sampling_pass<S>(&mut self, space: &S, streams: &Streams, iteration: u64) -> Result<()>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        for id in self.tree.leaves() {
            let index = self.tree.node(id).upper.count() as u64;
            let mut rng = streams.stream(Domain::Upper, id as u64, index);
            let value = space.draw_upper(&self.tree.node(id).node, &mut rng)?;
            self.tree.node_mut(id).upper.push(value);
            self.evals += 1;
            self.log(iteration, AuditEvent::Sample { node: id, value });
        }
        Ok(())
    }

    /// Final choice of the branch-and-bound planners: lower draws at every
    /// leaf, backed up, argmax over root actions.
    fn final_choice<S>(&mut self, space: &S, streams: &Streams, draws: usize, iteration: u64) -> Result<Vec<f64>>
    where
        S: SearchSpace<Node = N, Pinned = P>,
    {
        for id in self.tree.leaves() {
            let pinned = self.tree.pinned(space, id)?;
            for j in 0..draws {
                let mut rng = streams.stream(Domain::Final, id as u64, j as u64);
                let value = space.draw_lower(&self.tree.node(id).node, &pinned, &mut rng)?;
                self.tree.node_mut(id).lower.push(value);
                self.evals += 1;
                self.log(iteration, AuditEvent::FinalSample { node: id, value });
            }
        }
        self.tree.backup(space, LeafValueSource::MeanLower)
    }

    fn finish(
        self,
        algorithm: Algorithm,
        n_branches: usize,
        branch_values: Vec<f64>,
        depth: Option<usize>,
        samples_per_leaf: Option<usize>,
        window_violations: u64,
    ) -> SearchOutcome<N, P> {
        let report = RunReport {
            algorithm,
            chosen_branch: argmax_lowest(&branch_values),
            leaf_evaluations: self.evals,
            node_expansions: self.expansions,
            max_depth_reached: self.tree.max_depth(),
            branch_depths: self.tree.branch_depths(n_branches),
            branch_values,
            depth,
            samples_per_leaf,
            regret: None,
            bracket_width: None,
            wallclock_ms: 0.0,
        };
        SearchOutcome {
            report,
            tree: self.tree,
            audit: self.audit,
            window_violations,
        }
    }
}

/// Iterative deepening with exact leaf lower bounds up to depth
/// `ceil(log_gamma(eps / beta))`, stopping early once the best root lower
/// bound leads the runner-up by more than `2 beta gamma^j` at depth `j`.
pub fn flat_oracle_search<S: SearchSpace>(
    space: &S,
    root: S::Node,
    config: &SearchConfig,
) -> Result<SearchOutcome<S::Node, S::Pinned>> {
    let (gamma, beta) = config.resolve(space)?;
    let Some(root_exact) = space.exact(&root)? else {
        bail!(Capability, "flat oracle search needs exact leaf bounds");
    };
    let k = match config.depth {
        Some(k) => k,
        None => flat_oracle_depth(gamma, config.epsilon, beta)?,
    };
    let n_branches = space.n_actions(&root);
    let phi = space.branching_factor(&root)?;
    let mut run = Run::new(root, config);
    run.evals = 1;
    let mut values = root_exact.action_lower;
    let mut frontier = vec![0usize];
    let mut reached = 0;
    for j in 1..=k {
        if gap_of(&values) > 2.0 * beta * gamma.powi(j as i32 - 1) {
            break;
        }
        let next_leaves = (frontier.len() as u64).saturating_mul(phi as u64);
        if run.evals.saturating_add(next_leaves) > config.budget {
            bail!(
                Resource,
                "depth {j} needs {} leaf evaluations, budget is {}",
                run.evals.saturating_add(next_leaves),
                config.budget
            );
        }
        if run.tree.len().saturating_add(frontier.len().saturating_mul(phi)) > config.max_nodes {
            bail!(Resource, "depth {j} exceeds the cap of {} nodes", config.max_nodes);
        }
        frontier = run.expand_level(space, &frontier)?;
        for &id in &frontier {
            let exact = space
                .exact(&run.tree.node(id).node)?
                .ok_or_else(|| Error::Capability(alloc::format!("node {id} has no exact bounds")))?;
            run.tree.node_mut(id).lower.push(exact.lower);
            run.evals += 1;
        }
        values = run.tree.backup(space, LeafValueSource::MeanLower)?;
        reached = j;
    }
    Ok(run.finish(Algorithm::FlatOracle, n_branches, values, Some(reached), None, 0))
}

/// Full expansion to depth `ceil(log_gamma(eps / (2 beta)))` with `m` lower
/// draws per leaf, `m = ceil(2 k ln phi)` unless overridden.
pub fn flat_stochastic_search<S: SearchSpace>(
    space: &S,
    root: S::Node,
    config: &SearchConfig,
) -> Result<SearchOutcome<S::Node, S::Pinned>> {
    let (gamma, beta) = config.resolve(space)?;
    let k = match config.depth {
        Some(k) => k,
        None => flat_stochastic_depth(gamma, config.epsilon, beta)?,
    };
    let phi = space.branching_factor(&root)?;
    let m = config
        .samples_per_leaf
        .unwrap_or_else(|| flat_stochastic_samples(k, phi as u64));
    let needed = flat_stochastic_evaluations(phi as u64, k, m);
    if needed > u128::from(config.budget) {
        bail!(
            Resource,
            "{needed} leaf evaluations needed, budget is {}",
            config.budget
        );
    }
    if full_tree_size(phi, k) > config.max_nodes {
        bail!(Resource, "depth {k} exceeds the cap of {} nodes", config.max_nodes);
    }
    let n_branches = space.n_actions(&root);
    let streams = Streams::new(config.seed);
    let mut run = Run::new(root, config);
    let values = if k == 0 {
        let pinned = run.tree.pinned(space, 0)?;
        let mut sums = vec![0.0; n_branches];
        for j in 0..m {
            let mut rng = streams.stream(Domain::Lower, 0, j as u64);
            let draws = space.draw_action_lower(&run.tree.root().node, &pinned, &mut rng)?;
            for (acc, v) in sums.iter_mut().zip(draws) {
                *acc += v;
            }
            run.evals += 1;
        }
        sums.iter().map(|s| s / m as f64).collect()
    } else {
        let mut frontier = vec![0usize];
        for _ in 0..k {
            frontier = run.expand_level(space, &frontier)?;
        }
        for &id in &frontier {
            let pinned = run.tree.pinned(space, id)?;
            for j in 0..m {
                let mut rng = streams.stream(Domain::Lower, id as u64, j as u64);
                let value = space.draw_lower(&run.tree.node(id).node, &pinned, &mut rng)?;
                run.tree.node_mut(id).lower.push(value);
                run.evals += 1;
            }
        }
        run.tree.backup(space, LeafValueSource::MeanLower)?
    };
    Ok(run.finish(Algorithm::FlatStochastic, n_branches, values, Some(k), Some(m), 0))
}

/// Leaf with the largest mean upper draw, lowest id on ties.
fn best_leaf<N: Clone, P: Clone>(tree: &BeliefTree<N, P>, leaves: &[usize]) -> Result<usize> {
    let means = leaves
        .iter()
        .map(|&id| {
            tree.node(id)
                .upper
                .mean()
                .ok_or_else(|| Error::State(alloc::format!("leaf {id} has no upper draws")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(leaves[argmax_lowest(&means)])
}

/// Branch and bound on leaf upper-bound means: each pass draws one upper
/// sample at every leaf, then expands the leaf with the largest mean.
pub fn sbb1_search<S: SearchSpace>(
    space: &S,
    root: S::Node,
    config: &SearchConfig,
) -> Result<SearchOutcome<S::Node, S::Pinned>> {
    config.resolve(space)?;
    let n_branches = space.n_actions(&root);
    let streams = Streams::new(config.seed);
    let mut run = Run::new(root, config);
    run.expand(space, 0, 0)?;
    let mut iteration = 0u64;
    while run.evals < config.budget {
        iteration += 1;
        run.sampling_pass(space, &streams, iteration)?;
        if run.evals > config.budget {
            break;
        }
        let leaves = run.tree.leaves();
        let best = best_leaf(&run.tree, &leaves)?;
        match run.expand(space, best, iteration) {
            Ok(()) => {}
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let values = run.final_choice(space, &streams, config.final_lower_samples, iteration + 1)?;
    Ok(run.finish(Algorithm::Sbb1, n_branches, values, None, None, 0))
}

/// Depths whose samples feed the estimate of a leaf at `depth`.
pub fn window_range(depth: usize) -> RangeInclusive<usize> {
    depth.div_ceil(2)..=depth
}

/// Half-depth window estimate for every leaf: the mean of all upper draws
/// stored on the leaf's root path at depths `ceil(d/2)..=d`. Returns the
/// estimates indexed by node id and the number of draws used from outside
/// the window.
fn window_estimates<N: Clone, P: Clone>(tree: &BeliefTree<N, P>, leaves: &[usize]) -> (Vec<Option<f64>>, u64) {
    let mut estimates = vec![None; tree.len()];
    let mut violations = 0;
    for &leaf in leaves {
        let depth = tree.node(leaf).depth;
        let window = window_range(depth);
        let (mut sum, mut count) = (0.0, 0usize);
        for id in tree.path_to_root(leaf) {
            let node = tree.node(id);
            if node.depth < *window.start() {
                break;
            }
            if !window.contains(&node.depth) {
                violations += node.upper.count() as u64;
            }
            sum += node.upper.sum();
            count += node.upper.count();
        }
        estimates[leaf] = (count > 0).then(|| sum / count as f64);
    }
    (estimates, violations)
}

/// Branch and bound with half-depth sample reuse: each pass draws one upper
/// sample at every leaf, backs up window estimates, then descends greedily
/// on backed-up values (sampling children from the predictive) and expands
/// the leaf it reaches.
pub fn sbb2_search<S: SearchSpace>(
    space: &S,
    root: S::Node,
    config: &SearchConfig,
) -> Result<SearchOutcome<S::Node, S::Pinned>> {
    config.resolve(space)?;
    let n_branches = space.n_actions(&root);
    let discount = space.discount();
    let streams = Streams::new(config.seed);
    let mut run = Run::new(root, config);
    run.expand(space, 0, 0)?;
    let mut iteration = 0u64;
    let mut violations = 0u64;
    while run.evals < config.budget {
        iteration += 1;
        run.sampling_pass(space, &streams, iteration)?;
        if run.evals > config.budget {
            break;
        }
        let leaves = run.tree.leaves();
        let (estimates, outside) = window_estimates(&run.tree, &leaves);
        violations += outside;
        let backup = run.tree.backup_with(discount, |leaf| {
            estimates[leaf.id].ok_or_else(|| Error::State(alloc::format!("leaf {} has no upper draws", leaf.id)))
        })?;
        let mut rng = streams.stream(Domain::Descent, iteration, 0);
        let mut cur = 0usize;
        while let Some(ranges) = run.tree.node(cur).children() {
            let q = run.tree.action_values(cur, discount, &backup.values);
            let range = ranges[argmax_lowest(&q)].clone();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = None;
            for c in range.clone() {
                let p = run.tree.node(c).prob_in;
                if p > 0.0 {
                    pick = Some(c);
                    acc += p;
                    if u < acc {
                        break;
                    }
                }
            }
            cur = pick.ok_or_else(|| Error::State(alloc::format!("node {cur} has no reachable child")))?;
        }
        match run.expand(space, cur, iteration) {
            Ok(()) => {}
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let values = run.final_choice(space, &streams, config.final_lower_samples, iteration + 1)?;
    Ok(run.finish(Algorithm::Sbb2, n_branches, values, None, None, violations))
}
