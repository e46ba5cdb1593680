//! Regret of a chosen root action against an exhaustive-expansion oracle.

use sbb_core::space::SearchSpace;
use sbb_core::tree::{exhaustive_bamdp_value, BranchValues};
use sbb_core::Error;

use crate::error::Result;
use crate::problem::Problem;
use crate::with_instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regret {
    /// Best reference branch value minus the chosen one. On finite-support
    /// problems the reference is the exact-leaf lower bracket; otherwise it
    /// equals `pessimistic`.
    pub regret: f64,
    /// Upper bracket of the best branch minus lower bracket of the chosen
    /// one, floored at zero.
    pub pessimistic: f64,
    /// Widest per-branch bracket.
    pub bracket_width: f64,
    pub exact: bool,
}

/// Per-branch brackets from full expansion to `depth`.
pub fn oracle_values(problem: &Problem, depth: usize, max_nodes: usize) -> Result<BranchValues> {
    Ok(with_instance!(&problem.instance, |space, root| {
        exhaustive_bamdp_value(space, root.clone(), depth, max_nodes, space.value_range())
    })?)
}

pub fn regret_from(values: &BranchValues, chosen: usize) -> Result<Regret> {
    if chosen >= values.lower.len() {
        return Err(Error::Validation(format!("branch {chosen} out of range")).into());
    }
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pessimistic = (max(&values.upper) - values.lower[chosen]).max(0.0);
    let bracket_width = values
        .upper
        .iter()
        .zip(&values.lower)
        .map(|(u, l)| u - l)
        .fold(0.0, f64::max);
    let regret = if values.exact {
        max(&values.lower) - values.lower[chosen]
    } else {
        pessimistic
    };
    Ok(Regret {
        regret,
        pessimistic,
        bracket_width,
        exact: values.exact,
    })
}

/// Regret of choosing root action `chosen`, judged by full expansion to
/// `oracle_depth`.
pub fn regret_of(chosen: usize, problem: &Problem, oracle_depth: usize, max_nodes: usize) -> Result<Regret> {
    regret_from(&oracle_values(problem, oracle_depth, max_nodes)?, chosen)
}
