//! Belief-tree search for Bayesian reinforcement learning.
//!
//! The crate models a Bayes-adaptive MDP (hyper-states pairing an MDP state
//! with a posterior over MDPs), draws Monte-Carlo upper and lower bounds on
//! hyper-state values, and searches the resulting tree with flat and
//! stochastic branch-and-bound planners. It is `no_std` and only needs an
//! allocator; IO, file formats and experiments live in `sbb-harness`.
//!
//! ```
//! use sbb_core::belief::BeliefState;
//! use sbb_core::bounds::HyperState;
//! use sbb_core::search::{run_search, Algorithm, SearchConfig};
//! use sbb_core::space::BamdpSpace;
//!
//! let space = BamdpSpace::new(1, 2, 0.5).unwrap();
//! let root = HyperState::new(0, BeliefState::uniform(1, 2));
//! let config = SearchConfig::new(Algorithm::Sbb1, 0.5).with_budget(64).with_seed(7);
//! let outcome = run_search(&space, root, &config).unwrap();
//! assert!(outcome.report.chosen_branch < 2);
//! ```
#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod belief;
pub mod bounds;
pub mod concentration;
pub mod error;
mod linalg;
pub mod mdp;
pub mod rng;
pub mod search;
pub mod space;
pub mod tree;

pub use error::{Error, Result};
