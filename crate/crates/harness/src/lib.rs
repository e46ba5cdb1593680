//! Problem files, regret oracle, bound checks and sweeps around
//! [`sbb_core`].
//!
//! The `sbb` binary exposes the same pieces as the `plan`, `verify`,
//! `sweep` and `dump-tree` subcommands.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dump;
pub mod error;
pub mod problem;
pub mod regret;
pub mod sweep;
pub mod synthetic;
pub mod verify;

pub use error::{HarnessError, Result};
