//! Optimistic/pessimistic value iteration for episodic two-player zero-sum
//! linear Markov games.
// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod eps_net;
pub mod error;
pub mod evaluation;
pub mod game_model;
pub mod harness;
pub mod learners;
pub mod matrix_equilibria;
pub mod regression;

pub use error::{Error, Result};
