//! Mixed-strategy equilibria of Bertrand price competition on seller networks.

// `!(a < b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_search;
pub mod bounds;
pub mod cli;
pub mod closed_form;
pub mod fp_oracle;
pub mod network;
pub mod numerics;
pub mod sketch;
pub mod strategy;
pub mod verifier;

pub use network::{Network, Triviality};
pub use numerics::{Rational, Scalar, Tolerance};
pub use strategy::{PiecewiseCdf, StrategyProfile};
