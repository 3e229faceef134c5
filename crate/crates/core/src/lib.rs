//! Toolkit for finite stochastic partial-monitoring (PM) games.
//!
//! The crate is organised bottom-up:
//!
//! - [`game`]: loss/feedback matrices, signal matrices, one-hot feedback encoding,
//!   game spec files and the bundled games.
//! - [`numerics`]: small dense kernels (simplex LP, affine dimension of a polytope,
//!   minimum-norm solves, Sherman-Morrison updates).
//! - [`structure`]: cell decomposition, Pareto/neighbor analysis, observability class,
//!   observer sets, observer vectors and action weights.
//! - [`strategy`]: CBP and RandCBP (non-contextual), CBPside* and RandCBPside*
//!   (linear contextual), and the randomized confidence-scale sampler.
//! - [`env`]: stochastic outcome generators and the classifier-monitoring stream.
//! - [`harness`]: seeded runs, regret curves, summary statistics, Wald budgets and
//!   the monitoring protocol.
//!
//! Action, outcome and symbol indices are zero-based everywhere in the API.

pub mod env;
pub mod error;
pub mod game;
pub mod harness;
pub mod numerics;
pub mod strategy;
pub mod structure;

pub use error::{Error, Result};
pub use game::{Game, SymbolObservation};
pub use structure::{GameStructure, Observability};
