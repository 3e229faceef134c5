//! Small dense numerical kernels used by the structure analysis and the strategies.

mod linalg;
mod lp;
mod memo;

pub use linalg::{in_direct_sum, least_norm_solve, rank1_inverse_update, rank1_inverse_update_mut};
pub use lp::{
    affine_dimension, lp_extremize, lp_feasible, ConstraintSet, Feasibility, Halfspace, Sense,
    DEFAULT_STRICT_SLACK,
};
pub use memo::Memo;

/// Residual tolerance for linear-system membership tests.
pub const RESIDUAL_TOL: f64 = 1e-9;
