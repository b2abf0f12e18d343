//! X-subproblem: proximal gradient over a sparse-plus-low-rank operator.

pub mod config;
pub mod factored;
pub mod gradient;
pub mod prox;
pub mod rsvd;

pub use config::{SolverConfig, SOLVER_KEYS};
pub use factored::{FactorRows, FactoredUtilityMatrix};
pub use gradient::{
    auto_step, compute_targets, gradient_step, smooth_loss, GradStepOperator, HingeTargets,
};
pub use prox::{initial_utility, soft_threshold, update_x, x_objective, Thresholded, XUpdate};
pub use rsvd::{
    randomized_svd, randomized_svd_warm, LinearOperator, RsvdOptions, SparsePairs, SvdTriple,
};
