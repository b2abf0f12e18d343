//! Demand-aware recommendation from positive-unlabeled purchase logs.
//!
//! A user buys item `j` at slot `k` when the form utility `x_ij` minus the
//! time penalty `max(0, d_c - t)` exceeds a threshold, where `d_c` is the
//! inter-purchase duration of the item's category and `t` the slots since
//! the user's last purchase in that category. [`driver::fit`] learns a
//! low-rank `X` and the durations `d` by alternating an exact breakpoint
//! sweep over `d` with proximal-gradient steps over `X`.

pub mod data;
pub mod driver;
pub mod duration;
pub mod error;
pub mod eval;
pub mod problem;
pub mod rng;
pub mod synth;
pub mod utility;

pub use data::{CategoryMap, PurchaseLog, Recency, RecencyIndex, Triplet};
pub use driver::{fit, fit_from, FitReport, ModelState};
pub use duration::DurationVector;
pub use error::{Error, Result};
pub use problem::TrainingData;
pub use utility::{FactoredUtilityMatrix, SolverConfig};
