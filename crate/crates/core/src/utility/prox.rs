//! Proximal-gradient X update with singular-value soft-thresholding.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::TrainingData;
use crate::rng::{prox_stream, STREAM_INIT};
use crate::utility::config::SolverConfig;
use crate::utility::factored::FactoredUtilityMatrix;
use crate::utility::gradient::{auto_step, gradient_step, smooth_loss, HingeTargets};
use crate::utility::rsvd::{randomized_svd, randomized_svd_warm, RsvdOptions, SparsePairs};

/// Relative objective increase tolerated before the step is halved.
pub const INCREASE_TOLERANCE: f64 = 1e-8;
const MAX_STEP_HALVINGS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholded {
    pub values: Vec<f64>,
    pub rank: usize,
}

/// Shrinks descending singular values by `amount`, flooring at zero, and
/// keeps the strictly positive survivors.
pub fn soft_threshold(sigma: &[f64], amount: f64) -> Thresholded {
    let values: Vec<f64> = sigma
        .iter()
        .map(|s| s - amount)
        .take_while(|&s| s > 0.0)
        .collect();
    let rank = values.len();
    if rank == 0 && !sigma.is_empty() {
        log::warn!("all singular values thresholded to zero; lambda may be too large");
    }
    Thresholded { values, rank }
}

/// Regularized X-subproblem objective `h(X) + lambda ||X||_*`.
pub fn x_objective(
    data: &TrainingData<'_>,
    targets: &HingeTargets,
    x: &FactoredUtilityMatrix,
    cfg: &SolverConfig,
) -> f64 {
    let x_pairs = x.eval_pairs(&data.pairs);
    smooth_loss(data, targets, &x_pairs, x.frobenius_sq(), cfg.eta) + cfg.lambda * x.nuclear_norm()
}

/// Rank-`max_rank` randomized SVD of the slice-collapsed count matrix
/// `sum_k p_ijk`, rescaled to unit spectral norm.
pub fn initial_utility(data: &TrainingData<'_>, cfg: &SolverConfig) -> FactoredUtilityMatrix {
    let (m, n) = (data.num_users(), data.num_items());
    let mut counts = SparsePairs {
        nrows: m,
        ncols: n,
        ..Default::default()
    };
    for (p, &(i, j)) in data.pairs.pairs().iter().enumerate() {
        counts.rows.push(i);
        counts.cols.push(j);
        counts.vals.push(data.pairs.count(p) as f64);
    }
    let svd = randomized_svd(
        &counts,
        RsvdOptions {
            target_rank: cfg.max_rank,
            oversample: cfg.oversample,
            power_iters: cfg.power_iters,
            seed: cfg.seed,
            stream: STREAM_INIT,
        },
    );
    let top = svd.sigma.first().copied().unwrap_or(0.0);
    let keep = svd
        .sigma
        .iter()
        .take_while(|&&s| s > top * 1e-12 && s > 0.0)
        .count();
    if keep == 0 {
        return FactoredUtilityMatrix::zeros(m, n);
    }
    let sigma = svd.sigma[..keep].iter().map(|s| s / top).collect();
    FactoredUtilityMatrix::new(
        svd.u.columns(0, keep).into_owned(),
        sigma,
        svd.v.columns(0, keep).into_owned(),
    )
    .unwrap_or_else(|_| FactoredUtilityMatrix::zeros(m, n))
}

#[derive(Clone, Debug)]
pub struct XUpdate {
    pub x: FactoredUtilityMatrix,
    /// Objective after each accepted step, starting with the input point.
    pub history: Vec<f64>,
    /// Accepted proximal steps.
    pub iterations: usize,
    /// Step size in use when the loop ended.
    pub gamma: f64,
    pub converged: bool,
}

impl XUpdate {
    pub fn objective(&self) -> f64 {
        *self
            .history
            .last()
            .expect("history holds the starting objective")
    }
}

/// Runs `X <- S_{gamma lambda}(X - gamma grad h(X))` until the relative
/// objective change drops below `tol` or `inner_iters` steps are taken.
///
/// A step that raises the objective by more than [`INCREASE_TOLERANCE`]
/// (relative) is rejected and retried with half the step size.
pub fn update_x(
    x0: &FactoredUtilityMatrix,
    data: &TrainingData<'_>,
    targets: &HingeTargets,
    cfg: &SolverConfig,
    outer: usize,
) -> Result<XUpdate> {
    cfg.validate()?;
    data.check_dims(x0.num_rows(), x0.num_cols())?;
    let mut gamma = if cfg.gamma > 0.0 {
        cfg.gamma
    } else {
        auto_step(data, cfg.eta)
    };
    let mut x = x0.clone();
    let mut current = x_objective(data, targets, &x, cfg);
    let mut history = vec![current];
    let mut halvings = 0;
    let mut attempt = 0;
    let mut converged = false;

    while history.len() <= cfg.inner_iters {
        let op = gradient_step(&x, data, targets, cfg, gamma)?;
        let warm = (x.rank() > 0).then(|| x.v().clone());
        let svd = randomized_svd_warm(
            &op,
            RsvdOptions {
                target_rank: cfg.max_rank,
                oversample: cfg.oversample,
                power_iters: cfg.power_iters,
                seed: cfg.seed,
                stream: prox_stream(outer, attempt),
            },
            warm.as_ref(),
        );
        attempt += 1;
        let kept = soft_threshold(&svd.sigma, gamma * cfg.lambda);
        let candidate = truncate(svd.u, kept.values, svd.v)?;
        let value = x_objective(data, targets, &candidate, cfg);

        if value > current + INCREASE_TOLERANCE * current.abs().max(1.0) {
            halvings += 1;
            if halvings > MAX_STEP_HALVINGS {
                return Err(Error::Diverged(format!(
                    "X update could not decrease the objective {current} after \
                     {MAX_STEP_HALVINGS} step halvings"
                )));
            }
            gamma *= 0.5;
            log::debug!("objective rose to {value}; halving step to {gamma}");
            continue;
        }

        let change = (current - value).abs() / current.abs().max(1.0);
        x = candidate;
        current = value;
        history.push(value);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(XUpdate {
        x,
        iterations: history.len() - 1,
        history,
        gamma,
        converged,
    })
}

fn truncate(u: DMatrix<f64>, sigma: Vec<f64>, v: DMatrix<f64>) -> Result<FactoredUtilityMatrix> {
    let k = sigma.len();
    FactoredUtilityMatrix::new(
        u.columns(0, k).into_owned(),
        sigma,
        v.columns(0, k).into_owned(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_arithmetic() {
        let t = soft_threshold(&[3.0, 1.0, 0.2], 0.5);
        assert_eq!(t.values, vec![2.5, 0.5]);
        assert_eq!(t.rank, 2);
    }

    #[test]
    fn zero_amount_is_identity() {
        let t = soft_threshold(&[3.0, 1.0, 0.2], 0.0);
        assert_eq!(t.values, vec![3.0, 1.0, 0.2]);
        assert_eq!(t.rank, 3);
    }

    #[test]
    fn full_truncation() {
        let t = soft_threshold(&[0.4, 0.3], 0.5);
        assert!(t.values.is_empty());
        assert_eq!(t.rank, 0);
    }
}
