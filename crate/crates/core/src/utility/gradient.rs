//! Hinge targets, the smooth loss `h(X)` and the implicit gradient step.

use nalgebra::DMatrix;

use crate::duration::DurationVector;
use crate::error::{Error, Result};
use crate::problem::TrainingData;
use crate::utility::config::SolverConfig;
use crate::utility::factored::FactoredUtilityMatrix;
use crate::utility::rsvd::{LinearOperator, SparsePairs};

/// Hinge target `a = 1 + max(0, d_c - t)` of every positive triplet, aligned
/// with the triplets of the training log. Per-pair counts `n_ij` live in the
/// log's pair index.
#[derive(Clone, Debug, PartialEq)]
pub struct HingeTargets {
    pub values: Vec<f64>,
}

pub fn compute_targets(data: &TrainingData<'_>, d: &DurationVector) -> Result<HingeTargets> {
    if d.len() != data.num_categories() {
        return Err(Error::DimensionMismatch(format!(
            "{} durations for {} categories",
            d.len(),
            data.num_categories()
        )));
    }
    let values = data
        .log
        .triplets()
        .iter()
        .zip(&data.recency)
        .map(|(t, rec)| 1.0 + rec.penalty(d.get(data.cats.category(t.item))))
        .collect();
    Ok(HingeTargets { values })
}

/// `h(X) = eta sum_{p=1} max(a - x, 0)^2 + (1 - eta) sum_{p=0} x^2`.
///
/// `x_pairs` holds `x_ij` for every pair of the pair index; the unlabeled
/// sum is `l ||X||_F^2 - sum n_ij x_ij^2`.
pub fn smooth_loss(
    data: &TrainingData<'_>,
    targets: &HingeTargets,
    x_pairs: &[f64],
    frobenius_sq: f64,
    eta: f64,
) -> f64 {
    let mut positive = 0.0;
    let mut observed_sq = 0.0;
    for (p, &x) in x_pairs.iter().enumerate() {
        let run = data.pairs.run(p);
        observed_sq += run.len() as f64 * x * x;
        for a in &targets.values[run] {
            let gap = (a - x).max(0.0);
            positive += gap * gap;
        }
    }
    let unlabeled = data.num_slots() as f64 * frobenius_sq - observed_sq;
    eta * positive + (1.0 - eta) * unlabeled
}

/// Automatic step `1 / (2(1-eta)l + 2 eta max n_ij)`.
pub fn auto_step(data: &TrainingData<'_>, eta: f64) -> f64 {
    let lipschitz =
        2.0 * (1.0 - eta) * data.num_slots() as f64 + 2.0 * eta * data.pairs.max_count() as f64;
    if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        1.0
    }
}

/// `G = X - gamma grad h(X)` as `scale * X + S` with `S` supported on the
/// observed pairs.
#[derive(Clone, Debug)]
pub struct GradStepOperator<'x> {
    pub x: &'x FactoredUtilityMatrix,
    pub scale: f64,
    pub sparse: SparsePairs,
}

/// Builds the gradient-step operator at `X`.
///
/// With `c = 2 gamma (1 - eta)`, the dense part is `(1 - c l) X` and each
/// observed pair gets `c n_ij x_ij + 2 gamma eta sum_k max(a_ijk - x_ij, 0)`.
/// The hinge term enters with a plus sign: it is minus the gradient of the
/// positive loss.
pub fn gradient_step<'x>(
    x: &'x FactoredUtilityMatrix,
    data: &TrainingData<'_>,
    targets: &HingeTargets,
    cfg: &SolverConfig,
    gamma: f64,
) -> Result<GradStepOperator<'x>> {
    data.check_dims(x.num_rows(), x.num_cols())?;
    let eta = cfg.eta;
    let l = data.num_slots() as f64;
    let c = 2.0 * gamma * (1.0 - eta);
    let scale = 1.0 - c * l;
    if scale.is_nan() || scale <= -1.0 {
        return Err(Error::StepSize { gamma, scale });
    }
    let x_pairs = x.eval_pairs(&data.pairs);
    let mut sparse = SparsePairs {
        nrows: x.num_rows(),
        ncols: x.num_cols(),
        rows: Vec::with_capacity(x_pairs.len()),
        cols: Vec::with_capacity(x_pairs.len()),
        vals: Vec::with_capacity(x_pairs.len()),
    };
    for (p, (&(i, j), &xij)) in data.pairs.pairs().iter().zip(&x_pairs).enumerate() {
        let run = data.pairs.run(p);
        let count = run.len() as f64;
        let pull: f64 = targets.values[run].iter().map(|a| (a - xij).max(0.0)).sum();
        sparse.rows.push(i);
        sparse.cols.push(j);
        sparse.vals.push(c * count * xij + 2.0 * gamma * eta * pull);
    }
    Ok(GradStepOperator { x, scale, sparse })
}

impl GradStepOperator<'_> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        self.x.to_dense() * self.scale + self.sparse.to_dense()
    }
}

impl LinearOperator for GradStepOperator<'_> {
    fn nrows(&self) -> usize {
        self.x.num_rows()
    }

    fn ncols(&self) -> usize {
        self.x.num_cols()
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let mut inner = self.x.v().tr_mul(block);
        for (a, s) in self.x.sigma().iter().enumerate() {
            inner.row_mut(a).scale_mut(s * self.scale);
        }
        let mut out = self.x.u() * inner;
        self.sparse.add_product(block, &mut out);
        out
    }

    fn apply_transpose(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let mut inner = self.x.u().tr_mul(block);
        for (a, s) in self.x.sigma().iter().enumerate() {
            inner.row_mut(a).scale_mut(s * self.scale);
        }
        let mut out = self.x.v() * inner;
        self.sparse.add_transpose_product(block, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CategoryMap, PurchaseLog, Triplet};

    fn fixture() -> (PurchaseLog, CategoryMap) {
        let log = PurchaseLog::new(
            2,
            2,
            20,
            vec![
                Triplet::new(0, 0, 2),
                Triplet::new(0, 1, 5),
                Triplet::new(1, 1, 0),
            ],
        )
        .unwrap();
        (log, CategoryMap::new(vec![0, 0], 1).unwrap())
    }

    #[test]
    fn targets_follow_recency() {
        let (log, cats) = fixture();
        let data = TrainingData::new(&log, &cats).unwrap();
        let t = compute_targets(&data, &DurationVector::new(vec![10.0]).unwrap()).unwrap();
        // user 0: slot 2 has no predecessor, slot 5 has recency 3
        assert_eq!(t.values, vec![1.0, 8.0, 1.0]);
    }

    #[test]
    fn positives_only_scale_is_one() {
        let (log, cats) = fixture();
        let data = TrainingData::new(&log, &cats).unwrap();
        let t = compute_targets(&data, &DurationVector::zeros(1)).unwrap();
        let x = FactoredUtilityMatrix::zeros(2, 2);
        let cfg = SolverConfig {
            eta: 1.0,
            ..Default::default()
        };
        let op = gradient_step(&x, &data, &t, &cfg, 0.25).unwrap();
        assert_eq!(op.scale, 1.0);
        // zero X: the sparse part is 2 gamma sum max(a, 0) = 0.5 per purchase
        assert_eq!(op.sparse.vals, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn oversized_step_rejected() {
        let (log, cats) = fixture();
        let data = TrainingData::new(&log, &cats).unwrap();
        let t = compute_targets(&data, &DurationVector::zeros(1)).unwrap();
        let x = FactoredUtilityMatrix::zeros(2, 2);
        let err = gradient_step(&x, &data, &t, &SolverConfig::default(), 1.0).unwrap_err();
        assert!(matches!(err, Error::StepSize { .. }));
    }
}
