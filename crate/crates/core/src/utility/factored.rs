use nalgebra::DMatrix;

use crate::data::PairIndex;
use crate::error::{Error, Result};

/// Low-rank form-utility matrix `X = U diag(sigma) V^T`.
///
/// `U` is `m x k`, `V` is `n x k`, both with orthonormal columns, and
/// `sigma` is strictly positive and non-increasing. Rank zero represents the
/// all-zero matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredUtilityMatrix {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
}

impl FactoredUtilityMatrix {
    pub fn new(u: DMatrix<f64>, sigma: Vec<f64>, v: DMatrix<f64>) -> Result<Self> {
        let k = sigma.len();
        if u.ncols() != k || v.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "factor widths {} and {} differ from rank {k}",
                u.ncols(),
                v.ncols()
            )));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidConfig(
                "singular values must be finite and positive".into(),
            ));
        }
        if sigma.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidConfig(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(FactoredUtilityMatrix { u, sigma, v })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        FactoredUtilityMatrix {
            u: DMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(n, 0),
        }
    }

    /// Factors a dense matrix, dropping singular values at or below
    /// `1e-12 sigma_max`.
    pub fn from_dense(x: &DMatrix<f64>) -> Self {
        let (m, n) = x.shape();
        if x.iter().all(|&v| v == 0.0) {
            return Self::zeros(m, n);
        }
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("left vectors requested");
        let v_t = svd.v_t.expect("right vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let top = svd.singular_values[order[0]];
        order.retain(|&a| svd.singular_values[a] > 1e-12 * top);
        let sigma = order.iter().map(|&a| svd.singular_values[a]).collect();
        let u = DMatrix::from_fn(m, order.len(), |i, a| u[(i, order[a])]);
        let v = DMatrix::from_fn(n, order.len(), |j, a| v_t[(order[a], j)]);
        FactoredUtilityMatrix { u, sigma, v }
    }

    pub fn num_rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank())
            .map(|a| self.u[(i, a)] * self.sigma[a] * self.v[(j, a)])
            .sum()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }

    /// Squared Frobenius norm, `sum(sigma^2)` by orthonormality.
    pub fn frobenius_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (a, s) in self.sigma.iter().enumerate() {
            us.column_mut(a).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// Row-major copies for fast entry evaluation.
    pub fn rows(&self) -> FactorRows {
        FactorRows::new(self)
    }

    /// `x_ij` at every pair of `pairs`.
    pub fn eval_pairs(&self, pairs: &PairIndex) -> Vec<f64> {
        let rows = self.rows();
        pairs
            .pairs()
            .iter()
            .map(|&(i, j)| rows.entry(i as usize, j as usize))
            .collect()
    }

    /// Largest deviation of `U^T U` and `V^T V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.rank();
        let eye = DMatrix::<f64>::identity(k, k);
        let eu = (self.u.transpose() * &self.u - &eye).amax();
        let ev = (self.v.transpose() * &self.v - &eye).amax();
        eu.max(ev)
    }
}

/// `U diag(sigma)` and `V` laid out row-major.
#[derive(Clone, Debug)]
pub struct FactorRows {
    k: usize,
    n: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl FactorRows {
    fn new(x: &FactoredUtilityMatrix) -> Self {
        let k = x.rank();
        let mut left = Vec::with_capacity(x.num_rows() * k);
        for i in 0..x.num_rows() {
            left.extend((0..k).map(|a| x.u[(i, a)] * x.sigma[a]));
        }
        let mut right = Vec::with_capacity(x.num_cols() * k);
        for j in 0..x.num_cols() {
            right.extend((0..k).map(|a| x.v[(j, a)]));
        }
        FactorRows {
            k,
            n: x.num_cols(),
            left,
            right,
        }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.k;
        let a = &self.left[i * k..(i + 1) * k];
        let b = &self.right[j * k..(j + 1) * k];
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Whole row `i` of `X`, one value per column.
    pub fn row(&self, i: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.n).map(|j| self.entry(i, j)));
    }
}
