//! Randomized range finder and truncated SVD over implicit operators.

use nalgebra::{DMatrix, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::stream_rng;

/// A matrix available only through block products.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A * block` for an `ncols x p` block.
    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64>;
    /// `A^T * block` for an `nrows x p` block.
    fn apply_transpose(&self, block: &DMatrix<f64>) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        self * block
    }

    fn apply_transpose(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(block)
    }
}

/// Coordinate-format sparse matrix with entries sorted by row.
#[derive(Clone, Debug, Default)]
pub struct SparsePairs {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<u32>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl SparsePairs {
    /// `out += self * block`
    pub fn add_product(&self, block: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for c in 0..block.ncols() {
            let src = block.column(c);
            let mut dst = out.column_mut(c);
            for ((&i, &j), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
                dst[i as usize] += v * src[j as usize];
            }
        }
    }

    /// `out += self^T * block`
    pub fn add_transpose_product(&self, block: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        for c in 0..block.ncols() {
            let src = block.column(c);
            let mut dst = out.column_mut(c);
            for ((&i, &j), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
                dst[j as usize] += v * src[i as usize];
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for ((&i, &j), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            out[(i as usize, j as usize)] += v;
        }
        out
    }
}

impl LinearOperator for SparsePairs {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, block.ncols());
        self.add_product(block, &mut out);
        out
    }

    fn apply_transpose(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.ncols, block.ncols());
        self.add_transpose_product(block, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RsvdOptions {
    pub target_rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Leading singular triple: `A ~ U diag(sigma) V^T`, `sigma` descending.
#[derive(Clone, Debug)]
pub struct SvdTriple {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn randomized_svd<A: LinearOperator + ?Sized>(op: &A, opts: RsvdOptions) -> SvdTriple {
    randomized_svd_warm(op, opts, None)
}

/// Randomized SVD whose test matrix starts with the columns of `warm`
/// (typically the previous right factors) and is completed with Gaussian
/// columns. The sketch width `target_rank + oversample` is capped at
/// `min(m, n)`.
pub fn randomized_svd_warm<A: LinearOperator + ?Sized>(
    op: &A,
    opts: RsvdOptions,
    warm: Option<&DMatrix<f64>>,
) -> SvdTriple {
    let (m, n) = (op.nrows(), op.ncols());
    let limit = m.min(n);
    let width = (opts.target_rank + opts.oversample).min(limit);
    let rank = opts.target_rank.min(width);
    if width == 0 {
        return SvdTriple {
            u: DMatrix::zeros(m, 0),
            sigma: Vec::new(),
            v: DMatrix::zeros(n, 0),
        };
    }

    let mut rng = stream_rng(opts.seed, opts.stream);
    let mut omega = DMatrix::<f64>::zeros(n, width);
    let reused = warm.map_or(0, |w| w.ncols().min(width));
    if let Some(w) = warm {
        omega
            .columns_mut(0, reused)
            .copy_from(&w.columns(0, reused));
    }
    for c in reused..width {
        for r in 0..n {
            omega[(r, c)] = rng.sample(StandardNormal);
        }
    }

    let mut q = orthonormalize(op.apply(&omega));
    for _ in 0..opts.power_iters {
        let z = orthonormalize(op.apply_transpose(&q));
        q = orthonormalize(op.apply(&z));
    }

    // A ~ Q Q^T A = Q C^T with C = A^T Q = Q2 R, so A ~ (Q R^T) Q2^T.
    let c = op.apply_transpose(&q);
    let qr = c.qr();
    let q2 = qr.q();
    let r = qr.r();
    let svd = SVD::new(r.transpose(), true, true);
    let small_u = svd.u.expect("left singular vectors requested");
    let small_vt = svd.v_t.expect("right singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order.truncate(rank);

    let left = &q * &small_u;
    let right = &q2 * small_vt.transpose();
    let mut u = DMatrix::zeros(m, order.len());
    let mut v = DMatrix::zeros(n, order.len());
    let mut sigma = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &left.column(src));
        v.set_column(dst, &right.column(src));
        sigma.push(svd.singular_values[src].max(0.0));
    }
    SvdTriple { u, sigma, v }
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}
