//! d-subproblem: exact per-category minimization of a piecewise quadratic.
//!
//! With `X` fixed, each positive triplet of category `c` with finite recency
//! `t` contributes
//!
//! ```text
//! g(d) = max(1 - z, 0)^2          for d <= s
//!        (d + 1 - z - t)^2        for d >  s,     s = t + max(z - 1, 0)
//! ```
//!
//! where `z = x_ij`. Sorting the breakpoints `s` and sweeping the intervals
//! left to right, the sum over a category is `q d^2 + 2 F d + W + R` on the
//! interval after the `q`-th breakpoint. The running sums change by one
//! record per breakpoint, so a sweep costs `O(|Q|)` after the sort.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::TrainingData;
use crate::utility::FactoredUtilityMatrix;

/// Non-negative inter-purchase duration per category, in slots.
#[derive(Clone, Debug, PartialEq)]
pub struct DurationVector(Vec<f64>);

impl DurationVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidConfig(
                "durations must be finite and non-negative".into(),
            ));
        }
        Ok(DurationVector(values))
    }

    pub fn zeros(r: usize) -> Self {
        DurationVector(vec![0.0; r])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, category: u32) -> f64 {
        self.0[category as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One swept triplet: current utility `z`, finite recency `t`, breakpoint `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkRecord {
    pub z: f64,
    pub t: f64,
    pub s: f64,
}

impl WorkRecord {
    pub fn new(z: f64, t: f64) -> Self {
        WorkRecord {
            z,
            t,
            s: t + (z - 1.0).max(0.0),
        }
    }

    /// Loss value left of the breakpoint.
    #[inline]
    fn flat(&self) -> f64 {
        let v = (1.0 - self.z).max(0.0);
        v * v
    }

    /// `max(1 - (z - max(0, d - t)), 0)^2`, evaluated directly.
    pub fn loss(&self, d: f64) -> f64 {
        let v = (1.0 - (self.z - (d - self.t).max(0.0))).max(0.0);
        v * v
    }
}

/// Records of one category sorted by breakpoint, plus the summed loss of
/// triplets with infinite recency (constant in `d`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CategoryWorkSet {
    records: Vec<WorkRecord>,
    constant_loss: f64,
}

impl CategoryWorkSet {
    pub fn new(mut records: Vec<WorkRecord>, constant_loss: f64) -> Self {
        records.sort_by(|a, b| {
            a.s.total_cmp(&b.s)
                .then(a.z.total_cmp(&b.z))
                .then(a.t.total_cmp(&b.t))
        });
        CategoryWorkSet {
            records,
            constant_loss,
        }
    }

    pub fn records(&self) -> &[WorkRecord] {
        &self.records
    }

    pub fn constant_loss(&self) -> f64 {
        self.constant_loss
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Category objective at `d` by direct summation.
    pub fn objective(&self, d: f64) -> f64 {
        self.constant_loss + self.records.iter().map(|r| r.loss(d)).sum::<f64>()
    }
}

/// Splits the positive triplets by category, evaluating `z = x_ij` once per
/// observed pair.
pub fn build_worksets(
    data: &TrainingData<'_>,
    x: &FactoredUtilityMatrix,
) -> Result<Vec<CategoryWorkSet>> {
    data.check_dims(x.num_rows(), x.num_cols())?;
    let r = data.num_categories();
    let mut records: Vec<Vec<WorkRecord>> = vec![Vec::new(); r];
    let mut constant = vec![0.0; r];
    let x_pairs = x.eval_pairs(&data.pairs);
    for (p, &(_, item)) in data.pairs.pairs().iter().enumerate() {
        let z = x_pairs[p];
        let cat = data.cats.category(item) as usize;
        for rec in &data.recency[data.pairs.run(p)] {
            match rec.finite() {
                Some(t) => records[cat].push(WorkRecord::new(z, t as f64)),
                None => {
                    let v = (1.0 - z).max(0.0);
                    constant[cat] += v * v;
                }
            }
        }
    }
    Ok(records
        .into_iter()
        .zip(constant)
        .map(|(recs, c)| CategoryWorkSet::new(recs, c))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepResult {
    pub duration: f64,
    /// Category objective at `duration`, including the constant part.
    pub objective: f64,
}

/// Exact minimizer of the category objective over `d >= 0`.
///
/// Every interval candidate is the vertex clamped into the interval. Among
/// equal minima the largest `d` wins: the objective is flat up to the first
/// breakpoint, and its right end is the longest duration consistent with the
/// observed gaps. Returns `None` for an empty workset, whose objective does
/// not depend on `d`.
pub fn sweep_category(ws: &CategoryWorkSet) -> Option<SweepResult> {
    let recs = &ws.records;
    let n = recs.len();
    if n == 0 {
        return None;
    }
    // rest[q] = R_q, the flat losses of records right of the q-th breakpoint
    let mut rest = vec![0.0; n + 1];
    for q in (0..n).rev() {
        rest[q] = rest[q + 1] + recs[q].flat();
    }

    let mut best = SweepResult {
        duration: recs[0].s.max(0.0),
        objective: rest[0],
    };
    // The quadratic part sum (d - c)^2 with c = z + t - 1 = -(1 - z - t) is
    // tracked as q (d - mean)^2 + m2, i.e. F = -q mean, W = m2 + q mean^2.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for q in 1..=n {
        let rec = &recs[q - 1];
        let c = rec.z + rec.t - 1.0;
        let delta = c - mean;
        mean += delta / q as f64;
        m2 += delta * (c - mean);

        let lo = rec.s.max(0.0);
        let hi = if q < n { recs[q].s } else { f64::INFINITY };
        let d = mean.clamp(lo, hi.max(lo));
        let g = q as f64 * (d - mean) * (d - mean) + m2 + rest[q];
        let slack = 1e-12 * best.objective.abs().max(1.0);
        if g < best.objective - slack || (g <= best.objective + slack && d > best.duration) {
            best = SweepResult {
                duration: d,
                objective: g,
            };
        }
    }
    best.objective += ws.constant_loss;
    Some(best)
}

/// Category objective at every breakpoint, from the running sums.
pub fn breakpoint_profile(ws: &CategoryWorkSet) -> Vec<(f64, f64)> {
    let recs = &ws.records;
    let n = recs.len();
    let mut rest = vec![0.0; n + 1];
    for q in (0..n).rev() {
        rest[q] = rest[q + 1] + recs[q].flat();
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for q in 1..=n {
        let rec = &recs[q - 1];
        let c = rec.z + rec.t - 1.0;
        let delta = c - mean;
        mean += delta / q as f64;
        m2 += delta * (c - mean);
        let d = rec.s;
        out.push((
            d,
            q as f64 * (d - mean) * (d - mean) + m2 + rest[q] + ws.constant_loss,
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DurationUpdate {
    pub durations: DurationVector,
    /// Categories without any finite-recency purchase; their duration is 0.
    pub empty: Vec<bool>,
    /// Summed positive-sample loss at the new durations (unweighted by eta).
    pub loss: f64,
}

/// Solves every category independently.
pub fn update_durations(worksets: &[CategoryWorkSet]) -> DurationUpdate {
    let results: Vec<Option<SweepResult>> = worksets.par_iter().map(sweep_category).collect();
    let mut durations = Vec::with_capacity(worksets.len());
    let mut empty = Vec::with_capacity(worksets.len());
    let mut loss = 0.0;
    for (ws, res) in worksets.iter().zip(results) {
        match res {
            Some(r) => {
                durations.push(r.duration);
                empty.push(false);
                loss += r.objective;
            }
            None => {
                durations.push(0.0);
                empty.push(true);
                loss += ws.constant_loss;
            }
        }
    }
    DurationUpdate {
        durations: DurationVector(durations),
        empty,
        loss,
    }
}
