//! Dense brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use demandrec::data::{CategoryMap, PurchaseLog, RecencyIndex, Triplet};
use demandrec::{DurationVector, FactoredUtilityMatrix, ModelState, SolverConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random log with roughly `density * m * n * l` purchases.
pub fn random_instance(
    m: usize,
    n: usize,
    l: usize,
    r: usize,
    density: f64,
    seed: u64,
) -> (PurchaseLog, CategoryMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<u32> = (0..n).map(|j| (j % r) as u32).collect();
    for j in (1..n).rev() {
        let k = rng.random_range(0..=j);
        assignment.swap(j, k);
    }
    let mut triplets = Vec::new();
    for i in 0..m {
        for j in 0..n {
            for k in 0..l {
                if rng.random_bool(density) {
                    triplets.push(Triplet::new(i as u32, j as u32, k as u32));
                }
            }
        }
    }
    if triplets.is_empty() {
        triplets.push(Triplet::new(0, 0, 0));
    }
    (
        PurchaseLog::new(m, n, l, triplets).unwrap(),
        CategoryMap::new(assignment, r).unwrap(),
    )
}

pub fn random_dense(m: usize, n: usize, scale: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(m, n, |_, _| rng.random_range(-scale..scale))
}

pub fn purchase_set(log: &PurchaseLog) -> HashSet<(u32, u32, u32)> {
    log.triplets()
        .iter()
        .map(|t| (t.user, t.item, t.slot))
        .collect()
}

/// Recency by scanning every earlier slot of every item in the category.
pub fn brute_recency(
    log: &PurchaseLog,
    cats: &CategoryMap,
    user: u32,
    category: u32,
    slot: u32,
) -> Option<u32> {
    let set = purchase_set(log);
    (0..slot).rev().find_map(|k| {
        (0..log.num_items() as u32)
            .any(|j| cats.category(j) == category && set.contains(&(user, j, k)))
            .then_some(slot - k)
    })
}

/// Dense evaluation of the smooth loss over every cell of the tensor.
pub fn dense_smooth(
    x: &DMatrix<f64>,
    d: &[f64],
    log: &PurchaseLog,
    cats: &CategoryMap,
    eta: f64,
) -> f64 {
    let set = purchase_set(log);
    let mut total = 0.0;
    for i in 0..log.num_users() as u32 {
        for j in 0..log.num_items() as u32 {
            let xij = x[(i as usize, j as usize)];
            for k in 0..log.num_slots() as u32 {
                if set.contains(&(i, j, k)) {
                    let c = cats.category(j);
                    let pen = brute_recency(log, cats, i, c, k)
                        .map_or(0.0, |t| (d[c as usize] - t as f64).max(0.0));
                    let gap = (1.0 + pen - xij).max(0.0);
                    total += eta * gap * gap;
                } else {
                    total += (1.0 - eta) * xij * xij;
                }
            }
        }
    }
    total
}

pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    x.singular_values().sum()
}

pub fn dense_objective(
    x: &DMatrix<f64>,
    d: &[f64],
    log: &PurchaseLog,
    cats: &CategoryMap,
    eta: f64,
    lambda: f64,
) -> f64 {
    dense_smooth(x, d, log, cats, eta) + lambda * nuclear_norm(x)
}

/// Hinge target of every purchase, keyed by triplet, from brute-force recency.
pub fn dense_targets(
    d: &[f64],
    log: &PurchaseLog,
    cats: &CategoryMap,
) -> Vec<((u32, u32, u32), f64)> {
    log.triplets()
        .iter()
        .map(|t| {
            let c = cats.category(t.item);
            let pen = brute_recency(log, cats, t.user, c, t.slot)
                .map_or(0.0, |r| (d[c as usize] - r as f64).max(0.0));
            ((t.user, t.item, t.slot), 1.0 + pen)
        })
        .collect()
}

/// Gradient of the smooth loss, cell by cell.
pub fn dense_gradient(
    x: &DMatrix<f64>,
    d: &[f64],
    log: &PurchaseLog,
    cats: &CategoryMap,
    eta: f64,
) -> DMatrix<f64> {
    let l = log.num_slots() as f64;
    let mut g = x * (2.0 * (1.0 - eta) * l);
    for ((i, j, _), a) in dense_targets(d, log, cats) {
        let xij = x[(i as usize, j as usize)];
        g[(i as usize, j as usize)] += -2.0 * eta * (a - xij).max(0.0) - 2.0 * (1.0 - eta) * xij;
    }
    g
}

/// Singular-value soft-thresholding with exact SVD, keeping at most
/// `max_rank` values.
pub fn dense_prox(g: &DMatrix<f64>, amount: f64, max_rank: usize) -> DMatrix<f64> {
    let svd = g.clone().svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = DMatrix::zeros(g.nrows(), g.ncols());
    for &a in order.iter().take(max_rank) {
        let s = svd.singular_values[a] - amount;
        if s > 0.0 {
            out += u.column(a) * v_t.row(a) * s;
        }
    }
    out
}

/// Reference proximal-gradient run with the same acceptance rule as the
/// solver: steps that raise the objective halve the step size.
#[allow(clippy::too_many_arguments)]
pub fn dense_prox_run(
    x0: &DMatrix<f64>,
    d: &[f64],
    log: &PurchaseLog,
    cats: &CategoryMap,
    eta: f64,
    lambda: f64,
    mut gamma: f64,
    max_rank: usize,
    steps: usize,
    tol: f64,
) -> (DMatrix<f64>, f64) {
    let mut x = x0.clone();
    let mut current = dense_objective(&x, d, log, cats, eta, lambda);
    let mut accepted = 0;
    while accepted < steps {
        let g = &x - dense_gradient(&x, d, log, cats, eta) * gamma;
        let cand = dense_prox(&g, gamma * lambda, max_rank);
        let value = dense_objective(&cand, d, log, cats, eta, lambda);
        if value > current + 1e-8 * current.abs().max(1.0) {
            gamma *= 0.5;
            continue;
        }
        let change = (current - value).abs() / current.abs().max(1.0);
        x = cand;
        current = value;
        accepted += 1;
        if change < tol {
            break;
        }
    }
    (x, current)
}

/// Largest grid point whose objective is within `slack` of the grid minimum.
pub fn grid_argmin<F: Fn(f64) -> f64>(f: F, hi: f64, step: f64, slack: f64) -> (f64, f64) {
    let points = (hi / step).ceil() as usize;
    let values: Vec<(f64, f64)> = (0..=points)
        .map(|q| (q as f64 * step, f(q as f64 * step)))
        .collect();
    let best = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let arg = values
        .iter()
        .filter(|v| v.1 <= best + slack)
        .map(|v| v.0)
        .fold(0.0, f64::max);
    (arg, best)
}

/// Three users, four items in two categories (items 0, 1 and items 2, 3),
/// ten slots. Training purchases: user 0 buys item 0 at slot 2, user 1 item
/// 2 at slot 5, user 2 item 3 at slot 0 and item 1 at slot 1. Returns the
/// model, categories, training recency and three test records.
pub fn metric_fixture(d: [f64; 2]) -> (ModelState, CategoryMap, RecencyIndex, Vec<Triplet>) {
    let x = DMatrix::from_row_slice(
        3,
        4,
        &[0.9, 0.8, 0.5, 0.1, 0.3, 0.2, 0.7, 0.6, 0.6, 0.4, 0.3, 0.7],
    );
    let cats = CategoryMap::new(vec![0, 0, 1, 1], 2).unwrap();
    let train = PurchaseLog::new(
        3,
        4,
        10,
        vec![
            Triplet::new(0, 0, 2),
            Triplet::new(1, 2, 5),
            Triplet::new(2, 3, 0),
            Triplet::new(2, 1, 1),
        ],
    )
    .unwrap();
    let rec = RecencyIndex::build(&train, &cats).unwrap();
    let model = ModelState {
        x: FactoredUtilityMatrix::from_dense(&x),
        d: DurationVector::new(d.to_vec()).unwrap(),
        objective_history: vec![],
        iteration: 0,
        config: SolverConfig::default(),
        num_slots: 10,
    };
    let test = vec![
        Triplet::new(0, 1, 4),
        Triplet::new(1, 3, 6),
        Triplet::new(2, 0, 8),
    ];
    (model, cats, rec, test)
}
