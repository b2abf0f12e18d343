//! Two-block alternating minimization of the joint objective `f(X, d)`.

pub mod model_file;

use std::time::{Duration, Instant};

use crate::data::{CategoryMap, PurchaseLog};
use crate::duration::{build_worksets, update_durations, DurationVector};
use crate::error::{Error, Result};
use crate::problem::TrainingData;
use crate::utility::{
    compute_targets, initial_utility, update_x, x_objective, FactoredUtilityMatrix, SolverConfig,
};

pub use model_file::{load_model, save_model};

/// Relative objective increase tolerated across an outer iteration.
pub const OUTER_INCREASE_TOLERANCE: f64 = 1e-8;

/// Fitted model: utility factors, durations and fit history.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub x: FactoredUtilityMatrix,
    pub d: DurationVector,
    /// Objective at the starting point, then after every outer iteration.
    pub objective_history: Vec<f64>,
    /// Outer iterations run so far, across warm starts.
    pub iteration: usize,
    pub config: SolverConfig,
    /// Number of training time slots `l`.
    pub num_slots: usize,
}

#[derive(Clone, Debug, Default)]
pub struct FitReport {
    pub iterations: usize,
    pub final_objective: f64,
    pub timings: Vec<Duration>,
    /// Categories whose duration fell back to 0 for lack of finite recencies.
    pub empty_categories: Vec<bool>,
    pub converged: bool,
    pub d_updates: usize,
    pub x_updates: usize,
    /// Accepted proximal steps per outer iteration.
    pub inner_iterations: Vec<usize>,
}

/// `f(X, d)`: positive hinge loss, unlabeled squared loss and nuclear norm,
/// in `O(nnz k + (m + n) k)` time.
pub fn evaluate_objective(
    x: &FactoredUtilityMatrix,
    d: &DurationVector,
    data: &TrainingData<'_>,
    cfg: &SolverConfig,
) -> Result<f64> {
    data.check_dims(x.num_rows(), x.num_cols())?;
    let targets = compute_targets(data, d)?;
    Ok(x_objective(data, &targets, x, cfg))
}

/// Fits from the default starting point: `d = 0` and the rescaled leading
/// subspace of the purchase-count matrix.
pub fn fit(
    log: &PurchaseLog,
    cats: &CategoryMap,
    cfg: &SolverConfig,
) -> Result<(ModelState, FitReport)> {
    cfg.validate()?;
    let data = TrainingData::new(log, cats)?;
    let x = initial_utility(&data, cfg);
    let d = DurationVector::zeros(data.num_categories());
    let start = evaluate_objective(&x, &d, &data, cfg)?;
    let state = ModelState {
        x,
        d,
        objective_history: vec![start],
        iteration: 0,
        config: cfg.clone(),
        num_slots: data.num_slots(),
    };
    run(state, &data, cfg)
}

/// Continues alternating from a previously fitted state.
pub fn fit_from(
    state: ModelState,
    log: &PurchaseLog,
    cats: &CategoryMap,
    cfg: &SolverConfig,
) -> Result<(ModelState, FitReport)> {
    cfg.validate()?;
    let data = TrainingData::new(log, cats)?;
    data.check_dims(state.x.num_rows(), state.x.num_cols())?;
    if state.d.len() != data.num_categories() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} durations, data has {} categories",
            state.d.len(),
            data.num_categories()
        )));
    }
    let mut state = state;
    let start = evaluate_objective(&state.x, &state.d, &data, cfg)?;
    state.objective_history.push(start);
    state.config = cfg.clone();
    state.num_slots = data.num_slots();
    run(state, &data, cfg)
}

fn run(
    mut state: ModelState,
    data: &TrainingData<'_>,
    cfg: &SolverConfig,
) -> Result<(ModelState, FitReport)> {
    let single_pass = !cfg.tol.is_finite();
    let mut report = FitReport::default();
    let mut previous = *state
        .objective_history
        .last()
        .expect("starting objective recorded");

    for _ in 0..cfg.outer_iters {
        let started = Instant::now();
        let outer = state.iteration + 1;

        let worksets = build_worksets(data, &state.x)?;
        let durations = update_durations(&worksets);
        state.d = durations.durations;
        report.empty_categories = durations.empty;
        report.d_updates += 1;

        let targets = compute_targets(data, &state.d)?;
        let update = update_x(&state.x, data, &targets, cfg, outer)?;
        state.x = update.x;
        report.x_updates += 1;
        report.inner_iterations.push(update.iterations);

        let current = x_objective(data, &targets, &state.x, cfg);
        if current > previous + OUTER_INCREASE_TOLERANCE * previous.abs().max(1.0) {
            return Err(Error::Diverged(format!(
                "outer iteration {outer} raised the objective from {previous} to {current}"
            )));
        }
        state.objective_history.push(current);
        state.iteration = outer;
        report.iterations += 1;
        report.timings.push(started.elapsed());
        log::info!(
            "iteration {outer}: objective {current:.6e}, rank {}, {} inner steps",
            state.x.rank(),
            report.inner_iterations.last().copied().unwrap_or(0)
        );

        let change = (previous - current).abs() / previous.abs().max(1.0);
        previous = current;
        if single_pass {
            break;
        }
        if change < cfg.tol {
            report.converged = true;
            break;
        }
    }
    report.final_objective = previous;
    if report.empty_categories.iter().any(|&e| e) {
        log::warn!(
            "{} categories have no repeat purchases; their duration defaults to 0",
            report.empty_categories.iter().filter(|&&e| e).count()
        );
    }
    Ok((state, report))
}
