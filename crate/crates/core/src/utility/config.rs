use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Hyper-parameters of the alternating solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the positive-sample loss against the unlabeled loss, in (0, 1).
    pub eta: f64,
    /// Nuclear-norm weight.
    pub lambda: f64,
    /// Demand threshold applied to scores at prediction time.
    pub tau: f64,
    /// Proximal step size; 0 selects `1 / (2(1-eta)l + 2 eta max n_ij)`.
    pub gamma: f64,
    pub max_rank: usize,
    pub oversample: usize,
    pub power_iters: usize,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Relative objective change that ends both loops. Infinity runs a single
    /// outer pass without declaring convergence.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eta: 0.5,
            lambda: 1.0,
            tau: 0.0,
            gamma: 0.0,
            max_rank: 10,
            oversample: 10,
            power_iters: 2,
            inner_iters: 50,
            outer_iters: 20,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Keys accepted by [`SolverConfig::set`], with their documentation.
pub const SOLVER_KEYS: &[(&str, &str)] = &[
    ("eta", "positive/unlabeled loss trade-off in (0, 1)"),
    ("lambda", "nuclear-norm weight (> 0)"),
    ("tau", "demand threshold on scores (>= 0)"),
    ("gamma", "proximal step size, 0 = automatic Lipschitz step"),
    ("max_rank", "target rank of the randomized SVD"),
    ("oversample", "extra randomized-SVD columns"),
    ("power_iters", "randomized-SVD subspace iterations"),
    ("inner_iters", "proximal-gradient iterations per X update"),
    ("outer_iters", "alternating (d, X) iterations"),
    ("tol", "relative objective-change tolerance"),
    ("seed", "top-level random seed"),
];

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be non-negative, got {}", self.tau));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if self.max_rank == 0 {
            return bad("max_rank must be at least 1".into());
        }
        if self.inner_iters == 0 || self.outer_iters == 0 {
            return bad("inner_iters and outer_iters must be at least 1".into());
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        Ok(())
    }

    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value.trim().parse::<T>().map_err(|_| {
                Error::InvalidConfig(format!("invalid value {value:?} for key {key:?}"))
            })
        }
        match key {
            "eta" => self.eta = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "max_rank" => self.max_rank = num(key, value)?,
            "oversample" => self.oversample = num(key, value)?,
            "power_iters" => self.power_iters = num(key, value)?,
            "inner_iters" => self.inner_iters = num(key, value)?,
            "outer_iters" => self.outer_iters = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "eta" => self.eta.to_string(),
            "lambda" => self.lambda.to_string(),
            "tau" => self.tau.to_string(),
            "gamma" => self.gamma.to_string(),
            "max_rank" => self.max_rank.to_string(),
            "oversample" => self.oversample.to_string(),
            "power_iters" => self.power_iters.to_string(),
            "inner_iters" => self.inner_iters.to_string(),
            "outer_iters" => self.outer_iters.to_string(),
            "tol" => self.tol.to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// `key = value` lines in a fixed order. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in SOLVER_KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}
