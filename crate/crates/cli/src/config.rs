//! Flat `key = value` run configuration shared by every subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use demandrec::data::TimeFormat;
use demandrec::synth::SynthSpec;
use demandrec::utility::SOLVER_KEYS;
use demandrec::{Error, Result, SolverConfig};

/// Keys beyond the solver's, with their documentation.
pub const RUN_KEYS: &[(&str, &str)] = &[
    ("purchases", "purchase CSV (user_id,item_id,timestamp); empty = <output-dir>/purchases.csv"),
    ("categories", "category CSV (item_id,category_id); empty = <output-dir>/categories.csv"),
    ("ground_truth", "duration sidecar for reporting recovery error; empty = <output-dir>/ground_truth.txt if present"),
    ("warm_start", "train: continue from <output-dir>/model.bin instead of the default start"),
    ("time_format", "timestamp format: epoch-days or iso-date"),
    ("granularity", "days per time slot"),
    ("test_fraction", "share of each user's records held out for evaluation"),
    ("item_sample_size", "candidates per record for the item metric, 0 = all items"),
    ("per_record_csv", "also write per-record metric values"),
    ("zero_durations", "evaluate with every duration forced to 0"),
    ("user", "user id to recommend for"),
    ("slot", "slot to recommend at; empty = first slot after training"),
    ("top_n", "number of recommended items"),
    ("synth_m", "synthetic users"),
    ("synth_n", "synthetic items"),
    ("synth_l", "synthetic time slots"),
    ("synth_r", "synthetic categories (durations 10, 20, ..., 10 r)"),
    ("synth_rank", "latent rank of the synthetic form utility"),
    ("synth_obs_prob", "probability an eligible purchase is observed"),
    ("synth_noise_ratio", "random extra purchases as a fraction of nnz"),
    ("demo_m", "rank-demo rows"),
    ("demo_n", "rank-demo columns"),
    ("demo_rank", "rank-demo latent rank"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub purchases: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub warm_start: bool,
    pub time_format: TimeFormat,
    pub granularity: u64,
    pub test_fraction: f64,
    pub item_sample_size: usize,
    pub per_record_csv: bool,
    pub zero_durations: bool,
    pub user: Option<String>,
    pub slot: Option<u32>,
    pub top_n: usize,
    pub synth: SynthSpec,
    pub demo_m: usize,
    pub demo_n: usize,
    pub demo_rank: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solver: SolverConfig::default(),
            purchases: None,
            categories: None,
            ground_truth: None,
            warm_start: false,
            time_format: TimeFormat::EpochDays,
            granularity: 1,
            test_fraction: 0.2,
            item_sample_size: 100,
            per_record_csv: false,
            zero_durations: false,
            user: None,
            slot: None,
            top_n: 10,
            synth: SynthSpec::default(),
            demo_m: 50,
            demo_n: 100,
            demo_rank: 10,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::InvalidConfig(format!("invalid value {value:?} for key {key:?}")))
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    /// Every key in output order, with documentation.
    pub fn keys() -> impl Iterator<Item = &'static (&'static str, &'static str)> {
        SOLVER_KEYS.iter().chain(RUN_KEYS)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "purchases" => self.purchases = path(value),
            "categories" => self.categories = path(value),
            "ground_truth" => self.ground_truth = path(value),
            "warm_start" => self.warm_start = parse(key, value)?,
            "time_format" => self.time_format = parse(key, value)?,
            "granularity" => self.granularity = parse(key, value)?,
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "item_sample_size" => self.item_sample_size = parse(key, value)?,
            "per_record_csv" => self.per_record_csv = parse(key, value)?,
            "zero_durations" => self.zero_durations = parse(key, value)?,
            "user" => self.user = (!value.is_empty()).then(|| value.to_string()),
            "slot" => {
                self.slot = if value.is_empty() {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "top_n" => self.top_n = parse(key, value)?,
            "synth_m" => self.synth.m = parse(key, value)?,
            "synth_n" => self.synth.n = parse(key, value)?,
            "synth_l" => self.synth.l = parse(key, value)?,
            "synth_r" => self.synth.r = parse(key, value)?,
            "synth_rank" => self.synth.rank = parse(key, value)?,
            "synth_obs_prob" => self.synth.obs_prob = parse(key, value)?,
            "synth_noise_ratio" => self.synth.noise_ratio = parse(key, value)?,
            "demo_m" => self.demo_m = parse(key, value)?,
            "demo_n" => self.demo_n = parse(key, value)?,
            "demo_rank" => self.demo_rank = parse(key, value)?,
            _ => self.solver.set(key, value)?,
        }
        if key == "seed" {
            self.synth.seed = self.solver.seed;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "purchases" => show_path(&self.purchases),
            "categories" => show_path(&self.categories),
            "ground_truth" => show_path(&self.ground_truth),
            "warm_start" => self.warm_start.to_string(),
            "time_format" => self.time_format.to_string(),
            "granularity" => self.granularity.to_string(),
            "test_fraction" => self.test_fraction.to_string(),
            "item_sample_size" => self.item_sample_size.to_string(),
            "per_record_csv" => self.per_record_csv.to_string(),
            "zero_durations" => self.zero_durations.to_string(),
            "user" => self.user.clone().unwrap_or_default(),
            "slot" => self.slot.map(|s| s.to_string()).unwrap_or_default(),
            "top_n" => self.top_n.to_string(),
            "synth_m" => self.synth.m.to_string(),
            "synth_n" => self.synth.n.to_string(),
            "synth_l" => self.synth.l.to_string(),
            "synth_r" => self.synth.r.to_string(),
            "synth_rank" => self.synth.rank.to_string(),
            "synth_obs_prob" => self.synth.obs_prob.to_string(),
            "synth_noise_ratio" => self.synth.noise_ratio.to_string(),
            "demo_m" => self.demo_m.to_string(),
            "demo_n" => self.demo_n.to_string(),
            "demo_rank" => self.demo_rank.to_string(),
            other => return self.solver.get(other),
        })
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::InvalidConfig(msg) => {
                    Error::InvalidConfig(format!("line {}: {msg}", idx + 1))
                }
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override {pair:?} is not key=value")))?;
        self.set(key.trim(), value)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.granularity == 0 {
            return Err(Error::InvalidConfig("granularity must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in Self::keys() {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    /// Help block listing every key with its default.
    pub fn keys_help() -> String {
        let defaults = RunConfig::default();
        let mut out = String::from("Configuration keys (--config file or --set key=value):\n");
        for (key, doc) in Self::keys() {
            let value = defaults.get(key).unwrap_or_default();
            let shown = if value.is_empty() {
                "\"\"".to_string()
            } else {
                value
            };
            let _ = writeln!(out, "  {key:<18} {doc} [default: {shown}]");
        }
        out
    }
}
