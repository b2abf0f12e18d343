//! Synthetic instances with known durations, noise injection and the
//! rank-inflation demonstration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{CategoryMap, PurchaseLog, Triplet};
use crate::duration::DurationVector;
use crate::error::{Error, Result};
use crate::rng::{
    stream_rng, STREAM_RANK_DEMO, STREAM_SYNTH_NOISE, STREAM_SYNTH_PURCHASES, STREAM_SYNTH_UTILITY,
};

/// Mean and standard deviation of the Gaussian factor entries.
const FACTOR_MEAN: f64 = 1.0;
const FACTOR_SD: f64 = 0.5;
/// Form utility at or above which a pair is purchasable.
pub const PURCHASE_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub r: usize,
    /// Latent dimension of the form utility.
    pub rank: usize,
    /// Probability that an eligible `(i, j, k)` becomes a purchase.
    pub obs_prob: f64,
    /// Flipped entries as a fraction of the noiseless `nnz`.
    pub noise_ratio: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            m: 200,
            n: 200,
            l: 120,
            r: 5,
            rank: 10,
            obs_prob: 0.5,
            noise_ratio: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.l == 0 || self.r == 0 || self.rank == 0 {
            return Err(Error::InvalidConfig(
                "synthetic dimensions m, n, l, r and rank must be positive".into(),
            ));
        }
        if self.l > u32::MAX as usize || self.m > u32::MAX as usize || self.n > u32::MAX as usize {
            return Err(Error::InvalidConfig(
                "synthetic dimensions exceed u32".into(),
            ));
        }
        if !(self.obs_prob > 0.0 && self.obs_prob <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "obs_prob must lie in (0, 1], got {}",
                self.obs_prob
            )));
        }
        if !(0.0..1.0).contains(&self.noise_ratio) {
            return Err(Error::InvalidConfig(format!(
                "noise_ratio must lie in [0, 1), got {}",
                self.noise_ratio
            )));
        }
        if self.r * 10 > self.l {
            log::warn!(
                "l = {} is shorter than the longest duration {}; it will rarely be observed",
                self.l,
                self.r * 10
            );
        }
        Ok(())
    }

    /// `d_true = (10, 20, ..., 10 r)`.
    pub fn true_durations(&self) -> DurationVector {
        DurationVector::new((1..=self.r).map(|k| 10.0 * k as f64).collect())
            .expect("positive durations")
    }
}

#[derive(Clone, Debug)]
pub struct SynthInstance {
    pub log: PurchaseLog,
    pub cats: CategoryMap,
    pub d_true: DurationVector,
    pub x_true: DMatrix<f64>,
}

fn gaussian_factor<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let normal = Normal::new(FACTOR_MEAN, FACTOR_SD).expect("valid normal");
    DMatrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// Min-max normalization into `[0, 1]`. A constant matrix maps to zeros.
pub fn normalize_unit_range(x: &mut DMatrix<f64>) {
    let lo = x.min();
    let hi = x.max();
    if hi > lo {
        x.apply(|v| *v = (*v - lo) / (hi - lo));
    } else {
        log::warn!("form utility is constant; normalized to all zeros");
        x.fill(0.0);
    }
}

/// `X = W H^T` with Gaussian factors, normalized into `[0, 1]`.
pub fn gen_form_utility(spec: &SynthSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, STREAM_SYNTH_UTILITY);
    let w = gaussian_factor(spec.m, spec.rank, &mut rng);
    let h = gaussian_factor(spec.n, spec.rank, &mut rng);
    let mut x = w * h.transpose();
    normalize_unit_range(&mut x);
    Ok(x)
}

/// Slot-by-slot simulation: at slot `k` every pair with `x_ij >= 0.5` whose
/// user-category recency is at least `d_c` is purchased with probability
/// `obs_prob`. A purchase resets the recency from the next slot on.
pub fn simulate_purchases(x_true: &DMatrix<f64>, spec: &SynthSpec) -> Result<SynthInstance> {
    spec.validate()?;
    if x_true.nrows() != spec.m || x_true.ncols() != spec.n {
        return Err(Error::DimensionMismatch(format!(
            "form utility is {} x {}, generator expects {} x {}",
            x_true.nrows(),
            x_true.ncols(),
            spec.m,
            spec.n
        )));
    }
    let mut rng = stream_rng(spec.seed, STREAM_SYNTH_PURCHASES);
    let assignment: Vec<u32> = (0..spec.n)
        .map(|_| rng.random_range(0..spec.r as u32))
        .collect();
    let cats = CategoryMap::new(assignment, spec.r)?;
    let d_true = spec.true_durations();
    let members = cats.members();

    let mut triplets = Vec::new();
    let mut eligible: Vec<u32> = Vec::new();
    for i in 0..spec.m {
        for (c, items) in members.iter().enumerate() {
            eligible.clear();
            eligible.extend(
                items
                    .iter()
                    .copied()
                    .filter(|&j| x_true[(i, j as usize)] >= PURCHASE_THRESHOLD),
            );
            if eligible.is_empty() {
                continue;
            }
            let d = d_true.get(c as u32);
            let mut last: Option<usize> = None;
            for k in 0..spec.l {
                if last.is_some_and(|p| ((k - p) as f64) < d) {
                    continue;
                }
                let mut bought = false;
                for &j in &eligible {
                    if rng.random_bool(spec.obs_prob) {
                        triplets.push(Triplet::new(i as u32, j, k as u32));
                        bought = true;
                    }
                }
                if bought {
                    last = Some(k);
                }
            }
        }
    }
    if triplets.is_empty() {
        return Err(Error::EmptySynthetic);
    }
    let log = PurchaseLog::new(spec.m, spec.n, spec.l, triplets)?;
    Ok(SynthInstance {
        log,
        cats,
        d_true,
        x_true: x_true.clone(),
    })
}

/// Generates the form utility and simulates a noiseless log, then applies
/// `spec.noise_ratio`.
pub fn generate(spec: &SynthSpec) -> Result<SynthInstance> {
    let x = gen_form_utility(spec)?;
    let inst = simulate_purchases(&x, spec)?;
    flip_noise(inst, spec.noise_ratio, spec.seed)
}

/// Adds `ceil(noise_ratio * nnz)` distinct uniformly random triplets that
/// were not already purchases.
pub fn flip_noise(inst: SynthInstance, noise_ratio: f64, seed: u64) -> Result<SynthInstance> {
    if !(0.0..1.0).contains(&noise_ratio) {
        return Err(Error::InvalidConfig(format!(
            "noise_ratio must lie in [0, 1), got {noise_ratio}"
        )));
    }
    let nnz = inst.log.nnz();
    let extra = (noise_ratio * nnz as f64).ceil() as usize;
    if extra == 0 {
        return Ok(inst);
    }
    let (m, n, l) = (
        inst.log.num_users(),
        inst.log.num_items(),
        inst.log.num_slots(),
    );
    let capacity = m as u128 * n as u128 * l as u128;
    if (nnz + extra) as u128 > capacity {
        return Err(Error::InvalidConfig(format!(
            "cannot add {extra} noise entries to a tensor with {} free cells",
            capacity - nnz as u128
        )));
    }
    let mut rng = stream_rng(seed, STREAM_SYNTH_NOISE);
    let mut added: HashSet<Triplet> = HashSet::with_capacity(extra);
    while added.len() < extra {
        let t = Triplet::new(
            rng.random_range(0..m as u32),
            rng.random_range(0..n as u32),
            rng.random_range(0..l as u32),
        );
        if !inst.log.contains(&t) {
            added.insert(t);
        }
    }
    let mut triplets = inst.log.triplets().to_vec();
    triplets.extend(added);
    Ok(SynthInstance {
        log: PurchaseLog::new(m, n, l, triplets)?,
        ..inst
    })
}

/// `||d_est - d_true|| / ||d_true||`.
pub fn duration_error(d_est: &DurationVector, d_true: &DurationVector) -> Result<f64> {
    if d_est.len() != d_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimated durations against {} true ones",
            d_est.len(),
            d_true.len()
        )));
    }
    let norm = d_true.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let diff = d_est
        .as_slice()
        .iter()
        .zip(d_true.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankDemo {
    pub x_spectrum: Vec<f64>,
    pub b_spectrum: Vec<f64>,
    /// Rectified penalties `max(0, d - t)`, row-major.
    pub h: DMatrix<f64>,
}

/// Low-rank form utility `X = U V^T` against the full-rank intention
/// `B = X - H` with `h = max(0, d - t)` and `d, t ~ N(1, 0.5)`.
pub fn rank_demo(m: usize, n: usize, rank: usize, seed: u64) -> RankDemo {
    let mut rng = stream_rng(seed, STREAM_RANK_DEMO);
    let u = gaussian_factor(m, rank, &mut rng);
    let v = gaussian_factor(n, rank, &mut rng);
    let x = u * v.transpose();
    let normal = Normal::new(FACTOR_MEAN, FACTOR_SD).expect("valid normal");
    let h = DMatrix::from_fn(m, n, |_, _| {
        let d: f64 = normal.sample(&mut rng);
        let t: f64 = normal.sample(&mut rng);
        (d - t).max(0.0)
    });
    let b = &x - &h;
    RankDemo {
        x_spectrum: x.singular_values().as_slice().to_vec(),
        b_spectrum: b.singular_values().as_slice().to_vec(),
        h,
    }
}

/// Count of singular values above `rel * sigma_max`.
pub fn numerical_rank(spectrum: &[f64], rel: f64) -> usize {
    let top = spectrum.iter().copied().fold(0.0, f64::max);
    spectrum.iter().filter(|&&s| s > rel * top).count()
}

/// `nnz` distinct uniformly random triplets with uniform categories, for
/// timing runs.
pub fn uniform_instance(
    m: usize,
    n: usize,
    l: usize,
    r: usize,
    nnz: usize,
    seed: u64,
) -> Result<(PurchaseLog, CategoryMap)> {
    if m == 0 || n == 0 || l == 0 || r == 0 {
        return Err(Error::InvalidConfig("dimensions must be positive".into()));
    }
    if nnz as u128 > m as u128 * n as u128 * l as u128 / 2 {
        return Err(Error::InvalidConfig(format!(
            "{nnz} records would fill more than half of the tensor"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_SYNTH_PURCHASES);
    let cats = CategoryMap::new((0..n).map(|_| rng.random_range(0..r as u32)).collect(), r)?;
    let mut triplets = Vec::with_capacity(nnz);
    while triplets.len() < nnz {
        while triplets.len() < nnz {
            triplets.push(Triplet::new(
                rng.random_range(0..m as u32),
                rng.random_range(0..n as u32),
                rng.random_range(0..l as u32),
            ));
        }
        triplets.sort_unstable();
        triplets.dedup();
    }
    Ok((PurchaseLog::new(m, n, l, triplets)?, cats))
}

/// Paths written by [`write_instance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFiles {
    pub purchases: PathBuf,
    pub categories: PathBuf,
    pub ground_truth: PathBuf,
}

/// Writes `purchases.csv` (`user,item,day` with day = slot),
/// `categories.csv` and a `ground_truth.txt` sidecar holding the durations
/// and the generating spec.
pub fn write_instance(inst: &SynthInstance, spec: &SynthSpec, dir: &Path) -> Result<SynthFiles> {
    std::fs::create_dir_all(dir)?;
    let files = SynthFiles {
        purchases: dir.join("purchases.csv"),
        categories: dir.join("categories.csv"),
        ground_truth: dir.join("ground_truth.txt"),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(&files.purchases)?);
    for t in inst.log.triplets() {
        writeln!(w, "{},{},{}", t.user, t.item, t.slot)?;
    }
    w.flush()?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&files.categories)?);
    for (j, c) in inst.cats.assignment().iter().enumerate() {
        writeln!(w, "{j},{c}")?;
    }
    w.flush()?;
    std::fs::write(&files.ground_truth, ground_truth_text(inst, spec))?;
    Ok(files)
}

fn ground_truth_text(inst: &SynthInstance, spec: &SynthSpec) -> String {
    let mut out = String::new();
    for (key, value) in [
        ("m", spec.m.to_string()),
        ("n", spec.n.to_string()),
        ("l", spec.l.to_string()),
        ("r", spec.r.to_string()),
        ("rank", spec.rank.to_string()),
        ("obs_prob", spec.obs_prob.to_string()),
        ("noise_ratio", spec.noise_ratio.to_string()),
        ("seed", spec.seed.to_string()),
        ("nnz", inst.log.nnz().to_string()),
    ] {
        let _ = writeln!(out, "{key} = {value}");
    }
    let d: Vec<String> = inst
        .d_true
        .as_slice()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let _ = writeln!(out, "d_true = {}", d.join(" "));
    out
}

/// Reads `d_true` back from a ground-truth sidecar.
pub fn read_true_durations(path: &Path) -> Result<DurationVector> {
    let text = std::fs::read_to_string(path)?;
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("d_true ="))
        .ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("{} has no d_true line", path.display()),
        })?;
    let values = line
        .split_whitespace()
        .map(|v| {
            v.parse::<f64>().map_err(|_| Error::Parse {
                line: 0,
                message: format!("invalid duration {v:?}"),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    DurationVector::new(values)
}
