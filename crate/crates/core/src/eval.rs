//! Demand-aware scoring, top-N lists and the three ranking metrics.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use crate::data::{CategoryMap, RecencyIndex, Triplet};
use crate::driver::ModelState;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_ITEM_SAMPLING};
use crate::utility::FactorRows;

/// A `(user, item, slot)` to score. The slot may lie past the training
/// horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScoreQuery {
    pub user: u32,
    pub item: u32,
    pub slot: u32,
}

impl From<Triplet> for ScoreQuery {
    fn from(t: Triplet) -> Self {
        ScoreQuery {
            user: t.user,
            item: t.item,
            slot: t.slot,
        }
    }
}

/// Scores `x_ij - max(0, d_c - t)` with recency taken from the training
/// purchases in `rec`.
pub struct Scorer<'a> {
    model: &'a ModelState,
    cats: &'a CategoryMap,
    rec: &'a RecencyIndex,
    rows: FactorRows,
    members: Vec<Vec<u32>>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        model: &'a ModelState,
        cats: &'a CategoryMap,
        rec: &'a RecencyIndex,
    ) -> Result<Self> {
        let (m, n) = (model.x.num_rows(), model.x.num_cols());
        if cats.num_items() != n || rec.num_users() != m {
            return Err(Error::DimensionMismatch(format!(
                "model is {m} x {n}; categories cover {} items, recency index {} users",
                cats.num_items(),
                rec.num_users()
            )));
        }
        if cats.num_categories() != model.d.len() || rec.num_categories() != model.d.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} durations for {} categories",
                model.d.len(),
                cats.num_categories()
            )));
        }
        Ok(Scorer {
            model,
            cats,
            rec,
            rows: model.x.rows(),
            members: cats.members(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.model.x.num_rows()
    }

    pub fn num_items(&self) -> usize {
        self.model.x.num_cols()
    }

    pub fn num_slots(&self) -> usize {
        self.model.num_slots
    }

    fn check(&self, user: u32, item: Option<u32>) -> Result<()> {
        if user as usize >= self.num_users() {
            return Err(Error::OutOfRange(format!(
                "user {user} >= {}",
                self.num_users()
            )));
        }
        if let Some(item) = item {
            if item as usize >= self.num_items() {
                return Err(Error::OutOfRange(format!(
                    "item {item} >= {}",
                    self.num_items()
                )));
            }
        }
        Ok(())
    }

    #[inline]
    fn penalty(&self, user: u32, category: u32, slot: u32) -> f64 {
        self.rec
            .query(user, category, slot)
            .penalty(self.model.d.get(category))
    }

    pub fn score(&self, q: ScoreQuery) -> Result<f64> {
        self.check(q.user, Some(q.item))?;
        let c = self.cats.category(q.item);
        Ok(self.rows.entry(q.user as usize, q.item as usize) - self.penalty(q.user, c, q.slot))
    }

    /// Demand indicator `score > tau`.
    pub fn predict_demand(&self, q: ScoreQuery, tau: f64) -> Result<bool> {
        Ok(self.score(q)? > tau)
    }

    /// Scores of every item for `user` at `slot`.
    pub fn user_scores(&self, user: u32, slot: u32) -> Result<Vec<f64>> {
        self.check(user, None)?;
        let penalties: Vec<f64> = (0..self.cats.num_categories() as u32)
            .map(|c| self.penalty(user, c, slot))
            .collect();
        let mut scores = Vec::with_capacity(self.num_items());
        self.rows.row(user as usize, &mut scores);
        for (j, s) in scores.iter_mut().enumerate() {
            *s -= penalties[self.cats.category(j as u32) as usize];
        }
        Ok(scores)
    }

    /// Top `count` items by descending score, ties by ascending index.
    pub fn recommend_topn(&self, user: u32, slot: u32, count: usize) -> Result<Vec<(u32, f64)>> {
        if count > self.num_items() {
            return Err(Error::OutOfRange(format!(
                "requested {count} items from {}",
                self.num_items()
            )));
        }
        let scores = self.user_scores(user, slot)?;
        let mut order: Vec<u32> = (0..scores.len() as u32).collect();
        let cmp = |a: &u32, b: &u32| {
            scores[*b as usize]
                .total_cmp(&scores[*a as usize])
                .then(a.cmp(b))
        };
        if count < order.len() && count > 0 {
            order.select_nth_unstable_by(count - 1, cmp);
            order.truncate(count);
        }
        order.truncate(count);
        order.sort_by(cmp);
        Ok(order.into_iter().map(|j| (j, scores[j as usize])).collect())
    }

    /// 1-based rank of the best-scoring item of `category` among all items.
    fn best_category_rank(&self, scores: &[f64], category: u32) -> usize {
        let members = &self.members[category as usize];
        let best = members
            .iter()
            .copied()
            .reduce(|a, b| {
                if scores[b as usize] > scores[a as usize] {
                    b
                } else {
                    a
                }
            })
            .expect("categories are non-empty");
        rank_of(scores, best)
    }

    /// Slots between `slot` and the nearest slot at which some item of
    /// `category` has predicted demand; `l` when there is none.
    fn time_error(&self, user: u32, category: u32, slot: u32, tau: f64) -> usize {
        let l = self.num_slots();
        let best_form = self.members[category as usize]
            .iter()
            .map(|&j| self.rows.entry(user as usize, j as usize))
            .fold(f64::NEG_INFINITY, f64::max);
        let predicted = |k: usize| best_form - self.penalty(user, category, k as u32) > tau;
        let t = slot as usize;
        for delta in 0..l {
            let below = t.checked_sub(delta).filter(|&k| k < l);
            let above = Some(t + delta).filter(|&k| k < l);
            if below.is_none() && above.is_none() && delta > t {
                break;
            }
            if below.is_some_and(predicted) || above.is_some_and(predicted) {
                return delta;
            }
        }
        l
    }
}

/// 1-based position of `item` in the descending order with index tie-break.
fn rank_of(scores: &[f64], item: u32) -> usize {
    let s = scores[item as usize];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| v > s || (v == s && (j as u32) < item))
        .count()
}

/// Percentage plus the raw per-record value it averages.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricValue {
    pub percent: f64,
    pub raw: Vec<f64>,
}

fn ensure_nonempty(test: &[Triplet]) -> Result<()> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set has no records".into()));
    }
    Ok(())
}

fn average_percent(raw: &[f64], denominator: f64) -> f64 {
    raw.iter().sum::<f64>() / raw.len() as f64 / denominator * 100.0
}

/// Average best rank of the test item's category at the test slot, over `n`.
pub fn category_prediction_metric(scorer: &Scorer<'_>, test: &[Triplet]) -> Result<MetricValue> {
    ensure_nonempty(test)?;
    let raw = test
        .par_iter()
        .map(|t| {
            scorer.check(t.user, Some(t.item))?;
            let scores = scorer.user_scores(t.user, t.slot)?;
            Ok(scorer.best_category_rank(&scores, scorer.cats.category(t.item)) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MetricValue {
        percent: average_percent(&raw, scorer.num_items() as f64),
        raw,
    })
}

/// Average distance to the nearest predicted purchase slot in the test
/// item's category, over `l`.
pub fn time_prediction_metric(
    scorer: &Scorer<'_>,
    test: &[Triplet],
    tau: f64,
) -> Result<MetricValue> {
    ensure_nonempty(test)?;
    let raw = test
        .par_iter()
        .map(|t| {
            scorer.check(t.user, Some(t.item))?;
            let c = scorer.cats.category(t.item);
            Ok(scorer.time_error(t.user, c, t.slot, tau) as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MetricValue {
        percent: average_percent(&raw, scorer.num_slots() as f64),
        raw,
    })
}

/// Items ranked against the test item for record `record`: the item itself
/// plus `sample_size - 1` distinct others drawn uniformly.
pub fn item_sample(n: usize, item: u32, sample_size: usize, seed: u64, record: usize) -> Vec<u32> {
    let mut rng = stream_rng(seed.wrapping_add(record as u64), STREAM_ITEM_SAMPLING);
    let mut out: Vec<u32> = index::sample(&mut rng, n - 1, sample_size - 1)
        .into_iter()
        .map(|j| {
            if j as u32 >= item {
                j as u32 + 1
            } else {
                j as u32
            }
        })
        .collect();
    out.push(item);
    out
}

/// Average rank of the test item within its sampled candidate set, over the
/// sample size. A sample size of `n` ranks against every item.
pub fn item_prediction_metric(
    scorer: &Scorer<'_>,
    test: &[Triplet],
    sample_size: usize,
    seed: u64,
) -> Result<MetricValue> {
    ensure_nonempty(test)?;
    let n = scorer.num_items();
    if sample_size == 0 || sample_size > n {
        return Err(Error::InvalidConfig(format!(
            "item sample size must lie in 1..={n}, got {sample_size}"
        )));
    }
    let raw = test
        .par_iter()
        .enumerate()
        .map(|(idx, t)| {
            scorer.check(t.user, Some(t.item))?;
            let own = scorer.score((*t).into())?;
            let candidates = if sample_size == n {
                (0..n as u32).collect()
            } else {
                item_sample(n, t.item, sample_size, seed, idx)
            };
            let mut rank = 1usize;
            for j in candidates {
                if j == t.item {
                    continue;
                }
                let s = scorer.score(ScoreQuery {
                    user: t.user,
                    item: j,
                    slot: t.slot,
                })?;
                if s > own || (s == own && j < t.item) {
                    rank += 1;
                }
            }
            Ok(rank as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MetricValue {
        percent: average_percent(&raw, sample_size as f64),
        raw,
    })
}

/// Metrics for one evaluation run; absent entries were not requested.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub test_records: usize,
    pub category_rank_pct: Option<MetricValue>,
    pub time_error_pct: Option<MetricValue>,
    pub item_rank_pct: Option<MetricValue>,
}

impl MetricReport {
    /// Flat `key = value` summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "test_records = {}", self.test_records);
        for (key, value) in [
            ("category_rank_pct", &self.category_rank_pct),
            ("time_error_pct", &self.time_error_pct),
            ("item_rank_pct", &self.item_rank_pct),
        ] {
            if let Some(v) = value {
                let _ = writeln!(out, "{key} = {}", v.percent);
            }
        }
        out
    }

    /// One CSV row per test record with the raw value of each metric.
    pub fn write_per_record_csv(&self, test: &[Triplet], path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "user,item,slot,category_rank,time_error,item_rank")?;
        let cell = |v: &Option<MetricValue>, i: usize| {
            v.as_ref().map(|m| m.raw[i].to_string()).unwrap_or_default()
        };
        for (i, t) in test.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t.user,
                t.item,
                t.slot,
                cell(&self.category_rank_pct, i),
                cell(&self.time_error_pct, i),
                cell(&self.item_rank_pct, i)
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
