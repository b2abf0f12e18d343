//! Per-fit context shared by both solver blocks.

use crate::data::{CategoryMap, PairIndex, PurchaseLog, Recency, RecencyIndex};
use crate::error::{Error, Result};

/// Training log plus everything about it that stays fixed while `X` and
/// `d` change: the recency of every triplet and the `(user, item)` runs.
#[derive(Clone, Debug)]
pub struct TrainingData<'a> {
    pub log: &'a PurchaseLog,
    pub cats: &'a CategoryMap,
    pub index: RecencyIndex,
    /// Recency of each triplet, aligned with `log.triplets()`.
    pub recency: Vec<Recency>,
    pub pairs: PairIndex,
}

impl<'a> TrainingData<'a> {
    pub fn new(log: &'a PurchaseLog, cats: &'a CategoryMap) -> Result<Self> {
        let index = RecencyIndex::build(log, cats)?;
        Ok(Self::with_index(log, cats, index))
    }

    pub fn with_index(log: &'a PurchaseLog, cats: &'a CategoryMap, index: RecencyIndex) -> Self {
        let recency = index.for_log(log, cats);
        let pairs = log.pairs();
        TrainingData {
            log,
            cats,
            index,
            recency,
            pairs,
        }
    }

    pub fn num_users(&self) -> usize {
        self.log.num_users()
    }

    pub fn num_items(&self) -> usize {
        self.log.num_items()
    }

    pub fn num_slots(&self) -> usize {
        self.log.num_slots()
    }

    pub fn num_categories(&self) -> usize {
        self.cats.num_categories()
    }

    pub(crate) fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if m != self.num_users() || n != self.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "utility matrix is {m} x {n}, log is {} x {}",
                self.num_users(),
                self.num_items()
            )));
        }
        Ok(())
    }
}
