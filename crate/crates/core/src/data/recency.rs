use crate::data::category::CategoryMap;
use crate::data::log::PurchaseLog;
use crate::error::{Error, Result};

/// Slots elapsed since a user's latest earlier purchase in a category.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recency {
    /// Finite gap, always at least one slot.
    Slots(u32),
    /// No earlier purchase in the category.
    Infinite,
}

impl Recency {
    /// Time-utility penalty `max(0, d - t)`; zero for an infinite gap.
    #[inline]
    pub fn penalty(self, duration: f64) -> f64 {
        match self {
            Recency::Slots(t) => (duration - t as f64).max(0.0),
            Recency::Infinite => 0.0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Recency::Slots(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Recency::Slots(t) => Some(t),
            Recency::Infinite => None,
        }
    }

    /// `true` when the gap is at least `duration` (an infinite gap always is).
    pub fn at_least(self, duration: f64) -> bool {
        match self {
            Recency::Slots(t) => t as f64 >= duration,
            Recency::Infinite => true,
        }
    }
}

/// Sorted purchase slots per `(user, category)`, answering strict
/// predecessor recency queries.
#[derive(Clone, Debug)]
pub struct RecencyIndex {
    m: usize,
    r: usize,
    offsets: Vec<usize>,
    slots: Vec<u32>,
}

impl RecencyIndex {
    pub fn build(log: &PurchaseLog, cats: &CategoryMap) -> Result<Self> {
        if cats.num_items() != log.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "log has {} items, category map has {}",
                log.num_items(),
                cats.num_items()
            )));
        }
        let m = log.num_users();
        let r = cats.num_categories();
        let mut keyed: Vec<(usize, u32)> = log
            .triplets()
            .iter()
            .map(|t| (t.user as usize * r + cats.category(t.item) as usize, t.slot))
            .collect();
        keyed.sort_unstable();
        keyed.dedup();

        let mut offsets = vec![0usize; m * r + 1];
        for &(key, _) in &keyed {
            offsets[key + 1] += 1;
        }
        for i in 0..m * r {
            offsets[i + 1] += offsets[i];
        }
        let slots = keyed.into_iter().map(|(_, s)| s).collect();
        Ok(RecencyIndex {
            m,
            r,
            offsets,
            slots,
        })
    }

    pub fn num_users(&self) -> usize {
        self.m
    }

    pub fn num_categories(&self) -> usize {
        self.r
    }

    /// Strictly increasing purchase slots of `user` in `category`.
    pub fn slots(&self, user: u32, category: u32) -> &[u32] {
        let key = user as usize * self.r + category as usize;
        &self.slots[self.offsets[key]..self.offsets[key + 1]]
    }

    /// `slot - k'` for the largest purchase slot `k' < slot`, or infinite.
    pub fn query(&self, user: u32, category: u32, slot: u32) -> Recency {
        let slots = self.slots(user, category);
        match slots.partition_point(|&s| s < slot) {
            0 => Recency::Infinite,
            p => Recency::Slots(slot - slots[p - 1]),
        }
    }

    /// Recency of every triplet of `log`, in triplet order.
    pub fn for_log(&self, log: &PurchaseLog, cats: &CategoryMap) -> Vec<Recency> {
        log.triplets()
            .iter()
            .map(|t| self.query(t.user, cats.category(t.item), t.slot))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::log::Triplet;

    #[test]
    fn strict_predecessor() {
        // user 3, two items in category 2, purchases at slots 4 and 9
        let log = PurchaseLog::new(
            4,
            3,
            12,
            vec![
                Triplet::new(3, 0, 4),
                Triplet::new(3, 2, 9),
                Triplet::new(3, 2, 4),
            ],
        )
        .unwrap();
        let cats = CategoryMap::new(vec![2, 0, 2], 3).unwrap();
        let rec = RecencyIndex::build(&log, &cats).unwrap();
        assert_eq!(rec.slots(3, 2), &[4, 9]);
        assert_eq!(rec.query(3, 2, 9), Recency::Slots(5));
        assert_eq!(rec.query(3, 2, 4), Recency::Infinite);
        assert_eq!(rec.query(3, 2, 11), Recency::Slots(2));
        assert_eq!(rec.query(3, 0, 11), Recency::Infinite);
        assert_eq!(rec.query(0, 2, 11), Recency::Infinite);
    }

    #[test]
    fn penalty_and_comparison() {
        assert_eq!(Recency::Slots(3).penalty(10.0), 7.0);
        assert_eq!(Recency::Slots(12).penalty(10.0), 0.0);
        assert_eq!(Recency::Infinite.penalty(1e9), 0.0);
        assert!(Recency::Infinite.at_least(1e9));
        assert!(!Recency::Slots(9).at_least(10.0));
    }

    #[test]
    fn mismatched_dims_rejected() {
        let log = PurchaseLog::new(1, 2, 1, vec![Triplet::new(0, 0, 0)]).unwrap();
        let cats = CategoryMap::new(vec![0], 1).unwrap();
        assert!(RecencyIndex::build(&log, &cats).is_err());
    }
}
