use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::log::{PurchaseLog, Triplet};
use crate::error::{Error, Result};

/// Per-user random hold-out split.
#[derive(Clone, Debug)]
pub struct SplitSpec {
    pub train: PurchaseLog,
    /// Held-out triplets, sorted.
    pub test: Vec<Triplet>,
    pub seed: u64,
    pub fraction: f64,
}

/// Holds out `round(fraction * c)` records of each user with `c` records,
/// never more than `c - 1`. Users are visited in index order and each draws
/// a sample without replacement from one seeded stream.
pub fn split_train_test(log: &PurchaseLog, fraction: f64, seed: u64) -> Result<SplitSpec> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "hold-out fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triplets = log.triplets();
    let mut train = Vec::with_capacity(triplets.len());
    let mut test = Vec::new();
    let mut start = 0;
    while start < triplets.len() {
        let user = triplets[start].user;
        let end = start + triplets[start..].partition_point(|t| t.user == user);
        let records = &triplets[start..end];
        let count = records.len();
        let held = ((fraction * count as f64).round() as usize).min(count - 1);
        let mut is_test = vec![false; count];
        for pos in index::sample(&mut rng, count, held) {
            is_test[pos] = true;
        }
        for (t, held_out) in records.iter().zip(is_test) {
            if held_out {
                test.push(*t);
            } else {
                train.push(*t);
            }
        }
        start = end;
    }
    Ok(SplitSpec {
        train: PurchaseLog::new(log.num_users(), log.num_items(), log.num_slots(), train)?,
        test,
        seed,
        fraction,
    })
}
