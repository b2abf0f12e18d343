//! Purchase-tensor ingestion, category maps, recency queries and splits.

pub mod category;
pub mod log;
pub mod recency;
pub mod split;

pub use category::{ingest_categories, parse_categories, CategoryMap, IngestedCategories};
pub use log::{
    ingest_purchases, parse_purchases, IdMap, IngestOptions, IngestedLog, PairIndex, PurchaseLog,
    TimeFormat, Triplet,
};
pub use recency::{Recency, RecencyIndex};
pub use split::{split_train_test, SplitSpec};
