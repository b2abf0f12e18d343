//! Binary purchase tensor stored as sorted coordinate triplets.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// One nonzero of the purchase tensor: `user` bought `item` during `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub user: u32,
    pub item: u32,
    pub slot: u32,
}

impl Triplet {
    pub fn new(user: u32, item: u32, slot: u32) -> Self {
        Triplet { user, item, slot }
    }
}

/// Sparse binary `m x n x l` purchase tensor.
///
/// Triplets are kept strictly sorted by `(user, item, slot)`, so every
/// `(user, item)` pair occupies a contiguous run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PurchaseLog {
    m: usize,
    n: usize,
    l: usize,
    triplets: Vec<Triplet>,
}

impl PurchaseLog {
    /// Sorts, collapses duplicates and range-checks the triplets.
    pub fn new(m: usize, n: usize, l: usize, mut triplets: Vec<Triplet>) -> Result<Self> {
        for t in &triplets {
            if t.user as usize >= m || t.item as usize >= n || t.slot as usize >= l {
                return Err(Error::OutOfRange(format!(
                    "triplet ({}, {}, {}) outside {m} x {n} x {l}",
                    t.user, t.item, t.slot
                )));
            }
        }
        triplets.sort_unstable();
        triplets.dedup();
        Ok(PurchaseLog { m, n, l, triplets })
    }

    pub fn num_users(&self) -> usize {
        self.m
    }

    pub fn num_items(&self) -> usize {
        self.n
    }

    pub fn num_slots(&self) -> usize {
        self.l
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn contains(&self, t: &Triplet) -> bool {
        self.triplets.binary_search(t).is_ok()
    }

    /// Range of triplet positions belonging to `user`.
    pub fn user_range(&self, user: u32) -> std::ops::Range<usize> {
        let lo = self.triplets.partition_point(|t| t.user < user);
        let hi = self.triplets.partition_point(|t| t.user <= user);
        lo..hi
    }

    /// Groups the triplets by distinct `(user, item)` pair.
    pub fn pairs(&self) -> PairIndex {
        let mut pairs = Vec::new();
        let mut offsets = vec![0];
        for (pos, t) in self.triplets.iter().enumerate() {
            if pairs.last() != Some(&(t.user, t.item)) {
                if pos > 0 {
                    offsets.push(pos);
                }
                pairs.push((t.user, t.item));
            }
        }
        offsets.push(self.triplets.len());
        if pairs.is_empty() {
            offsets.truncate(1);
        }
        PairIndex { pairs, offsets }
    }

    /// Writes the exported text form: a `m n l nnz` header, then one
    /// `user item slot` row per triplet.
    pub fn write_exported<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.m, self.n, self.l, self.nnz())?;
        for t in &self.triplets {
            writeln!(w, "{} {} {}", t.user, t.item, t.slot)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_exported(&self, path: &Path) -> Result<()> {
        self.write_exported(BufWriter::new(File::create(path)?))
    }

    pub fn read_exported<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (m, n, l, nnz) = match lines.next() {
            Some((_, line)) => {
                let line = line?;
                let v = parse_fields::<usize>(&line, 4, 1)?;
                (v[0], v[1], v[2], v[3])
            }
            None => return Err(Error::EmptyInput("exported log has no header".into())),
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_fields::<u32>(&line, 3, idx + 1)?;
            triplets.push(Triplet::new(v[0], v[1], v[2]));
        }
        if triplets.len() != nnz {
            return Err(Error::Parse {
                line: 1,
                message: format!("header announces {nnz} triplets, found {}", triplets.len()),
            });
        }
        PurchaseLog::new(m, n, l, triplets)
    }

    pub fn load_exported(path: &Path) -> Result<Self> {
        Self::read_exported(BufReader::new(File::open(path)?))
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str, count: usize, line_no: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {count} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid integer {f:?}"),
            })
        })
        .collect()
}

/// Distinct `(user, item)` pairs of a log, with the triplet run of each.
#[derive(Clone, Debug, Default)]
pub struct PairIndex {
    pairs: Vec<(u32, u32)>,
    offsets: Vec<usize>,
}

impl PairIndex {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    /// Triplet positions of pair `p`.
    pub fn run(&self, p: usize) -> std::ops::Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    /// Number of purchase slots `n_ij` for pair `p`.
    pub fn count(&self, p: usize) -> usize {
        self.offsets[p + 1] - self.offsets[p]
    }

    pub fn max_count(&self) -> usize {
        (0..self.len()).map(|p| self.count(p)).max().unwrap_or(0)
    }
}

/// Timestamp encoding in the purchases file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimeFormat {
    /// Integer days since the Unix epoch (any integer day count works).
    #[default]
    EpochDays,
    /// `YYYY-MM-DD` calendar dates.
    IsoDate,
}

impl std::str::FromStr for TimeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epoch-days" => Ok(TimeFormat::EpochDays),
            "iso-date" => Ok(TimeFormat::IsoDate),
            other => Err(Error::InvalidConfig(format!(
                "unknown time format {other:?} (expected epoch-days or iso-date)"
            ))),
        }
    }
}

impl std::fmt::Display for TimeFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TimeFormat::EpochDays => "epoch-days",
            TimeFormat::IsoDate => "iso-date",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IngestOptions {
    pub time_format: TimeFormat,
    /// Slot width in days.
    pub granularity: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            time_format: TimeFormat::EpochDays,
            granularity: 1,
        }
    }
}

/// Dense index assignment for external string ids.
///
/// Ids are ordered numerically when they are all integers and
/// lexicographically otherwise, so the assignment does not depend on row
/// order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdMap {
    pub fn from_ids<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let mut ids: Vec<String> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.iter().all(|s| s.parse::<i64>().is_ok()) {
            ids.sort_by_key(|s| s.parse::<i64>().unwrap_or_default());
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        IdMap { ids, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: u32) -> &str {
        &self.ids[index as usize]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// One id per line, in index order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for id in &self.ids {
            writeln!(w, "{id}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut ids = Vec::new();
        for line in reader.lines() {
            ids.push(line?);
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Ok(IdMap { ids, index })
    }
}

/// Result of ingesting a raw purchases file.
#[derive(Clone, Debug)]
pub struct IngestedLog {
    pub log: PurchaseLog,
    pub users: IdMap,
    pub items: IdMap,
    /// Day number mapped to slot 0.
    pub origin_day: i64,
}

pub fn ingest_purchases(path: &Path, opts: IngestOptions) -> Result<IngestedLog> {
    parse_purchases(BufReader::new(File::open(path)?), opts)
}

/// Parses `user_id,item_id,timestamp` rows. Blank lines and `#` comments
/// are skipped.
pub fn parse_purchases<R: BufRead>(reader: R, opts: IngestOptions) -> Result<IngestedLog> {
    if opts.granularity == 0 {
        return Err(Error::InvalidConfig("granularity must be positive".into()));
    }
    let mut rows: Vec<(String, String, i64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected user_id,item_id,timestamp, got {trimmed:?}"),
            });
        }
        let day = parse_day(fields[2], opts.time_format).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("invalid {} timestamp {:?}", opts.time_format, fields[2]),
        })?;
        rows.push((fields[0].to_string(), fields[1].to_string(), day));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("purchases file has no records".into()));
    }

    let users = IdMap::from_ids(rows.iter().map(|r| r.0.clone()));
    let items = IdMap::from_ids(rows.iter().map(|r| r.1.clone()));
    let origin_day = rows.iter().map(|r| r.2).min().unwrap_or(0);
    let g = opts.granularity as i64;
    let triplets: Vec<Triplet> = rows
        .iter()
        .map(|(u, i, day)| {
            Triplet::new(
                users.get(u).unwrap_or_default(),
                items.get(i).unwrap_or_default(),
                ((day - origin_day) / g) as u32,
            )
        })
        .collect();
    let l = triplets
        .iter()
        .map(|t| t.slot as usize + 1)
        .max()
        .unwrap_or(1);
    let log = PurchaseLog::new(users.len(), items.len(), l, triplets)?;
    Ok(IngestedLog {
        log,
        users,
        items,
        origin_day,
    })
}

fn parse_day(field: &str, format: TimeFormat) -> Option<i64> {
    match format {
        TimeFormat::EpochDays => field.parse::<i64>().ok(),
        TimeFormat::IsoDate => NaiveDate::parse_from_str(field, "%Y-%m-%d")
            .ok()
            .map(|d| d.num_days_from_ce() as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<IngestedLog> {
        parse_purchases(text.as_bytes(), IngestOptions::default())
    }

    #[test]
    fn duplicate_rows_collapse() {
        let ing = parse("u1,iA,0\nu1,iA,0\n").unwrap();
        assert_eq!(ing.log.nnz(), 1);
        assert_eq!(
            (
                ing.log.num_users(),
                ing.log.num_items(),
                ing.log.num_slots()
            ),
            (1, 1, 1)
        );
    }

    #[test]
    fn binning_spans_all_days() {
        let ing = parse("u1,iA,0\nu2,iB,3\n").unwrap();
        assert_eq!(ing.log.num_slots(), 4);
        let slots: Vec<u32> = ing.log.triplets().iter().map(|t| t.slot).collect();
        assert_eq!(slots, vec![0, 3]);
    }

    #[test]
    fn granularity_and_offset() {
        let opts = IngestOptions {
            granularity: 7,
            ..Default::default()
        };
        let ing = parse_purchases("a,x,100\na,x,106\na,x,107\nb,y,121\n".as_bytes(), opts).unwrap();
        let slots: Vec<u32> = ing.log.triplets().iter().map(|t| t.slot).collect();
        assert_eq!(slots, vec![0, 1, 3]);
        assert_eq!(ing.log.nnz(), 3);
        assert_eq!(ing.origin_day, 100);
    }

    #[test]
    fn iso_dates() {
        let opts = IngestOptions {
            time_format: TimeFormat::IsoDate,
            granularity: 1,
        };
        let ing = parse_purchases("u,i,2014-02-27\nu,i,2014-03-01\n".as_bytes(), opts).unwrap();
        assert_eq!(ing.log.num_slots(), 3);
    }

    #[test]
    fn malformed_row_reports_line() {
        match parse("# comment\nu1,iA,0\nu2,iB\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse("u1,iA,yesterday\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_error() {
        assert!(matches!(parse("\n# nothing\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        let ing = parse("10,1,0\n9,2,0\n").unwrap();
        assert_eq!(ing.users.ids(), &["9".to_string(), "10".to_string()]);
    }

    #[test]
    fn pair_index_groups_runs() {
        let log = PurchaseLog::new(
            2,
            3,
            5,
            vec![
                Triplet::new(1, 2, 4),
                Triplet::new(0, 1, 0),
                Triplet::new(0, 1, 3),
                Triplet::new(1, 0, 2),
            ],
        )
        .unwrap();
        let pairs = log.pairs();
        assert_eq!(pairs.pairs(), &[(0, 1), (1, 0), (1, 2)]);
        assert_eq!(pairs.count(0), 2);
        assert_eq!(pairs.run(2), 3..4);
        assert_eq!(pairs.max_count(), 2);
        assert!(PurchaseLog::new(1, 1, 1, vec![])
            .unwrap()
            .pairs()
            .is_empty());
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        assert!(PurchaseLog::new(1, 1, 1, vec![Triplet::new(0, 0, 1)]).is_err());
    }

    #[test]
    fn exported_header_mismatch() {
        let text = "1 1 2 2\n0 0 1\n";
        assert!(PurchaseLog::read_exported(text.as_bytes()).is_err());
    }
}
