use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::log::IdMap;
use crate::error::{Error, Result};

/// Item to category assignment over `r` dense categories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryMap {
    assignment: Vec<u32>,
    r: usize,
}

impl CategoryMap {
    pub fn new(assignment: Vec<u32>, r: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&c| c as usize >= r) {
            return Err(Error::OutOfRange(format!("category {bad} >= r = {r}")));
        }
        Ok(CategoryMap { assignment, r })
    }

    pub fn num_items(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_categories(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn category(&self, item: u32) -> u32 {
        self.assignment[item as usize]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Items of every category, each list ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.r];
        for (item, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(item as u32);
        }
        out
    }

    /// Dense export: a `n r` header followed by one category index per item.
    pub fn save_dense(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{} {}", self.assignment.len(), self.r)?;
        for c in &self.assignment {
            writeln!(w, "{c}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_dense(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("category file has no header".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|f| f.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                message: "invalid header".into(),
            })?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: 1,
                message: "expected `n r` header".into(),
            });
        }
        let mut assignment = Vec::with_capacity(dims[0]);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            assignment.push(line.trim().parse::<u32>().map_err(|_| Error::Parse {
                line: idx + 2,
                message: format!("invalid category index {line:?}"),
            })?);
        }
        if assignment.len() != dims[0] {
            return Err(Error::DimensionMismatch(format!(
                "category file announces {} items, found {}",
                dims[0],
                assignment.len()
            )));
        }
        CategoryMap::new(assignment, dims[1])
    }
}

#[derive(Clone, Debug)]
pub struct IngestedCategories {
    pub map: CategoryMap,
    pub categories: IdMap,
    /// Rows naming items absent from the purchase log.
    pub unknown_items: usize,
}

pub fn ingest_categories(path: &Path, items: &IdMap) -> Result<IngestedCategories> {
    parse_categories(BufReader::new(File::open(path)?), items)
}

/// Parses `item_id,category_id` rows against the item ids of a log.
///
/// Only categories used by known items are indexed. An item listed twice
/// with different categories is a parse error.
pub fn parse_categories<R: BufRead>(reader: R, items: &IdMap) -> Result<IngestedCategories> {
    let mut by_item: HashMap<u32, (String, usize)> = HashMap::new();
    let mut unknown_items = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let line_no = idx + 1;
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected item_id,category_id, got {trimmed:?}"),
            });
        }
        let Some(item) = items.get(fields[0]) else {
            unknown_items += 1;
            continue;
        };
        match by_item.get(&item) {
            Some((prev, _)) if prev != fields[1] => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("item {:?} already assigned to category {prev:?}", fields[0]),
                });
            }
            Some(_) => {}
            None => {
                by_item.insert(item, (fields[1].to_string(), line_no));
            }
        }
    }
    if unknown_items > 0 {
        log::warn!("ignored {unknown_items} category rows for items not in the purchase log");
    }

    let missing: Vec<String> = (0..items.len() as u32)
        .filter(|i| !by_item.contains_key(i))
        .map(|i| items.id(i).to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCategories { items: missing });
    }

    let used: HashSet<String> = by_item.values().map(|(c, _)| c.clone()).collect();
    let categories = IdMap::from_ids(used);
    let assignment = (0..items.len() as u32)
        .map(|i| categories.get(&by_item[&i].0).unwrap_or_default())
        .collect();
    let map = CategoryMap::new(assignment, categories.len())?;
    Ok(IngestedCategories {
        map,
        categories,
        unknown_items,
    })
}
