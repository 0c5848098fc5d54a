//! Training-subset heuristics for local GP fits.
//!
//! Records live on a grid indexed by (iteration, interval). A query for the
//! interval starting at boundary `q` during iteration `k` sits at cell
//! `(k, q)`; the "column" is every earlier iteration at the same interval and
//! the "row" is the same iteration across neighbouring intervals.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{CorrectionStore, DatasetError, QueryTag};
use crate::rng::{keyed_rng, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetStrategy {
    /// The `m` nearest inputs in Euclidean distance.
    #[default]
    Nearest,
    /// The column's first `m` iterations, topped up with random records.
    ColRnd,
    /// The column's first `m` iterations only.
    ColOnly,
    /// Expand by grid distance, balancing iterations and intervals.
    RowCol,
    /// Nearby intervals first, then earlier iterations.
    RowMajor,
    /// Earlier iterations first, then nearby intervals.
    ColMajor,
}

impl SubsetStrategy {
    pub const ALL: [SubsetStrategy; 6] = [
        SubsetStrategy::Nearest,
        SubsetStrategy::ColRnd,
        SubsetStrategy::ColOnly,
        SubsetStrategy::RowCol,
        SubsetStrategy::RowMajor,
        SubsetStrategy::ColMajor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SubsetStrategy::Nearest => "nearest",
            SubsetStrategy::ColRnd => "col_rnd",
            SubsetStrategy::ColOnly => "col_only",
            SubsetStrategy::RowCol => "row_col",
            SubsetStrategy::RowMajor => "row_major",
            SubsetStrategy::ColMajor => "col_major",
        }
    }
}

impl fmt::Display for SubsetStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsetStrategy {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| DatasetError::UnknownStrategy(s.into()))
    }
}

/// Picks up to `m` training records for the query `query` at cell
/// `(iteration, interval)`. Only `col_only` may return fewer than
/// `min(m, store.len())` records.
pub fn select_subset(
    store: &CorrectionStore,
    strategy: SubsetStrategy,
    query: &[f64],
    interval: usize,
    iteration: usize,
    m: usize,
    tag: &QueryTag,
) -> Result<Vec<usize>, DatasetError> {
    store.check_query(query, m)?;
    let recs = store.records();
    let grid = |i: usize| {
        let r = &recs[i];
        let dit = iteration.abs_diff(r.iteration);
        let dint = interval.abs_diff(r.interval);
        (dit, dint, r.interval > interval, r.iteration)
    };
    let mut picked: Vec<usize> = match strategy {
        SubsetStrategy::Nearest => {
            return Ok(store
                .query_m_nearest(query, m, tag)?
                .into_iter()
                .map(|c| c.index)
                .collect());
        }
        SubsetStrategy::ColRnd | SubsetStrategy::ColOnly => {
            let mut col: Vec<usize> = (0..recs.len())
                .filter(|&i| recs[i].interval == interval)
                .collect();
            col.sort_by_key(|&i| (recs[i].iteration, i));
            col.truncate(m);
            col
        }
        SubsetStrategy::RowMajor | SubsetStrategy::ColMajor | SubsetStrategy::RowCol => {
            let mut all: Vec<usize> = (0..recs.len()).collect();
            all.sort_by_key(|&i| {
                let (dit, dint, right, _) = grid(i);
                let primary = match strategy {
                    SubsetStrategy::RowMajor => (dit, dint),
                    SubsetStrategy::ColMajor => (dint, dit),
                    _ => (dit + dint, dint),
                };
                (primary, right, i)
            });
            all.truncate(m);
            return Ok(all);
        }
    };
    if strategy == SubsetStrategy::ColRnd && picked.len() < m {
        let rest: Vec<usize> = (0..recs.len()).filter(|i| !picked.contains(i)).collect();
        let want = (m - picked.len()).min(rest.len());
        let mut rng = keyed_rng(
            tag.seed,
            &[
                stream::SUBSET_FILL,
                tag.iteration as u64,
                tag.interval as u64,
                tag.ordinal,
            ],
        );
        let mut fill: Vec<usize> = index::sample(&mut rng, rest.len(), want)
            .into_iter()
            .map(|j| rest[j])
            .collect();
        fill.sort_unstable();
        picked.extend(fill);
    }
    Ok(picked)
}
