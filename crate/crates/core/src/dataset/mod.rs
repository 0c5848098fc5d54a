//! The accumulated `(U, (F − G)(U))` observations and neighbour queries.

mod kdtree;
mod subset;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use kdtree::{squared_distance, Candidate, KdTree};
pub use subset::{select_subset, SubsetStrategy};

use crate::rng::{derive_key, mix64, stream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("record has dimension {got}, store expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("query against an empty correction store")]
    Empty,
    #[error("neighbour count must be at least 1")]
    ZeroNeighbours,
    #[error("unknown subset strategy `{0}`")]
    UnknownStrategy(alloc::string::String),
}

/// One observation: the correction `(F − G)(input)` computed for the
/// interval starting at boundary `interval` during iteration `iteration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub interval: usize,
    pub iteration: usize,
}

/// Identifies a neighbour query so that distance ties are broken by a
/// reproducible pseudo-random permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryTag {
    pub seed: u64,
    pub iteration: usize,
    pub interval: usize,
    pub ordinal: u64,
}

impl QueryTag {
    pub fn new(seed: u64, iteration: usize, interval: usize, ordinal: u64) -> Self {
        Self {
            seed,
            iteration,
            interval,
            ordinal,
        }
    }

    fn key(&self) -> u64 {
        derive_key(
            self.seed,
            &[
                stream::NEIGHBOUR_TIE,
                self.iteration as u64,
                self.interval as u64,
                self.ordinal,
            ],
        )
    }

    /// Tie-break rank of record `index` under this query.
    pub fn rank(&self, index: usize) -> u64 {
        mix64(self.key() ^ mix64(index as u64))
    }
}

/// Append-only store of correction records with a kd-tree over the inputs.
#[derive(Debug, Clone)]
pub struct CorrectionStore {
    dim: usize,
    records: Vec<CorrectionRecord>,
    inputs: Vec<f64>,
    tree: KdTree,
}

impl CorrectionStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            records: Vec::new(),
            inputs: Vec::new(),
            tree: KdTree::new(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CorrectionRecord] {
        &self.records
    }

    pub fn get(&self, index: usize) -> Option<&CorrectionRecord> {
        self.records.get(index)
    }

    /// Inputs as a row-major `len × dim` array.
    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Appends a batch and indexes it. The batch is validated first, so a
    /// dimension error leaves the store untouched.
    pub fn insert_batch(&mut self, batch: Vec<CorrectionRecord>) -> Result<(), DatasetError> {
        for r in &batch {
            for got in [r.input.len(), r.output.len()] {
                if got != self.dim {
                    return Err(DatasetError::Dimension {
                        expected: self.dim,
                        got,
                    });
                }
            }
        }
        let first = self.records.len();
        for r in batch {
            self.inputs.extend_from_slice(&r.input);
            self.records.push(r);
        }
        self.tree.extend(&self.inputs, first);
        Ok(())
    }

    fn check_query(&self, query: &[f64], m: usize) -> Result<(), DatasetError> {
        if query.len() != self.dim {
            return Err(DatasetError::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        if self.is_empty() {
            return Err(DatasetError::Empty);
        }
        if m == 0 {
            return Err(DatasetError::ZeroNeighbours);
        }
        Ok(())
    }

    /// The `min(m, len)` records nearest to `query`, closest first. Records
    /// at equal distance are ordered by `tag`'s pseudo-random ranks.
    pub fn query_m_nearest(
        &self,
        query: &[f64],
        m: usize,
        tag: &QueryTag,
    ) -> Result<Vec<Candidate>, DatasetError> {
        self.check_query(query, m)?;
        let key = tag.key();
        Ok(self
            .tree
            .nearest(&self.inputs, query, m, |i| mix64(key ^ mix64(i as u64))))
    }

    /// Reference implementation of [`Self::query_m_nearest`] by full sort.
    pub fn query_m_nearest_bruteforce(
        &self,
        query: &[f64],
        m: usize,
        tag: &QueryTag,
    ) -> Result<Vec<Candidate>, DatasetError> {
        self.check_query(query, m)?;
        let mut all: Vec<Candidate> = (0..self.len())
            .map(|i| Candidate {
                dist_sq: squared_distance(query, &self.inputs[i * self.dim..(i + 1) * self.dim]),
                key: tag.rank(i),
                index: i,
            })
            .collect();
        all.sort_unstable();
        all.truncate(m);
        Ok(all)
    }
}
