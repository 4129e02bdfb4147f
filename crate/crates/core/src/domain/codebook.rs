use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::domain::{index_set, Metric, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordered list of `K` centroids in `R^d`.
///
/// Every descriptor-to-centroid distance evaluated through
/// [`Codebook::distances_into`] is added to a per-codebook counter, which lets
/// callers check that pruning never falls back to re-coding.
#[derive(Debug)]
pub struct Codebook<T> {
    dim: usize,
    metric: Metric,
    centroids: Vec<T>,
    evaluations: AtomicU64,
}

impl<T: Scalar> Clone for Codebook<T> {
    /// The clone starts with a fresh distance counter.
    fn clone(&self) -> Self {
        Codebook {
            dim: self.dim,
            metric: self.metric,
            centroids: self.centroids.clone(),
            evaluations: AtomicU64::new(0),
        }
    }
}

impl<T: Scalar> PartialEq for Codebook<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.metric == other.metric && self.centroids == other.centroids
    }
}

impl<T: Scalar> Codebook<T> {
    pub fn new(rows: Vec<Vec<T>>, metric: Metric) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::InvalidCodebook(format!(
                "centroid {} has length {}, expected {dim}",
                i + 1,
                r.len()
            )));
        }
        Self::from_flat(dim, rows.concat(), metric)
    }

    /// Builds a codebook from a row-major `K x d` matrix.
    pub fn from_flat(dim: usize, centroids: Vec<T>, metric: Metric) -> Result<Self> {
        if dim == 0 || centroids.is_empty() {
            return Err(Error::InvalidCodebook("codebook needs at least one centroid".into()));
        }
        if centroids.len() % dim != 0 {
            return Err(Error::InvalidCodebook(format!(
                "{} values do not form rows of length {dim}",
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "codebook".into() });
        }
        // Rows are distinct under every supported metric iff their values differ.
        let mut seen = HashSet::with_capacity(centroids.len() / dim);
        for (i, row) in centroids.chunks_exact(dim).enumerate() {
            let key: Vec<u64> = row.iter().map(|v| (v.f64() + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidCodebook(format!("centroid {} duplicates an earlier one", i + 1)));
            }
        }
        Ok(Codebook { dim, metric, centroids, evaluations: AtomicU64::new(0) })
    }

    /// Number of words `K`.
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Same centroids under another metric.
    pub fn with_metric(&self, metric: Metric) -> Self {
        Codebook { metric, ..self.clone() }
    }

    /// The index set `1..=K`.
    pub fn index_set(&self) -> Vec<Word> {
        index_set(self.k())
    }

    pub fn centroid(&self, w: Word) -> &[T] {
        &self.centroids[w.slot() * self.dim..(w.slot() + 1) * self.dim]
    }

    /// Row-major `K x d` centroid matrix.
    pub fn centroids(&self) -> &[T] {
        &self.centroids
    }

    /// Distance between two centroids. Not counted as a coding evaluation.
    pub fn centroid_distance(&self, a: Word, b: Word) -> f64 {
        self.metric.distance(self.centroid(a), self.centroid(b))
    }

    /// Writes `delta(x, c_w)` for each `w` in `words` into `out`.
    pub fn distances_into(&self, x: &[T], words: &[Word], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(words.len(), out.len());
        for (o, &w) in out.iter_mut().zip(words) {
            *o = self.metric.distance(x, self.centroid(w));
        }
        self.evaluations.fetch_add(words.len() as u64, Ordering::Relaxed);
    }

    /// Descriptor-to-centroid distances evaluated through this codebook so far.
    pub fn distance_evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// New codebook holding only `words`, renumbered `1..=|words|` in order.
    pub fn restrict(&self, words: &[Word]) -> Result<Self> {
        crate::domain::check_word_list(words, self.k(), "codebook restriction")?;
        let mut data = Vec::with_capacity(words.len() * self.dim);
        for &w in words {
            data.extend_from_slice(self.centroid(w));
        }
        Self::from_flat(self.dim, data, self.metric)
    }
}

/// Per-word lists of the nearest other words, nearest first.
///
/// `nearest(w)` has exactly `m` entries. Each list continues past `m` up to
/// `depth` entries; sequential pruning tops up from that extension once some
/// of the first `m` neighbors have themselves been pruned.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    m: usize,
    lists: Vec<Vec<Word>>,
}

impl NeighborTable {
    /// Validates lists indexed by word slot. Every list must hold at least `m`
    /// distinct words other than its owner, all within `1..=lists.len()`.
    pub fn new(m: usize, lists: Vec<Vec<Word>>) -> Result<Self> {
        let k = lists.len();
        if m == 0 || m >= k {
            return Err(Error::InvalidParameter(format!("neighbor count m = {m} must satisfy 1 <= m < K = {k}")));
        }
        for (slot, list) in lists.iter().enumerate() {
            let owner = Word::from_slot(slot);
            if list.len() < m {
                return Err(Error::InvalidData(format!("neighbor list of word {owner} is shorter than m = {m}")));
            }
            let mut seen = HashSet::with_capacity(list.len());
            for &w in list {
                if w == owner || w.get() > k || !seen.insert(w) {
                    return Err(Error::InvalidData(format!(
                        "neighbor list of word {owner} has an invalid entry {w}"
                    )));
                }
            }
        }
        Ok(NeighborTable { m, lists })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.lists.len()
    }

    /// Shortest list length; pruning can top up at most this far.
    pub fn depth(&self) -> usize {
        self.lists.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// The `m` nearest neighbors of `w`.
    pub fn nearest(&self, w: Word) -> &[Word] {
        &self.lists[w.slot()][..self.m]
    }

    /// The full stored list for `w`.
    pub fn extended(&self, w: Word) -> &[Word] {
        &self.lists[w.slot()]
    }

    pub fn lists(&self) -> &[Vec<Word>] {
        &self.lists
    }
}
