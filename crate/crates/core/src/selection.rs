//! Simulated-annealing search for a fixed-size subset of words maximizing
//! the relevance score of the pruned representations.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{CodingMatrix, NeighborTable, RepresentationMatrix, Word};
use crate::error::{Error, Result};
use crate::pruning::{apply_plan, hard_prune_plan, prune_soft, PruneSet};
use crate::rng;
use crate::scalar::Scalar;
use crate::scoring::{max_relevance, ScoreReport};

/// Where the pruned representation of each candidate is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    /// Prune the initial matrix (or coding) down to the candidate.
    #[default]
    FromInitial,
    /// Update the last accepted state's matrix. Words leaving the subset are
    /// pruned by the heuristic transfer; words entering start with empty bins.
    /// Only affects hard coding, since soft coding always renormalizes `H`.
    Chained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    /// Cooling base: the temperature at iteration `t` is `lambda^t`.
    pub lambda: f64,
    pub tmax: usize,
    pub target_size: usize,
    /// Members swapped per move; clamped to `target_size`.
    pub move_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub derivation: Derivation,
}

impl AnnealConfig {
    pub const DEFAULT_LAMBDA: f64 = 0.9;
    pub const DEFAULT_TMAX_HARD: usize = 100;
    pub const DEFAULT_TMAX_SOFT: usize = 500;
    pub const DEFAULT_MOVE_SIZE: usize = 10;

    /// Defaults for hard coding.
    pub fn hard(target_size: usize, seed: u64) -> Self {
        AnnealConfig {
            lambda: Self::DEFAULT_LAMBDA,
            tmax: Self::DEFAULT_TMAX_HARD,
            target_size,
            move_size: Self::DEFAULT_MOVE_SIZE,
            seed,
            derivation: Derivation::FromInitial,
        }
    }

    /// Defaults for soft coding.
    pub fn soft(target_size: usize, seed: u64) -> Self {
        AnnealConfig { tmax: Self::DEFAULT_TMAX_SOFT, ..Self::hard(target_size, seed) }
    }

    /// Move size actually used.
    pub fn effective_move_size(&self) -> usize {
        self.move_size.min(self.target_size)
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if self.tmax == 0 {
            return Err(Error::InvalidParameter("tmax must be at least 1".into()));
        }
        if self.target_size == 0 || self.target_size >= k {
            return Err(Error::InvalidParameter(format!(
                "target size {} must satisfy 1 <= target < K = {k}",
                self.target_size
            )));
        }
        if self.move_size == 0 {
            return Err(Error::InvalidParameter("move size must be at least 1".into()));
        }
        Ok(())
    }
}

/// `min(1, exp(delta_e / lambda^t))`; improvements are always accepted.
pub fn acceptance_probability(delta_e: f64, lambda: f64, t: usize) -> f64 {
    if delta_e >= 0.0 {
        return 1.0;
    }
    if delta_e.is_nan() {
        return 0.0;
    }
    let temperature = lambda.powf(t as f64);
    (delta_e / temperature).exp().min(1.0)
}

const MOVE_RETRIES: usize = 16;

/// Replaces `move_size` uniformly chosen members of `current`, one at a time,
/// each by the first word on its neighbor list that is not in the candidate
/// at that moment. Returns the sorted candidate.
pub fn neighbor_move(
    current: &[Word],
    move_size: usize,
    neighbors: &NeighborTable,
    rng: &mut rng::Rng,
) -> Result<Vec<Word>> {
    let k = neighbors.k();
    'retry: for _ in 0..MOVE_RETRIES {
        let mut member = vec![false; k];
        for w in current {
            member[w.slot()] = true;
        }
        let mut candidate = current.to_vec();
        for pos in sample(rng, current.len(), move_size.min(current.len())) {
            let old = candidate[pos];
            let Some(&new) = neighbors.extended(old).iter().find(|w| !member[w.slot()]) else {
                continue 'retry;
            };
            member[old.slot()] = false;
            member[new.slot()] = true;
            candidate[pos] = new;
        }
        candidate.sort_unstable();
        return Ok(candidate);
    }
    Err(Error::NeighborsExhausted)
}

/// Initial representations to prune from.
#[derive(Debug, Clone, Copy)]
pub enum AnnealSource<'a, T> {
    /// Hard-coded `Pi^0` over the full index set.
    Hard(&'a RepresentationMatrix<T>),
    /// Retained soft coding matrix `H`.
    Soft(&'a CodingMatrix<T>),
}

impl<T: Scalar> AnnealSource<'_, T> {
    fn universe(&self) -> &[Word] {
        match self {
            AnnealSource::Hard(m) => m.active_words(),
            AnnealSource::Soft(h) => h.active_words(),
        }
    }
}

/// One iteration of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    /// Energy of the candidate evaluated at `t`.
    pub energy: f64,
    /// Energy of the state held after the accept/reject decision.
    pub current_energy: f64,
    pub accepted: bool,
    pub temperature: f64,
    pub probability: f64,
    pub degenerate_bins: usize,
}

#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub best_subset: Vec<Word>,
    pub best_energy: f64,
    pub best_report: ScoreReport,
    pub final_subset: Vec<Word>,
    pub trace: Vec<TraceRow>,
}

/// Runs the annealing chain for `config.tmax` iterations and returns the
/// best subset evaluated.
///
/// The initial subset is drawn uniformly and always accepted. From `t = 1`
/// on, one uniform draw decides acceptance each iteration, even when the
/// probability is one, so the random stream does not depend on energies.
pub fn anneal<T: Scalar>(
    source: AnnealSource<'_, T>,
    neighbors: &NeighborTable,
    config: &AnnealConfig,
) -> Result<AnnealOutcome> {
    let universe = source.universe().to_vec();
    let k = neighbors.k();
    config.validate(k)?;
    if universe.len() != k || universe.last().map(|w| w.get()) != Some(k) {
        return Err(Error::InvalidData(format!("annealing needs representations over all K = {k} words")));
    }
    let mut r = rng::seeded(config.seed);
    let mut candidate: Vec<Word> = sample(&mut r, k, config.target_size).into_iter().map(Word::from_slot).collect();
    candidate.sort_unstable();

    let mut state: Option<(Vec<Word>, f64, Option<RepresentationMatrix<T>>)> = None;
    let mut best: Option<(Vec<Word>, f64, ScoreReport)> = None;
    let mut trace = Vec::with_capacity(config.tmax);
    for t in 0..config.tmax {
        let chained_from = match (&state, config.derivation, source) {
            (Some((_, _, Some(m))), Derivation::Chained, AnnealSource::Hard(_)) => Some(m),
            _ => None,
        };
        let pruned = derive(source, chained_from, &candidate, neighbors)?;
        let report = max_relevance(&pruned)?;
        let energy = report.score;
        let (accepted, probability) = match &state {
            None => (true, 1.0),
            Some((_, prev, _)) => {
                let p = acceptance_probability(energy - prev, config.lambda, t);
                let u: f64 = r.random();
                (!(p < u), p)
            }
        };
        if best.as_ref().is_none_or(|b| energy > b.1) {
            best = Some((candidate.clone(), energy, report.clone()));
        }
        if accepted {
            let keep = matches!(config.derivation, Derivation::Chained).then_some(pruned);
            state = Some((candidate.clone(), energy, keep));
        }
        let (current, current_energy, _) = state.as_ref().expect("initial state is always accepted");
        trace.push(TraceRow {
            t,
            energy,
            current_energy: *current_energy,
            accepted,
            temperature: config.lambda.powf(t as f64),
            probability,
            degenerate_bins: report.degenerate_bins(),
        });
        if t + 1 < config.tmax {
            candidate = neighbor_move(current, config.effective_move_size(), neighbors, &mut r)?;
        }
    }
    let (final_subset, _, _) = state.expect("tmax >= 1");
    let (best_subset, best_energy, best_report) = best.expect("tmax >= 1");
    Ok(AnnealOutcome { best_subset, best_energy, best_report, final_subset, trace })
}

/// Pruned representations for `subset`.
pub fn derive<T: Scalar>(
    source: AnnealSource<'_, T>,
    chained_from: Option<&RepresentationMatrix<T>>,
    subset: &[Word],
    neighbors: &NeighborTable,
) -> Result<RepresentationMatrix<T>> {
    match (source, chained_from) {
        (AnnealSource::Soft(h), _) => prune_soft(h, &PruneSet::keeping(h.active_words(), subset)?),
        (AnnealSource::Hard(initial), None) => {
            let prune = PruneSet::keeping(initial.active_words(), subset)?;
            let plan = hard_prune_plan(initial.active_words(), prune.pruned(), neighbors)?;
            Ok(apply_plan(initial, &plan, prune.surviving()))
        }
        (AnnealSource::Hard(_), Some(prev)) => {
            let widened = widen(prev, subset);
            let prune = PruneSet::keeping(widened.active_words(), subset)?;
            let plan = hard_prune_plan(widened.active_words(), prune.pruned(), neighbors)?;
            Ok(apply_plan(&widened, &plan, prune.surviving()))
        }
    }
}

/// `prev` extended by zero columns for the words of `subset` it lacks.
fn widen<T: Scalar>(prev: &RepresentationMatrix<T>, subset: &[Word]) -> RepresentationMatrix<T> {
    let mut union: Vec<Word> = prev.active_words().iter().chain(subset).copied().collect();
    union.sort_unstable();
    union.dedup();
    let src: Vec<Option<usize>> = union.iter().map(|w| prev.active_words().binary_search(w).ok()).collect();
    let data = prev.rows().flat_map(|row| src.iter().map(move |s| s.map_or(T::zero(), |j| row[j]))).collect();
    RepresentationMatrix::new_unchecked(
        union,
        data,
        prev.labels().to_vec(),
        prev.classes().to_vec(),
        prev.ids().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_neighbor_table;
    use crate::domain::{index_set, ClassId, Codebook, Metric};
    use rand::SeedableRng;

    fn w(i: usize) -> Word {
        Word::new(i)
    }

    fn line_table(k: usize, m: usize) -> NeighborTable {
        let cb = Codebook::new((0..k).map(|i| vec![i as f64]).collect(), Metric::SqEuclidean).unwrap();
        build_neighbor_table(&cb, m).unwrap()
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance_probability(0.0, 0.9, 3), 1.0);
        assert_eq!(acceptance_probability(0.3, 0.9, 50), 1.0);
        let p = acceptance_probability(-0.1, 0.9, 10);
        assert!((p - (-0.1f64 / 0.348_678_440_1).exp()).abs() < 1e-9, "{p}");
        assert!((p - 0.750_68).abs() < 5e-5, "{p}");
        assert_eq!(acceptance_probability(-0.1, 0.01, 200), 0.0);
    }

    #[test]
    fn move_of_size_zero_is_identity() {
        let t = line_table(6, 2);
        let mut r = rng::seeded(1);
        assert_eq!(neighbor_move(&[w(2), w(5)], 0, &t, &mut r).unwrap(), [w(2), w(5)]);
    }

    #[test]
    fn move_walks_to_nearest_non_member() {
        // Centroids 0, 1, 3: word 2's list is [1, 3]; 1 is a member.
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0], vec![3.0]], Metric::SqEuclidean).unwrap();
        let t = build_neighbor_table(&cb, 1).unwrap();
        let mut r = rng::seeded(0);
        // Moving one member of {1, 2}: either 1 -> 3? No, 1's list is [2, 3]
        // and 2 is a member, so 1 -> 3; likewise 2 -> 3.
        let out = neighbor_move(&[w(1), w(2)], 1, &t, &mut r).unwrap();
        assert!(out == [w(1), w(3)] || out == [w(2), w(3)]);
        let mut seen_two = false;
        for s in 0..50 {
            let mut r = rng::seeded(s);
            let out = neighbor_move(&[w(1), w(2)], 1, &t, &mut r).unwrap();
            seen_two |= out == [w(1), w(3)];
        }
        assert!(seen_two);
    }

    #[test]
    fn moves_keep_size_and_distinctness() {
        let t = line_table(30, 5);
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut current: Vec<Word> = (1..=8).map(|i| w(i * 3)).collect();
        for i in 0..10_000 {
            let out = neighbor_move(&current, 1 + i % 8, &t, &mut r).unwrap();
            assert_eq!(out.len(), 8);
            assert!(out.windows(2).all(|p| p[0] < p[1]));
            current = out;
        }
    }

    #[test]
    fn config_validation() {
        assert!(AnnealConfig::hard(5, 0).validate(50).is_ok());
        assert_eq!(AnnealConfig::hard(5, 0).effective_move_size(), 5);
        assert_eq!(AnnealConfig::soft(20, 0).tmax, 500);
        assert!(AnnealConfig { lambda: 1.0, ..AnnealConfig::hard(5, 0) }.validate(50).is_err());
        assert!(AnnealConfig::hard(50, 0).validate(50).is_err());
        assert!(AnnealConfig { move_size: 0, ..AnnealConfig::hard(5, 0) }.validate(50).is_err());
    }

    /// Two classes over `k` words; word 1's bin depends on the class.
    fn toy_matrix(k: usize, n: usize, seed: u64) -> RepresentationMatrix<f64> {
        let mut r = rng::seeded(seed);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let mut row: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 0.05).collect();
            row[0] += 2.0 * class as f64;
            let s: f64 = row.iter().sum();
            data.extend(row.iter().map(|v| v / s));
            labels.push(ClassId(class as u32));
        }
        RepresentationMatrix::new(
            index_set(k),
            data,
            labels,
            vec!["a".into(), "b".into()],
            (0..n).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn anneal_is_reproducible_and_tracks_best() {
        let m = toy_matrix(12, 60, 3);
        let t = line_table(12, 3);
        let cfg = AnnealConfig { tmax: 40, ..AnnealConfig::hard(3, 17) };
        let a = anneal(AnnealSource::Hard(&m), &t, &cfg).unwrap();
        let b = anneal(AnnealSource::Hard(&m), &t, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best_subset, b.best_subset);
        assert_eq!(a.trace.len(), 40);
        assert!(a.trace[0].accepted);
        let max = a.trace.iter().map(|r| r.energy).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.best_energy, max);
        assert_eq!(a.best_report.score, a.best_energy);
        assert_eq!(a.best_subset.len(), 3);
        for r in &a.trace {
            assert!(a.best_energy >= r.current_energy);
        }
    }

    #[test]
    fn cold_chain_freezes() {
        let m = toy_matrix(12, 40, 4);
        let t = line_table(12, 3);
        let cfg = AnnealConfig { lambda: 0.01, tmax: 1010, ..AnnealConfig::hard(3, 5) };
        let out = anneal(AnnealSource::Hard(&m), &t, &cfg).unwrap();
        for pair in out.trace.windows(2).skip(10) {
            let (prev, row) = (&pair[0], &pair[1]);
            if row.accepted {
                assert!(row.energy >= prev.current_energy, "t = {}", row.t);
            }
        }
    }

    #[test]
    fn chained_mode_conserves_mass() {
        let m = toy_matrix(10, 30, 6);
        let t = line_table(10, 2);
        let cfg = AnnealConfig { tmax: 25, derivation: Derivation::Chained, ..AnnealConfig::hard(4, 2) };
        let out = anneal(AnnealSource::Hard(&m), &t, &cfg).unwrap();
        assert_eq!(out.trace.len(), 25);
        let prev = derive(AnnealSource::Hard(&m), None, &[w(1), w(2), w(3), w(4)], &t).unwrap();
        let next = derive(AnnealSource::Hard(&m), Some(&prev), &[w(2), w(3), w(4), w(9)], &t).unwrap();
        for row in next.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
