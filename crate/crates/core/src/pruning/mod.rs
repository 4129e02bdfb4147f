//! Representation updates under word removal, without re-coding or re-pooling.
//!
//! * Hard coding: the mass `f_l` of a pruned word `l` moves to surviving
//!   words `k` with weights `Lambda_{k,l}`: `psi_k(f, l) = f_k + Lambda_{k,l} f_l`.
//!   [`psi_exact`] takes the weights explicitly (see [`estimate_lambda`]);
//!   [`psi_heuristic`] and [`prune_hard`] split `f_l` evenly over the
//!   metric-nearest neighbors of `l`.
//! * Soft coding: with the coding matrix `H` retained, renormalizing each row
//!   over the survivors ([`prune_soft`]) reproduces re-coding exactly.
//! * [`discard_baseline`]: drop the pruned bins and renormalize, no transfer.

mod lambda;

use rayon::prelude::*;

use crate::domain::{CodingMatrix, NeighborTable, Representation, RepresentationMatrix, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use lambda::{estimate_lambda, estimate_lambda_within, prune_hard_exact, GaussianConditional};

/// Split of the active words into pruned `S` and surviving `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneSet {
    pruned: Vec<Word>,
    surviving: Vec<Word>,
}

impl PruneSet {
    /// `universe` is the ascending active set; `pruned` must be a subset of it
    /// that leaves at least one survivor.
    pub fn new(universe: &[Word], pruned: &[Word]) -> Result<Self> {
        let mut s = pruned.to_vec();
        s.sort_unstable();
        if s.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::InvalidPruneSet("duplicate word in S".into()));
        }
        if let Some(w) = s.iter().find(|w| universe.binary_search(w).is_err()) {
            return Err(Error::InvalidPruneSet(format!("word {w} is not active")));
        }
        let surviving: Vec<Word> = universe.iter().copied().filter(|w| s.binary_search(w).is_err()).collect();
        if surviving.is_empty() {
            return Err(Error::InvalidPruneSet("no surviving words".into()));
        }
        Ok(PruneSet { pruned: s, surviving })
    }

    /// Prune everything in `universe` except `surviving`.
    pub fn keeping(universe: &[Word], surviving: &[Word]) -> Result<Self> {
        let mut t = surviving.to_vec();
        t.sort_unstable();
        t.dedup();
        if let Some(w) = t.iter().find(|w| universe.binary_search(w).is_err()) {
            return Err(Error::InvalidPruneSet(format!("word {w} is not active")));
        }
        let pruned: Vec<Word> = universe.iter().copied().filter(|w| t.binary_search(w).is_err()).collect();
        Self::new(universe, &pruned)
    }

    /// Pruned words `S`, ascending.
    pub fn pruned(&self) -> &[Word] {
        &self.pruned
    }

    /// Surviving words `T`, ascending.
    pub fn surviving(&self) -> &[Word] {
        &self.surviving
    }

    fn check_universe(&self, active: &[Word]) -> Result<()> {
        if self.pruned.len() + self.surviving.len() != active.len()
            || self.pruned.iter().chain(&self.surviving).any(|w| active.binary_search(w).is_err())
        {
            return Err(Error::InvalidPruneSet("S and T do not partition the active words".into()));
        }
        Ok(())
    }
}

/// Transfer probabilities `Lambda_{k,l}` for one pruned word `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionWeights {
    pruned: Word,
    weights: Vec<(Word, f64)>,
    samples: usize,
}

impl TransitionWeights {
    /// Weights must lie in `[0, 1]`, sum to one, and exclude `pruned`.
    pub fn new(pruned: Word, mut weights: Vec<(Word, f64)>) -> Result<Self> {
        weights.sort_by_key(|e| e.0);
        if weights.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::InvalidWeights("duplicate word".into()));
        }
        if weights.iter().any(|e| e.0 == pruned) {
            return Err(Error::InvalidWeights(format!("support contains the pruned word {pruned}")));
        }
        if weights.iter().any(|e| !(0.0..=1.0).contains(&e.1)) {
            return Err(Error::InvalidWeights("weights must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
        }
        Ok(TransitionWeights { pruned, weights, samples: 0 })
    }

    /// Equal weight on every word of `support`.
    pub fn uniform(pruned: Word, support: &[Word]) -> Result<Self> {
        let p = 1.0 / support.len() as f64;
        Self::new(pruned, support.iter().map(|&w| (w, p)).collect())
    }

    pub(crate) fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn pruned(&self) -> Word {
        self.pruned
    }

    /// `(k, Lambda_{k,l})`, ascending by `k`.
    pub fn weights(&self) -> &[(Word, f64)] {
        &self.weights
    }

    pub fn lambda(&self, k: Word) -> f64 {
        self.weights.binary_search_by_key(&k, |e| e.0).map_or(0.0, |i| self.weights[i].1)
    }

    /// Monte-Carlo sample count behind the estimate; zero for given weights.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Binomial standard error of `Lambda_{k,l}`, when estimated.
    pub fn standard_error(&self, k: Word) -> Option<f64> {
        (self.samples > 0).then(|| {
            let p = self.lambda(k);
            (p * (1.0 - p) / self.samples as f64).sqrt()
        })
    }
}

fn transfer<T: Scalar>(rep: &Representation<T>, l: Word, weights: &[(Word, f64)]) -> Representation<T> {
    let pos = rep.position(l).expect("checked by caller");
    let mass = rep.vector()[pos];
    let mut out = Vec::with_capacity(rep.len() - 1);
    let mut active = Vec::with_capacity(rep.len() - 1);
    let mut wi = 0;
    for (&w, &v) in rep.active_words().iter().zip(rep.vector()) {
        if w == l {
            continue;
        }
        while wi < weights.len() && weights[wi].0 < w {
            wi += 1;
        }
        let gain = if wi < weights.len() && weights[wi].0 == w { T::of(weights[wi].1) * mass } else { T::zero() };
        out.push(v + gain);
        active.push(w);
    }
    Representation::new_unchecked(out, active)
}

/// Removes bin `l` and splits `f_l` evenly over the members of `l`'s `m`
/// nearest neighbors that are still active.
pub fn psi_heuristic<T: Scalar>(
    rep: &Representation<T>,
    l: Word,
    neighbors: &NeighborTable,
) -> Result<Representation<T>> {
    if rep.position(l).is_none() || l.get() > neighbors.k() {
        return Err(Error::WordNotActive(l));
    }
    let recipients: Vec<Word> = neighbors.nearest(l).iter().copied().filter(|&k| rep.position(k).is_some()).collect();
    if recipients.is_empty() {
        return Err(Error::NoSurvivingNeighbors(l));
    }
    let share = 1.0 / recipients.len() as f64;
    let mut weights: Vec<(Word, f64)> = recipients.into_iter().map(|k| (k, share)).collect();
    weights.sort_by_key(|e| e.0);
    Ok(transfer(rep, l, &weights))
}

/// `psi_k(f, l) = f_k + Lambda_{k,l} f_l` on the support of `weights`, `f_k`
/// elsewhere; bin `l` is removed.
pub fn psi_exact<T: Scalar>(
    rep: &Representation<T>,
    l: Word,
    weights: &TransitionWeights,
) -> Result<Representation<T>> {
    if rep.position(l).is_none() {
        return Err(Error::WordNotActive(l));
    }
    if weights.pruned() != l {
        return Err(Error::InvalidWeights(format!("weights are for word {}, not {l}", weights.pruned())));
    }
    if let Some((w, _)) = weights.weights().iter().find(|(w, _)| rep.position(*w).is_none()) {
        return Err(Error::InvalidWeights(format!("support contains inactive word {w}")));
    }
    Ok(transfer(rep, l, weights.weights()))
}

/// One sequential pruning step: the pruned word and the words receiving an
/// equal share of its mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneStep {
    pub word: Word,
    pub recipients: Vec<Word>,
}

/// Recipients for pruning the words of `pruned` one at a time in ascending
/// order, starting from the active set `active`.
///
/// At each step the recipients of `l` are the first `min(m, |alive| - 1)`
/// words of its stored neighbor list that are still alive. With a table of
/// depth `K - 1` that count is always reached; a shallower table may yield
/// fewer, and fails only if none is left.
pub fn hard_prune_plan(active: &[Word], pruned: &[Word], neighbors: &NeighborTable) -> Result<Vec<PruneStep>> {
    let k = neighbors.k();
    if let Some(w) = active.last().filter(|w| w.get() > k) {
        return Err(Error::InvalidData(format!("word {w} is outside the neighbor table (K = {k})")));
    }
    let mut alive = vec![false; k];
    for w in active {
        alive[w.slot()] = true;
    }
    let mut n_alive = active.len();
    let mut steps = Vec::with_capacity(pruned.len());
    for &l in pruned {
        if !alive[l.slot()] {
            return Err(Error::WordNotActive(l));
        }
        alive[l.slot()] = false;
        n_alive -= 1;
        let want = neighbors.m().min(n_alive);
        let recipients: Vec<Word> =
            neighbors.extended(l).iter().copied().filter(|w| alive[w.slot()]).take(want).collect();
        if recipients.is_empty() {
            return Err(Error::NoSurvivingNeighbors(l));
        }
        steps.push(PruneStep { word: l, recipients });
    }
    Ok(steps)
}

/// Applies the heuristic transfer for every word of `prune.pruned()` in
/// ascending order to every row.
pub fn prune_hard<T: Scalar>(
    matrix: &RepresentationMatrix<T>,
    prune: &PruneSet,
    neighbors: &NeighborTable,
) -> Result<RepresentationMatrix<T>> {
    prune.check_universe(matrix.active_words())?;
    let plan = hard_prune_plan(matrix.active_words(), prune.pruned(), neighbors)?;
    Ok(apply_plan(matrix, &plan, prune.surviving()))
}

pub(crate) fn apply_plan<T: Scalar>(
    matrix: &RepresentationMatrix<T>,
    plan: &[PruneStep],
    surviving: &[Word],
) -> RepresentationMatrix<T> {
    let k = matrix.active_words().last().map_or(0, |w| w.get());
    let active = matrix.active_words();
    let shares: Vec<T> = plan.iter().map(|s| T::one() / T::of(s.recipients.len() as f64)).collect();
    let data: Vec<T> = matrix
        .rows()
        .collect::<Vec<_>>()
        .par_iter()
        .flat_map_iter(|row| {
            let mut buf = vec![T::zero(); k];
            for (w, v) in active.iter().zip(row.iter()) {
                buf[w.slot()] = *v;
            }
            for (step, share) in plan.iter().zip(&shares) {
                let gain = buf[step.word.slot()] * *share;
                buf[step.word.slot()] = T::zero();
                for r in &step.recipients {
                    buf[r.slot()] += gain;
                }
            }
            surviving.iter().map(move |w| buf[w.slot()]).collect::<Vec<_>>()
        })
        .collect();
    RepresentationMatrix::new_unchecked(
        surviving.to_vec(),
        data,
        matrix.labels().to_vec(),
        matrix.classes().to_vec(),
        matrix.ids().to_vec(),
    )
}

/// Rows with surviving coefficient mass below this cannot be renormalized.
pub const RENORMALIZATION_FLOOR: f64 = 1e-300;

/// Exact pruned soft-coded representation from retained coding rows:
/// `upsilon_k = (1/N) sum_i h_ik / sum_{j in T} h_ij` for `k in T`.
pub fn prune_soft<T: Scalar>(coding: &CodingMatrix<T>, prune: &PruneSet) -> Result<RepresentationMatrix<T>> {
    let active = coding.active_words();
    prune.check_universe(active)?;
    let keep: Vec<usize> = prune.surviving().iter().map(|w| active.binary_search(w).expect("checked")).collect();
    let width = active.len();
    let rows: Vec<Vec<T>> = coding
        .images()
        .par_iter()
        .enumerate()
        .map(|(image, img)| {
            let mut acc = vec![0.0f64; keep.len()];
            for (r, row) in img.data.chunks_exact(width).enumerate() {
                let s: f64 = keep.iter().map(|&j| row[j].f64()).sum();
                if !(s >= RENORMALIZATION_FLOOR) {
                    return Err(Error::RenormalizationUndefined { image, row: r });
                }
                for (a, &j) in acc.iter_mut().zip(&keep) {
                    *a += row[j].f64() / s;
                }
            }
            let n = img.rows as f64;
            Ok(acc.into_iter().map(|a| T::of(a / n)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(RepresentationMatrix::new_unchecked(
        prune.surviving().to_vec(),
        rows.concat(),
        coding.labels().to_vec(),
        coding.classes().to_vec(),
        coding.ids().to_vec(),
    ))
}

/// Result of [`discard_baseline`].
#[derive(Debug, Clone)]
pub struct Discarded<T> {
    pub representations: RepresentationMatrix<T>,
    /// Rows whose entire mass was pruned; they are set to uniform.
    pub flagged_rows: Vec<usize>,
}

/// Drops the pruned bins and renormalizes each row to sum to one.
pub fn discard_baseline<T: Scalar>(matrix: &RepresentationMatrix<T>, prune: &PruneSet) -> Result<Discarded<T>> {
    let active = matrix.active_words();
    prune.check_universe(active)?;
    let keep: Vec<usize> = prune.surviving().iter().map(|w| active.binary_search(w).expect("checked")).collect();
    let mut flagged_rows = Vec::new();
    let mut data = Vec::with_capacity(matrix.n_rows() * keep.len());
    for (i, row) in matrix.rows().enumerate() {
        let s: f64 = keep.iter().map(|&j| row[j].f64()).sum();
        if s > 0.0 {
            data.extend(keep.iter().map(|&j| T::of(row[j].f64() / s)));
        } else {
            flagged_rows.push(i);
            data.extend(std::iter::repeat_n(T::of(1.0 / keep.len() as f64), keep.len()));
        }
    }
    Ok(Discarded {
        representations: RepresentationMatrix::new_unchecked(
            prune.surviving().to_vec(),
            data,
            matrix.labels().to_vec(),
            matrix.classes().to_vec(),
            matrix.ids().to_vec(),
        ),
        flagged_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{index_set, ClassId, CodingScheme, ImageCoding, Metric};
    use proptest::prelude::*;

    fn w(i: usize) -> Word {
        Word::new(i)
    }

    fn rep(v: &[f64]) -> Representation<f64> {
        Representation::new(v.to_vec(), index_set(v.len())).unwrap()
    }

    fn matrix(rows: &[&[f64]]) -> RepresentationMatrix<f64> {
        let n = rows.len();
        RepresentationMatrix::new(
            index_set(rows[0].len()),
            rows.concat(),
            vec![ClassId(0); n],
            vec!["c".into()],
            (0..n).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    /// Table whose lists are given by hand (1-based words).
    fn table(m: usize, lists: &[&[usize]]) -> NeighborTable {
        NeighborTable::new(m, lists.iter().map(|l| l.iter().map(|&i| w(i)).collect()).collect()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn heuristic_even_split() {
        let t = table(2, &[&[2, 3], &[1, 3], &[1, 2]]);
        let out = psi_heuristic(&rep(&[0.2, 0.3, 0.5]), w(3), &t).unwrap();
        close(out.vector(), &[0.45, 0.55], 1e-15);
        assert_eq!(out.active_words(), [w(1), w(2)]);
    }

    #[test]
    fn heuristic_zero_mass_and_five_neighbors() {
        let t = table(2, &[&[2, 3], &[1, 3], &[1, 2]]);
        let out = psi_heuristic(&rep(&[0.4, 0.6, 0.0]), w(3), &t).unwrap();
        assert_eq!(out.vector(), [0.4, 0.6]);

        let t6 = table(
            5,
            &[&[2, 3, 4, 5, 6], &[1, 3, 4, 5, 6], &[1, 2, 4, 5, 6], &[1, 2, 3, 5, 6], &[1, 2, 3, 4, 6], &[1, 2, 3, 4, 5]],
        );
        let out = psi_heuristic(&rep(&[0.95, 0.01, 0.01, 0.01, 0.01, 0.01]), w(1), &t6).unwrap();
        close(out.vector(), &[0.2; 5], 1e-15);
    }

    #[test]
    fn heuristic_errors() {
        let t = table(1, &[&[2], &[1], &[2]]);
        let r = Representation::new(vec![0.5, 0.5], vec![w(1), w(3)]).unwrap();
        assert!(matches!(psi_heuristic(&r, w(2), &t), Err(Error::WordNotActive(_))));
        // Word 3's only listed neighbor (2) is not active.
        assert!(matches!(psi_heuristic(&r, w(3), &t), Err(Error::NoSurvivingNeighbors(_))));
    }

    #[test]
    fn exact_transfer_examples() {
        let r = Representation::new(vec![0.4, 0.6], index_set(2)).unwrap();
        let lam = TransitionWeights::new(w(2), vec![(w(1), 1.0)]).unwrap();
        assert_eq!(psi_exact(&r, w(2), &lam).unwrap().vector(), [1.0]);

        let lam = TransitionWeights::new(w(3), vec![(w(1), 0.25), (w(2), 0.75)]).unwrap();
        close(psi_exact(&rep(&[0.2, 0.3, 0.5]), w(3), &lam).unwrap().vector(), &[0.325, 0.675], 1e-15);

        let t = table(2, &[&[2, 3], &[1, 3], &[1, 2]]);
        let uniform = TransitionWeights::uniform(w(3), &[w(1), w(2)]).unwrap();
        let f = rep(&[0.1, 0.3, 0.6]);
        assert_eq!(psi_exact(&f, w(3), &uniform).unwrap(), psi_heuristic(&f, w(3), &t).unwrap());
    }

    #[test]
    fn exact_transfer_rejects_bad_weights() {
        assert!(TransitionWeights::new(w(3), vec![(w(1), 0.3), (w(2), 0.3)]).is_err());
        assert!(TransitionWeights::new(w(3), vec![(w(3), 1.0)]).is_err());
        assert!(TransitionWeights::new(w(3), vec![(w(1), 1.5), (w(2), -0.5)]).is_err());
        let r = Representation::new(vec![0.2, 0.3, 0.5], vec![w(1), w(2), w(4)]).unwrap();
        let lam = TransitionWeights::new(w(4), vec![(w(3), 1.0)]).unwrap();
        assert!(matches!(psi_exact(&r, w(4), &lam), Err(Error::InvalidWeights(_))));
        let other = TransitionWeights::new(w(2), vec![(w(1), 1.0)]).unwrap();
        assert!(psi_exact(&r, w(4), &other).is_err());
    }

    #[test]
    fn prune_set_partitions() {
        let u = index_set(4);
        let p = PruneSet::new(&u, &[w(3), w(1)]).unwrap();
        assert_eq!(p.pruned(), [w(1), w(3)]);
        assert_eq!(p.surviving(), [w(2), w(4)]);
        assert_eq!(PruneSet::keeping(&u, &[w(4), w(2)]).unwrap(), p);
        assert!(PruneSet::new(&u, &u).is_err());
        assert!(PruneSet::new(&u, &[w(5)]).is_err());
        assert!(PruneSet::new(&u, &[w(2), w(2)]).is_err());
    }

    fn ring_table(k: usize, m: usize) -> NeighborTable {
        // Words on a line; neighbors by distance, lower index first on ties.
        let lists = (1..=k)
            .map(|i| {
                let mut o: Vec<usize> = (1..=k).filter(|&j| j != i).collect();
                o.sort_by_key(|&j| (i.abs_diff(j), j));
                o.into_iter().map(w).collect()
            })
            .collect();
        NeighborTable::new(m, lists).unwrap()
    }

    #[test]
    fn prune_hard_identity_and_collapse() {
        let m = matrix(&[&[0.1, 0.2, 0.3, 0.4], &[0.25, 0.25, 0.25, 0.25]]);
        let t = ring_table(4, 2);
        let none = PruneSet::new(m.active_words(), &[]).unwrap();
        assert_eq!(prune_hard(&m, &none, &t).unwrap(), m);

        let all_but_one = PruneSet::keeping(m.active_words(), &[w(3)]).unwrap();
        let out = prune_hard(&m, &all_but_one, &t).unwrap();
        assert_eq!(out.width(), 1);
        for row in out.rows() {
            assert!((row[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn prune_hard_tops_up_from_extended_list() {
        let t = ring_table(5, 2);
        // Prune 2 then 3: when 3 goes, its nearest (2, 4) lose 2; top up with 1.
        let plan = hard_prune_plan(&index_set(5), &[w(2), w(3)], &t).unwrap();
        assert_eq!(plan[0].recipients, [w(1), w(3)]);
        assert_eq!(plan[1].recipients, [w(4), w(1)]);
    }

    #[test]
    fn prune_hard_matches_sequential_heuristic_when_no_top_up_needed() {
        let m = matrix(&[&[0.1, 0.2, 0.3, 0.15, 0.25]]);
        let t = ring_table(5, 2);
        let p = PruneSet::new(m.active_words(), &[w(1), w(5)]).unwrap();
        let out = prune_hard(&m, &p, &t).unwrap();
        let step1 = psi_heuristic(&m.representation(0), w(1), &t).unwrap();
        let step2 = psi_heuristic(&step1, w(5), &t).unwrap();
        close(out.row(0), step2.vector(), 1e-15);
    }

    #[test]
    fn prune_soft_identity_and_single_survivor() {
        let data = vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3];
        let h = CodingMatrix::new(
            CodingScheme::Soft { softness: 1.0 },
            Metric::SqEuclidean,
            3,
            index_set(3),
            vec![ImageCoding { rows: 2, data: data.clone() }],
            vec![ClassId(0)],
            vec!["c".into()],
            vec!["i".into()],
        )
        .unwrap();
        let none = PruneSet::new(&index_set(3), &[]).unwrap();
        close(prune_soft(&h, &none).unwrap().row(0), &[0.4, 0.3, 0.3], 1e-15);
        let one = PruneSet::keeping(&index_set(3), &[w(2)]).unwrap();
        assert_eq!(prune_soft(&h, &one).unwrap().row(0), [1.0]);
        let two = PruneSet::keeping(&index_set(3), &[w(1), w(3)]).unwrap();
        close(prune_soft(&h, &two).unwrap().row(0), &[(0.4 + 0.6 / 0.9) / 2.0, (0.6 + 0.3 / 0.9) / 2.0], 1e-15);
    }

    #[test]
    fn prune_soft_reports_vanishing_rows() {
        let h = CodingMatrix::new(
            CodingScheme::Soft { softness: 1.0 },
            Metric::SqEuclidean,
            2,
            index_set(2),
            vec![ImageCoding { rows: 2, data: vec![0.5, 0.5, 1.0, 0.0] }],
            vec![ClassId(0)],
            vec!["c".into()],
            vec!["i".into()],
        )
        .unwrap();
        let p = PruneSet::keeping(&index_set(2), &[w(2)]).unwrap();
        assert!(matches!(prune_soft(&h, &p), Err(Error::RenormalizationUndefined { image: 0, row: 1 })));
    }

    #[test]
    fn discard_examples() {
        let m = matrix(&[&[0.2, 0.3, 0.5], &[0.0, 0.0, 1.0]]);
        let p = PruneSet::new(m.active_words(), &[w(3)]).unwrap();
        let out = discard_baseline(&m, &p).unwrap();
        close(out.representations.row(0), &[0.4, 0.6], 1e-15);
        assert_eq!(out.representations.row(1), [0.5, 0.5]);
        assert_eq!(out.flagged_rows, [1]);
        let none = PruneSet::new(m.active_words(), &[]).unwrap();
        assert_eq!(discard_baseline(&m, &none).unwrap().representations, m);
    }

    fn histogram(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, len).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-3;
            let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
            let rest = 1.0 - out.iter().sum::<f64>();
            out[0] += rest;
            out
        })
    }

    proptest! {
        #[test]
        fn prune_hard_conserves_mass(f in histogram(10), mask in proptest::collection::vec(any::<bool>(), 10)) {
            let m = matrix(&[&f]);
            let pruned: Vec<Word> = (1..=10).filter(|i| mask[i - 1]).map(w).take(9).collect();
            let p = PruneSet::new(m.active_words(), &pruned).unwrap();
            let out = prune_hard(&m, &p, &ring_table(10, 3)).unwrap();
            let s: f64 = out.row(0).iter().sum();
            prop_assert!((s - f.iter().sum::<f64>()).abs() <= 1e-12 * (pruned.len().max(1) as f64));
            prop_assert_eq!(out.active_words(), p.surviving());
        }
    }
}
