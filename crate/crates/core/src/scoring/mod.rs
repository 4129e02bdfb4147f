//! Annealing energy: per-bin Beta fits, mutual information with the class
//! label, and their mean over the active words (maximum relevance).

mod beta;
pub mod special;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ClassId, RepresentationMatrix, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use beta::{beta_entropy, fit_beta, BetaFit, FitMethod, CLAMP};

/// Mutual information estimate for one bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScore {
    pub mi: f64,
    /// The bin's MI was forced to zero because some fit was impossible.
    pub degenerate: bool,
    pub marginal: Option<BetaFit>,
    /// One entry per class; `None` for classes without samples or that
    /// failed to fit.
    pub per_class: Vec<Option<BetaFit>>,
}

impl BinScore {
    fn degenerate(classes: usize) -> Self {
        BinScore { mi: 0.0, degenerate: true, marginal: None, per_class: vec![None; classes] }
    }

    /// Fits (marginal or per class) that fell back to moments.
    pub fn moment_fallbacks(&self) -> usize {
        self.marginal.iter().chain(self.per_class.iter().flatten()).filter(|f| f.method == FitMethod::Moments).count()
    }
}

/// `I(f; y) = h(f) - sum_y p(y) h(f | y)` with every density a fitted Beta
/// and `p(y)` the empirical class frequency.
///
/// A class with fewer than two samples, or any degenerate fit, makes the
/// estimate zero and flags it. Negative estimates are returned unchanged.
pub fn mutual_information(values: &[f64], labels: &[ClassId], n_classes: usize) -> Result<BinScore> {
    if values.len() != labels.len() {
        return Err(Error::DimensionMismatch { context: "labels", expected: values.len(), found: labels.len() });
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("bin values"));
    }
    if let Some(c) = labels.iter().find(|c| c.index() >= n_classes) {
        return Err(Error::InvalidData(format!("label {} outside {n_classes} classes", c.0)));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
    for (&v, c) in values.iter().zip(labels) {
        groups[c.index()].push(v);
    }
    let marginal = match fit_beta(values) {
        Ok(f) => f,
        Err(Error::Degenerate(_)) | Err(Error::InvalidData(_)) => return Ok(BinScore::degenerate(n_classes)),
        Err(e) => return Err(e),
    };
    let n = values.len() as f64;
    let mut conditional = 0.0;
    let mut per_class = Vec::with_capacity(n_classes);
    for g in &groups {
        if g.is_empty() {
            per_class.push(None);
            continue;
        }
        match fit_beta(g) {
            Ok(f) => {
                conditional += (g.len() as f64 / n) * f.entropy();
                per_class.push(Some(f));
            }
            Err(Error::Degenerate(_)) | Err(Error::InvalidData(_)) => return Ok(BinScore::degenerate(n_classes)),
            Err(e) => return Err(e),
        }
    }
    Ok(BinScore { mi: marginal.entropy() - conditional, degenerate: false, marginal: Some(marginal), per_class })
}

/// Per-bin scores and their mean `D(T, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub words: Vec<Word>,
    pub bins: Vec<BinScore>,
    pub class_priors: Vec<f64>,
    pub score: f64,
}

impl ScoreReport {
    pub fn degenerate_bins(&self) -> usize {
        self.bins.iter().filter(|b| b.degenerate).count()
    }

    pub fn moment_fallbacks(&self) -> usize {
        self.bins.iter().map(BinScore::moment_fallbacks).sum()
    }

    /// Samples clamped into the open unit interval, summed over marginal fits.
    pub fn clamped_samples(&self) -> usize {
        self.bins.iter().filter_map(|b| b.marginal.map(|f| f.clamped)).sum()
    }
}

/// `D(T, y) = (1/|T|) sum_k I(f_k; y)` over the matrix columns.
pub fn max_relevance<T: Scalar>(matrix: &RepresentationMatrix<T>) -> Result<ScoreReport> {
    let n_classes = matrix.classes().len();
    if n_classes < 2 {
        return Err(Error::InvalidData(format!("scoring needs at least 2 classes, got {n_classes}")));
    }
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput("representation matrix"));
    }
    let labels = matrix.labels();
    let bins = (0..matrix.width())
        .into_par_iter()
        .map(|j| mutual_information(&matrix.column(j), labels, n_classes))
        .collect::<Result<Vec<_>>>()?;
    let mut class_priors = vec![0.0; n_classes];
    for c in labels {
        class_priors[c.index()] += 1.0;
    }
    class_priors.iter_mut().for_each(|p| *p /= labels.len() as f64);
    let score = bins.iter().map(|b| b.mi).sum::<f64>() / bins.len() as f64;
    Ok(ScoreReport { words: matrix.active_words().to_vec(), bins, class_priors, score })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::index_set;
    use rand::SeedableRng;
    use rand_distr::{Beta, Distribution};

    fn draw(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = Beta::new(a, b).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn two_class(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<ClassId>) {
        let labels = std::iter::repeat_n(ClassId(0), a.len()).chain(std::iter::repeat_n(ClassId(1), b.len())).collect();
        ([a, b].concat(), labels)
    }

    #[test]
    fn shared_distribution_has_near_zero_mi() {
        let (v, y) = two_class(&draw(3.0, 4.0, 10_000, 1), &draw(3.0, 4.0, 10_000, 2));
        let s = mutual_information(&v, &y, 2).unwrap();
        assert!(s.mi.abs() <= 0.02, "{}", s.mi);
    }

    #[test]
    fn single_class_is_exactly_zero() {
        let v = draw(2.0, 3.0, 500, 3);
        let s = mutual_information(&v, &vec![ClassId(0); 500], 1).unwrap();
        assert_eq!(s.mi, 0.0);
    }

    #[test]
    fn separated_classes_have_positive_mi() {
        let (v, y) = two_class(&draw(2.0, 8.0, 5_000, 4), &draw(8.0, 2.0, 5_000, 5));
        assert!(mutual_information(&v, &y, 2).unwrap().mi > 0.3);
    }

    #[test]
    fn degenerate_class_zeroes_the_bin() {
        let (v, y) = two_class(&[0.0; 5], &draw(2.0, 2.0, 5, 6));
        let s = mutual_information(&v, &y, 2).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.mi, 0.0);
        let (v, y) = two_class(&[0.3], &draw(2.0, 2.0, 5, 6));
        assert!(mutual_information(&v, &y, 2).unwrap().degenerate);
    }

    fn matrix(cols: &[Vec<f64>], labels: Vec<ClassId>) -> RepresentationMatrix<f64> {
        // Columns need not sum to one across a row for scoring; build rows
        // directly and skip row validation.
        let n = labels.len();
        let data: Vec<f64> = (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
        RepresentationMatrix::new_unchecked(
            index_set(cols.len()),
            data,
            labels,
            vec!["a".into(), "b".into()],
            (0..n).map(|i| i.to_string()).collect(),
        )
    }

    #[test]
    fn relevance_is_mean_of_bins() {
        let (v, y) = two_class(&draw(2.0, 5.0, 300, 7), &draw(4.0, 3.0, 300, 8));
        let (w, _) = two_class(&draw(2.0, 2.0, 300, 9), &draw(2.0, 2.0, 300, 10));
        let one = max_relevance(&matrix(&[v.clone()], y.clone())).unwrap();
        assert_eq!(one.score, one.bins[0].mi);
        let dup = max_relevance(&matrix(&[v.clone(), v.clone()], y.clone())).unwrap();
        assert!((dup.score - one.score).abs() < 1e-15);
        let both = max_relevance(&matrix(&[v.clone(), w.clone()], y.clone())).unwrap();
        let swapped = max_relevance(&matrix(&[w, v], y)).unwrap();
        assert!((both.score - (both.bins[0].mi + both.bins[1].mi) / 2.0).abs() < 1e-15);
        assert!((both.score - swapped.score).abs() < 1e-12);
        assert_eq!(both.class_priors, [0.5, 0.5]);
    }

    #[test]
    fn all_degenerate_bins_score_zero() {
        let y = vec![ClassId(0), ClassId(0), ClassId(1), ClassId(1)];
        let r = max_relevance(&matrix(&[vec![0.0; 4], vec![1.0; 4]], y)).unwrap();
        assert_eq!(r.score, 0.0);
        assert_eq!(r.degenerate_bins(), 2);
    }

    #[test]
    fn relevance_invariant_to_image_order() {
        let (v, y) = two_class(&draw(2.0, 5.0, 200, 11), &draw(4.0, 3.0, 200, 12));
        let a = max_relevance(&matrix(&[v.clone()], y.clone())).unwrap();
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.reverse();
        idx.rotate_left(37);
        let v2: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        let y2: Vec<ClassId> = idx.iter().map(|&i| y[i]).collect();
        let b = max_relevance(&matrix(&[v2], y2)).unwrap();
        assert!((a.score - b.score).abs() < 1e-9);
    }

    #[test]
    fn single_class_matrix_rejected() {
        let m = RepresentationMatrix::new_unchecked(
            index_set(1),
            vec![1.0, 1.0],
            vec![ClassId(0); 2],
            vec!["a".into()],
            vec!["x".into(), "y".into()],
        );
        assert!(max_relevance(&m).is_err());
    }
}
