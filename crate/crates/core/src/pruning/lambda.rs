use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{transfer, PruneSet, TransitionWeights};
use crate::domain::{Codebook, RepresentationMatrix, Word};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

const BLOCK: usize = 1 << 16;

/// Isotropic Gaussian `N(mean, sigma^2 I)` used as the descriptor distribution
/// behind a word.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianConditional {
    pub mean: Vec<f64>,
    pub sigma: f64,
}

impl GaussianConditional {
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "Gaussian mean".into() });
        }
        Ok(GaussianConditional { mean, sigma })
    }

    /// Centered at the centroid of `w`.
    pub fn at_centroid<T: Scalar>(codebook: &Codebook<T>, w: Word, sigma: f64) -> Result<Self> {
        Self::new(codebook.centroid(w).iter().map(|v| v.f64()).collect(), sigma)
    }
}

/// [`estimate_lambda_within`] over the whole codebook.
pub fn estimate_lambda<T: Scalar>(
    codebook: &Codebook<T>,
    l: Word,
    conditional: &GaussianConditional,
    n_samples: usize,
    seed: u64,
) -> Result<TransitionWeights> {
    estimate_lambda_within(codebook, &codebook.index_set(), l, conditional, n_samples, seed)
}

/// Monte-Carlo estimate of `Lambda_{k,l}` when the active words are `active`.
///
/// Draws `n_samples` points from `conditional`, keeps those whose nearest
/// active centroid is `l`, and returns the fraction of kept points whose
/// nearest centroid among `active \ {l}` is `k`. Ties go to the lower index.
/// Sampling runs in fixed blocks with per-block seeds, so the result depends
/// on `seed` only, not on the thread count.
pub fn estimate_lambda_within<T: Scalar>(
    codebook: &Codebook<T>,
    active: &[Word],
    l: Word,
    conditional: &GaussianConditional,
    n_samples: usize,
    seed: u64,
) -> Result<TransitionWeights> {
    crate::domain::check_word_list(active, codebook.k(), "active words")?;
    if active.binary_search(&l).is_err() {
        return Err(Error::WordNotActive(l));
    }
    if active.len() < 2 {
        return Err(Error::NoSurvivingNeighbors(l));
    }
    if conditional.mean.len() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            context: "Gaussian mean",
            expected: codebook.dim(),
            found: conditional.mean.len(),
        });
    }
    let centroids: Vec<(Word, Vec<f64>)> =
        active.iter().map(|&w| (w, codebook.centroid(w).iter().map(|v| v.f64()).collect())).collect();
    let metric = codebook.metric();
    let l_pos = active.binary_search(&l).expect("checked");
    let dim = codebook.dim();

    let blocks = n_samples.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let n = BLOCK.min(n_samples - b * BLOCK);
            let mut counts = vec![0u64; active.len()];
            let mut x = vec![0.0f64; dim];
            for _ in 0..n {
                for (xi, mu) in x.iter_mut().zip(&conditional.mean) {
                    let z: f64 = StandardNormal.sample(&mut r);
                    *xi = mu + conditional.sigma * z;
                }
                let mut best = (f64::INFINITY, usize::MAX);
                let mut other = (f64::INFINITY, usize::MAX);
                for (j, (_, c)) in centroids.iter().enumerate() {
                    let d = metric.distance(&x, c);
                    if d < best.0 {
                        best = (d, j);
                    }
                    if j != l_pos && d < other.0 {
                        other = (d, j);
                    }
                }
                if best.1 == l_pos {
                    counts[other.1] += 1;
                }
            }
            counts
        })
        .reduce(|| vec![0u64; active.len()], |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        });

    let kept: u64 = counts.iter().sum();
    if kept == 0 {
        return Err(Error::NoKeptSamples { word: l, samples: n_samples });
    }
    let weights = centroids
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|((w, _), &c)| (*w, c as f64 / kept as f64))
        .collect::<Vec<_>>();
    // Rounding can leave the sum a few ulps from one; renormalize exactly.
    let total: f64 = weights.iter().map(|e| e.1).sum();
    let weights = weights.into_iter().map(|(w, p)| (w, p / total)).collect();
    Ok(TransitionWeights::new(l, weights)?.with_samples(kept as usize))
}

/// Prunes `prune.pruned()` in ascending order with estimated transfer weights.
///
/// For each step, `Lambda` for word `l` is estimated on the words still
/// active, with descriptors drawn from `N(c_l, sigma^2 I)` using a seed
/// derived from `seed` and `l`.
pub fn prune_hard_exact<T: Scalar>(
    matrix: &RepresentationMatrix<T>,
    prune: &PruneSet,
    codebook: &Codebook<T>,
    sigma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<RepresentationMatrix<T>> {
    prune.check_universe(matrix.active_words())?;
    let mut active = matrix.active_words().to_vec();
    let mut current = matrix.clone();
    for &l in prune.pruned() {
        let cond = GaussianConditional::at_centroid(codebook, l, sigma)?;
        let lam = estimate_lambda_within(codebook, &active, l, &cond, n_samples, rng::derive_seed(seed, l.get() as u64))?;
        let reps: Vec<_> = (0..current.n_rows()).map(|i| transfer(&current.representation(i), l, lam.weights())).collect();
        active.retain(|&w| w != l);
        current = RepresentationMatrix::from_rows(
            reps,
            current.labels().to_vec(),
            current.classes().to_vec(),
            current.ids().to_vec(),
        )?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{index_set, Metric};

    fn w(i: usize) -> Word {
        Word::new(i)
    }

    fn normal_cdf(x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
    }

    /// 1-D oracle: the pruned word's Voronoi cell is an interval, and the
    /// runner-up is decided by the midpoint between the flanking centroids.
    fn interval_oracle(centres: &[f64], l: usize, sigma: f64) -> Vec<f64> {
        let mut order: Vec<usize> = (0..centres.len()).collect();
        order.sort_by(|&a, &b| centres[a].total_cmp(&centres[b]));
        let pos = order.iter().position(|&i| i == l).unwrap();
        let c = centres[l];
        let lo = if pos > 0 { (centres[order[pos - 1]] + c) / 2.0 } else { f64::NEG_INFINITY };
        let hi = if pos + 1 < order.len() { (centres[order[pos + 1]] + c) / 2.0 } else { f64::INFINITY };
        let p = |a: f64, b: f64| normal_cdf((b - c) / sigma) - normal_cdf((a - c) / sigma);
        let mass = p(lo, hi);
        let mut out = vec![0.0; centres.len()];
        match (pos > 0, pos + 1 < order.len()) {
            (true, true) => {
                let (left, right) = (order[pos - 1], order[pos + 1]);
                let split = (centres[left] + centres[right]) / 2.0;
                let split = split.clamp(lo, hi);
                out[left] = p(lo, split) / mass;
                out[right] = p(split, hi) / mass;
            }
            (true, false) => out[order[pos - 1]] = 1.0,
            (false, true) => out[order[pos + 1]] = 1.0,
            _ => unreachable!(),
        }
        out
    }

    #[test]
    fn one_dimensional_cases_match_oracle() {
        let centres = [0.0, 1.0, 10.0];
        let cb = Codebook::new(centres.iter().map(|&c| vec![c]).collect(), Metric::SqEuclidean).unwrap();
        for sigma in [0.1, 2.0] {
            let cond = GaussianConditional::at_centroid(&cb, w(2), sigma).unwrap();
            let lam = estimate_lambda(&cb, w(2), &cond, 200_000, 7).unwrap();
            let oracle = interval_oracle(&centres, 1, sigma);
            for k in [1, 3] {
                let se = lam.standard_error(w(k)).unwrap().max(1e-4);
                assert!(
                    (lam.lambda(w(k)) - oracle[k - 1]).abs() <= 4.0 * se,
                    "sigma {sigma}, word {k}: {} vs {}",
                    lam.lambda(w(k)),
                    oracle[k - 1]
                );
            }
        }
    }

    #[test]
    fn symmetric_square_splits_evenly() {
        let cb = Codebook::new(
            vec![vec![0.0f64, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            Metric::SqEuclidean,
        )
        .unwrap();
        let cond = GaussianConditional::at_centroid(&cb, w(1), 0.3).unwrap();
        let lam = estimate_lambda(&cb, w(1), &cond, 400_000, 3).unwrap();
        for k in 2..=5 {
            let se = lam.standard_error(w(k)).unwrap();
            assert!((lam.lambda(w(k)) - 0.25).abs() <= 3.0 * se, "{k}: {}", lam.lambda(w(k)));
        }
    }

    #[test]
    fn two_words_transfer_everything() {
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0]], Metric::SqEuclidean).unwrap();
        let cond = GaussianConditional::at_centroid(&cb, w(2), 1.0).unwrap();
        let lam = estimate_lambda(&cb, w(2), &cond, 1000, 1).unwrap();
        assert_eq!(lam.weights(), [(w(1), 1.0)]);
    }

    #[test]
    fn seed_determines_estimate() {
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0], vec![2.5]], Metric::SqEuclidean).unwrap();
        let cond = GaussianConditional::at_centroid(&cb, w(2), 0.7).unwrap();
        let a = estimate_lambda(&cb, w(2), &cond, 150_000, 11).unwrap();
        let b = estimate_lambda(&cb, w(2), &cond, 150_000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_kept_samples_is_an_error() {
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0]], Metric::SqEuclidean).unwrap();
        let far = GaussianConditional::new(vec![100.0], 0.01).unwrap();
        assert!(matches!(
            estimate_lambda(&cb, w(1), &far, 100, 1),
            Err(Error::NoKeptSamples { samples: 100, .. })
        ));
    }

    #[test]
    fn restricted_active_set() {
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0], vec![2.0]], Metric::SqEuclidean).unwrap();
        let cond = GaussianConditional::at_centroid(&cb, w(3), 0.5).unwrap();
        let lam = estimate_lambda_within(&cb, &[w(1), w(3)], w(3), &cond, 1000, 1).unwrap();
        assert_eq!(lam.weights(), [(w(1), 1.0)]);
        assert!(estimate_lambda_within(&cb, &index_set(2), w(3), &cond, 10, 1).is_err());
    }
}
