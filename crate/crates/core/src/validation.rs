//! Synthetic experiments on isotropic Gaussian mixtures: the expected pruned
//! representation, its variance, the heuristic-vs-exact transfer gap and the
//! exactness of soft pruning. The codebook is always the mixture means.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::build_neighbor_table;
use crate::coding::{encode_corpus, encode_corpus_on};
use crate::domain::{Codebook, CodingScheme, DescriptorCorpus, Metric, RawImage, Word};
use crate::error::{Error, Result};
use crate::pruning::{estimate_lambda, prune_soft, GaussianConditional, PruneSet, TransitionWeights};
use crate::rng;
use crate::scalar::Scalar;

/// `p(x) = sum_k pi_k N(mu_k, sigma^2 I)`, optionally with a component
/// distribution per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMixture {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
    pub priors: Vec<f64>,
    /// `class_weights[c][k]`: component distribution for images of class `c`.
    pub class_weights: Option<Vec<Vec<f64>>>,
}

impl SyntheticMixture {
    /// Equal priors over the components.
    pub fn new(means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let k = means.len();
        Self::with_priors(means, sigma, vec![1.0 / k as f64; k])
    }

    pub fn with_priors(means: Vec<Vec<f64>>, sigma: f64, priors: Vec<f64>) -> Result<Self> {
        let m = SyntheticMixture { means, sigma, priors, class_weights: None };
        m.check()?;
        Ok(m)
    }

    /// Images of class `c` draw components from `weights[c]` (normalized).
    pub fn with_class_weights(mut self, weights: Vec<Vec<f64>>) -> Result<Self> {
        self.class_weights = Some(weights);
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let k = self.means.len();
        if k == 0 {
            return Err(Error::InvalidParameter("mixture needs at least one component".into()));
        }
        let d = self.means[0].len();
        if d == 0 || self.means.iter().any(|m| m.len() != d || m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("component means must be finite with a common dimension".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        let valid = |w: &[f64]| w.len() == k && w.iter().all(|p| *p >= 0.0 && p.is_finite()) && w.iter().sum::<f64>() > 0.0;
        if !valid(&self.priors) || (self.priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("priors must be non-negative and sum to 1".into()));
        }
        if let Some(cw) = &self.class_weights {
            if cw.is_empty() || !cw.iter().all(|w| valid(w)) {
                return Err(Error::InvalidParameter("class weights must be non-negative rows over the components".into()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Number of classes: one without class weights.
    pub fn classes(&self) -> usize {
        self.class_weights.as_ref().map_or(1, Vec::len)
    }

    /// The component means as a codebook.
    pub fn codebook<T: Scalar>(&self, metric: Metric) -> Result<Codebook<T>> {
        Codebook::new(self.means.iter().map(|m| m.iter().map(|&v| T::of(v)).collect()).collect(), metric)
    }

    /// One descriptor from component `k`.
    pub fn draw_from(&self, k: usize, r: &mut rng::Rng) -> Vec<f64> {
        self.means[k].iter().map(|mu| mu + self.sigma * r.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Class name used by [`sample_corpus`] for class `c`.
pub fn class_name(c: usize) -> String {
    format!("class{c}")
}

/// `images_per_class` images per class with `n` descriptors each. Image `i`
/// uses its own random stream, so the corpus depends on the seed only.
pub fn sample_corpus<T: Scalar>(
    mixture: &SyntheticMixture,
    images_per_class: usize,
    n: usize,
    seed: u64,
) -> Result<DescriptorCorpus<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("descriptors per image must be at least 1".into()));
    }
    let weights: Vec<WeightedIndex<f64>> = match &mixture.class_weights {
        Some(cw) => cw.iter().map(|w| WeightedIndex::new(w).expect("checked")).collect(),
        None => vec![WeightedIndex::new(&mixture.priors).expect("checked")],
    };
    let total = images_per_class * weights.len();
    let raw: Vec<RawImage<T>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let class = i / images_per_class;
            let mut r = rng::stream(seed, i as u64);
            let descriptors = (0..n)
                .map(|_| {
                    let k = weights[class].sample(&mut r);
                    mixture.draw_from(k, &mut r).into_iter().map(T::of).collect()
                })
                .collect();
            RawImage { id: format!("img{i:06}"), label: class_name(class), descriptors }
        })
        .collect();
    DescriptorCorpus::validate(mixture.dim(), (0..weights.len()).map(class_name).collect(), raw)
}

/// Settings shared by the pruning experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Pruned word.
    pub word: Word,
    /// Descriptors per trial.
    pub n: usize,
    pub trials: usize,
    /// Monte-Carlo samples for the transfer weights.
    pub lambda_samples: usize,
    pub seed: u64,
}

/// One bin of a [`TransferReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferBin {
    pub word: Word,
    pub lambda: f64,
    /// Trial mean of the re-coded pruned bin.
    pub mean_pruned: f64,
    /// Trial mean of the transfer map applied to each trial's full representation.
    pub mean_transfer: f64,
    /// Trial mean of the re-coded pruned bin minus the full bin.
    pub mean_shift: f64,
    pub gap: f64,
    /// Standard error of `gap`, including the error of the estimated weight.
    pub standard_error: f64,
}

impl TransferBin {
    /// `gap` in units of its standard error; zero when both vanish.
    pub fn z(&self) -> f64 {
        if self.gap == 0.0 { 0.0 } else { self.gap / self.standard_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub config: ExperimentConfig,
    pub sigma: f64,
    pub kept_samples: usize,
    pub mean_pruned_mass: f64,
    pub bins: Vec<TransferBin>,
    pub max_gap: f64,
    pub max_z: f64,
    /// Per-trial pruned mass `f_l` and re-coded pruned representation.
    #[serde(skip)]
    pub trials: Vec<(f64, Vec<f64>)>,
}

/// Draws `trials` images of `n` descriptors from the pruned word's Gaussian
/// `N(mu_l, sigma^2 I)`, re-codes each on the full and the pruned codebook,
/// and compares the mean re-coded pruned representation with the exact
/// transfer map (estimated weights) applied to the full representation.
pub fn verify_transfer_mean(mixture: &SyntheticMixture, config: &ExperimentConfig) -> Result<TransferReport> {
    let codebook: Codebook<f64> = mixture.codebook(Metric::SqEuclidean)?;
    let l = config.word;
    if l.get() > codebook.k() {
        return Err(Error::WordNotActive(l));
    }
    if config.trials < 2 || config.n == 0 {
        return Err(Error::InvalidParameter("need at least 2 trials and 1 descriptor per trial".into()));
    }
    let cond = GaussianConditional::at_centroid(&codebook, l, mixture.sigma)?;
    let lambda = estimate_lambda(&codebook, l, &cond, config.lambda_samples, rng::derive_seed(config.seed, u64::MAX))?;
    let raw: Vec<RawImage<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(config.seed, i as u64);
            let descriptors = (0..config.n).map(|_| mixture.draw_from(l.slot(), &mut r)).collect();
            RawImage { id: format!("trial{i:06}"), label: "c".into(), descriptors }
        })
        .collect();
    let corpus = DescriptorCorpus::validate(codebook.dim(), vec!["c".into()], raw)?;
    let full = encode_corpus(&corpus, &codebook, CodingScheme::Hard, false)?.representations;
    let survivors: Vec<Word> = codebook.index_set().into_iter().filter(|&w| w != l).collect();
    let pruned = encode_corpus_on(&corpus, &codebook, &survivors, CodingScheme::Hard, false)?.representations;

    let l_pos = l.slot();
    let m = config.trials as f64;
    let mean_fl = full.column(l_pos).iter().sum::<f64>() / m;
    let mut bins = Vec::with_capacity(survivors.len());
    for (j, &k) in survivors.iter().enumerate() {
        let fk = full.column(k.slot());
        let fl = full.column(l_pos);
        let lam = lambda.lambda(k);
        let under = pruned.column(j);
        let transfer: Vec<f64> = fk.iter().zip(&fl).map(|(a, b)| a + lam * b).collect();
        let diffs: Vec<f64> = under.iter().zip(&transfer).map(|(a, b)| a - b).collect();
        let mean_diff = diffs.iter().sum::<f64>() / m;
        let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (m - 1.0);
        let se_lambda = lambda.standard_error(k).unwrap_or(0.0) * mean_fl;
        let mean_pruned = under.iter().sum::<f64>() / m;
        let mean_transfer = transfer.iter().sum::<f64>() / m;
        bins.push(TransferBin {
            word: k,
            lambda: lam,
            mean_pruned,
            mean_transfer,
            mean_shift: mean_pruned - fk.iter().sum::<f64>() / m,
            gap: (mean_pruned - mean_transfer).abs(),
            standard_error: (var / m + se_lambda * se_lambda).sqrt(),
        });
    }
    let trials = (0..config.trials).map(|i| (full.row(i)[l_pos], pruned.row(i).to_vec())).collect();
    Ok(TransferReport {
        config: config.clone(),
        sigma: mixture.sigma,
        kept_samples: lambda.samples(),
        mean_pruned_mass: mean_fl,
        max_gap: bins.iter().map(|b| b.gap).fold(0.0, f64::max),
        max_z: bins.iter().map(TransferBin::z).fold(0.0, f64::max),
        bins,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBin {
    pub word: Word,
    pub lambda: f64,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub config: ExperimentConfig,
    /// Descriptors per trial inside the pruned word's cell.
    pub in_cell: usize,
    pub bins: Vec<VarianceBin>,
}

/// Trial variance of the re-coded pruned bins against
/// `|S1| Lambda (1 - Lambda) / N^2`.
///
/// Each trial holds `in_cell` descriptors drawn from `N(mu_l, sigma^2 I)`
/// conditioned (by rejection) on falling in word `l`'s cell, plus the same
/// fixed `n - in_cell` descriptors in every trial, so that `|S1|` is fixed and
/// the rest of the representation is deterministic.
pub fn verify_variance(mixture: &SyntheticMixture, config: &ExperimentConfig, in_cell: usize) -> Result<VarianceReport> {
    let codebook: Codebook<f64> = mixture.codebook(Metric::SqEuclidean)?;
    let l = config.word;
    if l.get() > codebook.k() {
        return Err(Error::WordNotActive(l));
    }
    if in_cell == 0 || in_cell > config.n || config.trials < 2 {
        return Err(Error::InvalidParameter("need 1 <= in_cell <= n and at least 2 trials".into()));
    }
    let cond = GaussianConditional::at_centroid(&codebook, l, mixture.sigma)?;
    let lambda = estimate_lambda(&codebook, l, &cond, config.lambda_samples, rng::derive_seed(config.seed, u64::MAX))?;
    let all = codebook.index_set();
    let nearest = |x: &[f64]| {
        let mut d = vec![0.0; all.len()];
        for (o, &w) in d.iter_mut().zip(&all) {
            *o = codebook.metric().distance(x, codebook.centroid(w));
        }
        crate::coding::argmin(&d)
    };
    let mut fixed_rng = rng::stream(config.seed, u64::MAX - 1);
    let fixed: Vec<Vec<f64>> = (0..config.n - in_cell)
        .map(|i| loop {
            let x = mixture.draw_from(i % mixture.k(), &mut fixed_rng);
            if nearest(&x) != l.slot() {
                break x;
            }
        })
        .collect();
    let raw: Vec<RawImage<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(config.seed, i as u64);
            let mut descriptors = fixed.clone();
            while descriptors.len() < config.n {
                let x = mixture.draw_from(l.slot(), &mut r);
                if nearest(&x) == l.slot() {
                    descriptors.push(x);
                }
            }
            RawImage { id: format!("trial{i:06}"), label: "c".into(), descriptors }
        })
        .collect();
    let corpus = DescriptorCorpus::validate(codebook.dim(), vec!["c".into()], raw)?;
    let survivors: Vec<Word> = all.iter().copied().filter(|&w| w != l).collect();
    let pruned = encode_corpus_on(&corpus, &codebook, &survivors, CodingScheme::Hard, false)?.representations;
    let m = config.trials as f64;
    let n2 = (config.n as f64).powi(2);
    let bins = survivors
        .iter()
        .enumerate()
        .filter(|(_, &k)| lambda.lambda(k) > 0.0 && lambda.lambda(k) < 1.0)
        .map(|(j, &k)| {
            let col = pruned.column(j);
            let mean = col.iter().sum::<f64>() / m;
            let empirical = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let lam = lambda.lambda(k);
            let predicted = in_cell as f64 * lam * (1.0 - lam) / n2;
            VarianceBin { word: k, lambda: lam, empirical, predicted, ratio: empirical / predicted }
        })
        .collect();
    Ok(VarianceReport { config: config.clone(), in_cell, bins })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub sigma: f64,
    pub m: usize,
    /// Largest `|Lambda^heuristic_k - Lambda_k|`: the transfer gap per unit of
    /// pruned mass `f_l`.
    pub max_gap: f64,
    pub weights: Vec<GapWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapWeight {
    pub word: Word,
    pub heuristic: f64,
    pub exact: f64,
}

/// Heuristic (uniform over `m` nearest) against estimated transfer weights
/// for every combination of `sigmas` and `ms`.
pub fn heuristic_gap(
    means: &[Vec<f64>],
    l: Word,
    sigmas: &[f64],
    ms: &[usize],
    lambda_samples: usize,
    seed: u64,
) -> Result<Vec<GapRow>> {
    let mut rows = Vec::new();
    for (si, &sigma) in sigmas.iter().enumerate() {
        let mixture = SyntheticMixture::new(means.to_vec(), sigma)?;
        let codebook: Codebook<f64> = mixture.codebook(Metric::SqEuclidean)?;
        let cond = GaussianConditional::at_centroid(&codebook, l, sigma)?;
        let exact = estimate_lambda(&codebook, l, &cond, lambda_samples, rng::derive_seed(seed, si as u64))?;
        for &m in ms {
            let table = build_neighbor_table(&codebook, m)?;
            let heuristic = TransitionWeights::uniform(l, table.nearest(l))?;
            rows.push(gap_row(sigma, m, &heuristic, &exact));
        }
    }
    Ok(rows)
}

fn gap_row(sigma: f64, m: usize, heuristic: &TransitionWeights, exact: &TransitionWeights) -> GapRow {
    let mut words: Vec<Word> = heuristic.weights().iter().chain(exact.weights()).map(|e| e.0).collect();
    words.sort_unstable();
    words.dedup();
    let weights: Vec<GapWeight> = words
        .into_iter()
        .map(|w| GapWeight { word: w, heuristic: heuristic.lambda(w), exact: exact.lambda(w) })
        .collect();
    let max_gap = weights.iter().map(|g| (g.heuristic - g.exact).abs()).fold(0.0, f64::max);
    GapRow { sigma, m, max_gap, weights }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftExactnessInstance {
    pub k: usize,
    pub dim: usize,
    pub pruned: usize,
    pub softness: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftExactnessReport {
    pub seed: u64,
    pub instances: Vec<SoftExactnessInstance>,
    pub max_abs_diff: f64,
}

/// Random soft-coded corpora (`K` in `k_range`), random prune sets: soft
/// pruning of the retained coding against re-coding on the survivors.
pub fn verify_soft_exactness(instances: usize, k_range: (usize, usize), seed: u64) -> Result<SoftExactnessReport> {
    let rows = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let k = r.random_range(k_range.0..=k_range.1);
            let dim = r.random_range(1..=6usize);
            let uniform = |r: &mut rng::Rng| (0..dim).map(|_| r.random::<f64>()).collect::<Vec<f64>>();
            let centroids: Vec<Vec<f64>> = (0..k).map(|_| uniform(&mut r)).collect();
            let codebook = Codebook::new(centroids, Metric::SqEuclidean)?;
            // Exponents spread over at most ~60 nats, far from underflow.
            let softness = r.random_range(0.5..60.0) / dim as f64;
            let raw: Vec<RawImage<f64>> = (0..r.random_range(2..=5usize))
                .map(|j| RawImage {
                    id: format!("img{j}"),
                    label: "c".into(),
                    descriptors: (0..r.random_range(1..=40usize)).map(|_| uniform(&mut r)).collect(),
                })
                .collect();
            let corpus = DescriptorCorpus::validate(dim, vec!["c".into()], raw)?;
            let scheme = CodingScheme::Soft { softness };
            let h = encode_corpus(&corpus, &codebook, scheme, true)?.coding.expect("retained");
            let n_pruned = r.random_range(0..k);
            let mut pruned: Vec<Word> =
                rand::seq::index::sample(&mut r, k, n_pruned).into_iter().map(Word::from_slot).collect();
            pruned.sort_unstable();
            let prune = PruneSet::new(&codebook.index_set(), &pruned)?;
            let fast = prune_soft(&h, &prune)?;
            let oracle = encode_corpus_on(&corpus, &codebook, prune.surviving(), scheme, false)?.representations;
            let max_abs_diff = fast.data().iter().zip(oracle.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(SoftExactnessInstance { k, dim, pruned: n_pruned, softness, max_abs_diff })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs_diff = rows.iter().map(|r| r.max_abs_diff).fold(0.0, f64::max);
    Ok(SoftExactnessReport { seed, instances: rows, max_abs_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode_corpus;

    fn w(i: usize) -> Word {
        Word::new(i)
    }

    #[test]
    fn single_component_mean_converges() {
        let mix = SyntheticMixture::new(vec![vec![1.5, -2.0]], 0.7).unwrap();
        let corpus: DescriptorCorpus<f64> = sample_corpus(&mix, 100_000, 1, 3).unwrap();
        for dim in 0..2 {
            let mean = corpus.images().iter().map(|i| i.descriptor(0)[dim]).sum::<f64>() / 1e5;
            assert!((mean - mix.means[0][dim]).abs() <= 4.0 * 0.7 / 1e5f64.sqrt(), "{mean}");
        }
    }

    #[test]
    fn tiny_sigma_collapses_onto_generators() {
        let mix = SyntheticMixture::new(vec![vec![0.0], vec![1.0], vec![5.0]], 1e-12).unwrap();
        let corpus: DescriptorCorpus<f64> = sample_corpus(&mix, 5, 20, 4).unwrap();
        let cb: Codebook<f64> = mix.codebook(Metric::SqEuclidean).unwrap();
        let enc = encode_corpus(&corpus, &cb, CodingScheme::Hard, false).unwrap();
        for (img, row) in corpus.images().iter().zip(enc.representations.rows()) {
            for x in img.descriptors() {
                let k = mix.means.iter().position(|m| (m[0] - x[0]).abs() < 1e-9).unwrap();
                assert!(row[k] > 0.0);
            }
        }
    }

    #[test]
    fn equal_priors_give_uniform_frequencies() {
        let mix = SyntheticMixture::new(vec![vec![0.0], vec![100.0], vec![200.0], vec![300.0]], 1.0).unwrap();
        let corpus: DescriptorCorpus<f64> = sample_corpus(&mix, 1000, 1000, 5).unwrap();
        let mut counts = [0usize; 4];
        for img in corpus.images() {
            for x in img.descriptors() {
                counts[((x[0] + 50.0) / 100.0).floor() as usize] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 1e6 - 0.25).abs() < 0.01 * 0.25, "{counts:?}");
        }
    }

    #[test]
    fn class_weights_pick_components() {
        let mix = SyntheticMixture::new(vec![vec![0.0], vec![50.0]], 1.0)
            .unwrap()
            .with_class_weights(vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let corpus: DescriptorCorpus<f64> = sample_corpus(&mix, 3, 10, 6).unwrap();
        assert_eq!(corpus.classes(), ["class0", "class1"]);
        for img in corpus.images() {
            let expect = if img.label().0 == 0 { 0.0 } else { 50.0 };
            assert!(img.descriptors().all(|x| (x[0] - expect).abs() < 10.0));
        }
        assert!(mix.clone().with_class_weights(vec![vec![1.0]]).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let mix = SyntheticMixture::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], 0.3).unwrap();
        let a: DescriptorCorpus<f32> = sample_corpus(&mix, 4, 7, 9).unwrap();
        let b: DescriptorCorpus<f32> = sample_corpus(&mix, 4, 7, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn far_word_bin_is_unchanged_on_average() {
        let mix = SyntheticMixture::new(vec![vec![-1.0], vec![0.0], vec![1.0], vec![40.0]], 0.4).unwrap();
        let cfg = ExperimentConfig { word: w(2), n: 500, trials: 40, lambda_samples: 200_000, seed: 1 };
        let rep = verify_transfer_mean(&mix, &cfg).unwrap();
        let far = rep.bins.iter().find(|b| b.word == w(4)).unwrap();
        assert_eq!(far.lambda, 0.0);
        assert_eq!(far.mean_shift, 0.0);
        assert!(rep.max_z <= 5.0, "{rep:?}");
    }

    #[test]
    fn symmetric_and_single_neighbor_gaps() {
        let rows = heuristic_gap(&[vec![-1.0], vec![0.0], vec![1.0]], w(2), &[0.5], &[2], 200_000, 3).unwrap();
        assert!(rows[0].max_gap < 0.01, "{rows:?}");
        let rows = heuristic_gap(&[vec![0.0], vec![1.0]], w(2), &[0.5], &[1], 10_000, 3).unwrap();
        assert_eq!(rows[0].max_gap, 0.0);
    }

    #[test]
    fn skewed_gap_is_distance_from_half() {
        let rows = heuristic_gap(&[vec![0.0], vec![1.0], vec![10.0]], w(2), &[0.1, 2.0], &[2], 200_000, 4).unwrap();
        for row in rows {
            let l1 = row.weights.iter().find(|g| g.word == w(1)).unwrap().exact;
            assert!((row.max_gap - (l1 - 0.5).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_exactness_small_run() {
        let rep = verify_soft_exactness(5, (10, 20), 8).unwrap();
        assert!(rep.max_abs_diff <= 1e-10, "{rep:?}");
    }
}
