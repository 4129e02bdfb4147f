//! Codebook construction: k-means (Lloyd iterations with k-means++ seeding)
//! and nearest-neighbor tables over the resulting words.

use std::collections::HashSet;

use rand::Rng as _;
use rayon::prelude::*;

use crate::domain::{Codebook, DescriptorCorpus, Metric, NeighborTable, Word};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the mean centroid displacement of an update falls below this.
    pub tol: f64,
    /// Metric recorded in the resulting codebook. Clustering itself always
    /// minimizes squared Euclidean distortion.
    pub metric: Metric,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansParams { k, seed, max_iter: 100, tol: 1e-6, metric: Metric::SqEuclidean }
    }
}

#[derive(Debug)]
pub struct KMeansOutcome<T> {
    pub codebook: Codebook<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances to the assigned centroid, after each
    /// assignment step (last entry: assignment to the final centroids).
    pub objective: Vec<f64>,
}

/// Clusters every descriptor of `corpus`.
pub fn kmeans<T: Scalar>(corpus: &DescriptorCorpus<T>, params: &KMeansParams) -> Result<KMeansOutcome<T>> {
    let mut data = Vec::with_capacity(corpus.total_descriptors() * corpus.dim());
    for img in corpus.images() {
        data.extend_from_slice(img.data());
    }
    kmeans_rows(&data, corpus.dim(), params)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn count_distinct(points: &[f64], dim: usize) -> usize {
    points
        .chunks_exact(dim)
        .map(|r| r.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Nearest center (lowest index on ties) and its squared distance, per point.
fn assign(points: &[f64], centers: &[f64], dim: usize) -> Vec<(usize, f64)> {
    points
        .par_chunks_exact(dim)
        .map(|x| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.chunks_exact(dim).enumerate() {
                let d = sq_dist(x, c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}

fn plus_plus_seeding(points: &[f64], dim: usize, k: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points.chunks_exact(dim).map(|x| sq_dist(x, &centers[..dim])).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                pick = Some(i);
                acc += d;
                if acc > target {
                    break;
                }
            }
        }
        let pick = pick.expect("at least k distinct points");
        let c = points[pick * dim..(pick + 1) * dim].to_vec();
        for (x, d) in points.chunks_exact(dim).zip(d2.iter_mut()) {
            *d = d.min(sq_dist(x, &c));
        }
        centers.extend(c);
    }
    centers
}

/// Mean of each cluster, summed in point order. An empty cluster is re-seeded
/// at the point farthest from its current center (lowest index on ties), and
/// that point is then excluded from further re-seeding in this step.
fn update_centers(points: &[f64], assignment: &mut [(usize, f64)], k: usize, dim: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (x, &(j, _)) in points.chunks_exact(dim).zip(assignment.iter()) {
        counts[j] += 1;
        for (s, v) in sums[j * dim..(j + 1) * dim].iter_mut().zip(x) {
            *s += v;
        }
    }
    let mut next = vec![0.0; k * dim];
    for j in 0..k {
        if counts[j] > 0 {
            for (c, s) in next[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                *c = s / counts[j] as f64;
            }
        } else {
            let (far, _) = assignment
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, a)| if a.1 > best.1 { (i, a.1) } else { best });
            next[j * dim..(j + 1) * dim].copy_from_slice(&points[far * dim..(far + 1) * dim]);
            assignment[far].1 = 0.0;
        }
    }
    next
}

/// Clusters a row-major `n x dim` matrix into `params.k` centroids.
pub fn kmeans_rows<T: Scalar>(data: &[T], dim: usize, params: &KMeansParams) -> Result<KMeansOutcome<T>> {
    let k = params.k;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    if dim == 0 || data.is_empty() || data.len() % dim != 0 {
        return Err(Error::EmptyInput("k-means needs a non-empty n x d matrix"));
    }
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be non-negative, got {}", params.tol)));
    }
    let points: Vec<f64> = data.iter().map(|v| v.f64()).collect();
    let distinct = count_distinct(&points, dim);
    if distinct < k {
        return Err(Error::TooFewDistinct { k, distinct });
    }

    let mut rng = rng::seeded(params.seed);
    let mut centers = plus_plus_seeding(&points, dim, k, &mut rng);
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        let mut assignment = assign(&points, &centers, dim);
        objective.push(assignment.iter().map(|a| a.1).sum());
        iterations += 1;

        let next = update_centers(&points, &mut assignment, k, dim);
        let shift: f64 = centers
            .chunks_exact(dim)
            .zip(next.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .sum::<f64>()
            / k as f64;
        centers = next;
        if shift < params.tol {
            converged = true;
            break;
        }
    }
    objective.push(assign(&points, &centers, dim).iter().map(|a| a.1).sum());

    let codebook = Codebook::from_flat(dim, centers.into_iter().map(T::of).collect(), params.metric)?;
    Ok(KMeansOutcome { codebook, iterations, converged, objective })
}

/// Exact `m` nearest neighbors of every word under the codebook metric,
/// ascending distance, ties broken by ascending index. Each list is stored to
/// depth `K - 1` so sequential pruning can always top up.
pub fn build_neighbor_table<T: Scalar>(codebook: &Codebook<T>, m: usize) -> Result<NeighborTable> {
    build_neighbor_table_with_depth(codebook, m, codebook.k().saturating_sub(1))
}

/// As [`build_neighbor_table`], storing `depth >= m` entries per word.
pub fn build_neighbor_table_with_depth<T: Scalar>(
    codebook: &Codebook<T>,
    m: usize,
    depth: usize,
) -> Result<NeighborTable> {
    let k = codebook.k();
    if m == 0 || m >= k {
        return Err(Error::InvalidParameter(format!("neighbor count m = {m} must satisfy 1 <= m < K = {k}")));
    }
    let depth = depth.clamp(m, k - 1);
    let lists = (0..k)
        .into_par_iter()
        .map(|slot| {
            let w = Word::from_slot(slot);
            let mut others: Vec<(f64, Word)> = codebook
                .index_set()
                .into_iter()
                .filter(|&o| o != w)
                .map(|o| (codebook.centroid_distance(w, o), o))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(depth);
            others.into_iter().map(|(_, o)| o).collect()
        })
        .collect();
    NeighborTable::new(m, lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn w(i: usize) -> Word {
        Word::new(i)
    }

    fn blobs(seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut data = Vec::new();
        for center in [[0.0, 0.0], [10.0, 10.0]] {
            for _ in 0..200 {
                data.push(center[0] + noise.sample(&mut r));
                data.push(center[1] + noise.sample(&mut r));
            }
        }
        data
    }

    #[test]
    fn separated_blobs_recovered() {
        let data = blobs(11);
        // Oracle: the blob sample means.
        let mean = |range: std::ops::Range<usize>| {
            let mut m = [0.0; 2];
            for i in range.clone() {
                m[0] += data[2 * i];
                m[1] += data[2 * i + 1];
            }
            [m[0] / range.len() as f64, m[1] / range.len() as f64]
        };
        let expected = [mean(0..200), mean(200..400)];
        let out = kmeans_rows(&data, 2, &KMeansParams::new(2, 3)).unwrap();
        assert!(out.converged);
        for e in expected {
            let nearest = (1..=2)
                .map(|j| sq_dist(out.codebook.centroid(w(j)), &e).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 0.1, "centroid off by {nearest}");
        }
    }

    #[test]
    fn identical_points_single_center() {
        let data = vec![2.5f64, -1.0].repeat(30);
        let out = kmeans_rows(&data, 2, &KMeansParams::new(1, 0)).unwrap();
        assert_eq!(out.codebook.centroid(w(1)), [2.5, -1.0]);
    }

    #[test]
    fn too_few_distinct_points() {
        let data = [0.0f64, 1.0, 0.0, 1.0, 2.0];
        let err = kmeans_rows(&data, 1, &KMeansParams::new(4, 0)).unwrap_err();
        assert!(matches!(err, Error::TooFewDistinct { k: 4, distinct: 3 }));
    }

    #[test]
    fn objective_non_increasing_and_deterministic() {
        let mut r = rng::seeded(5);
        let data: Vec<f64> = (0..3000).map(|_| r.random::<f64>() * 10.0).collect();
        let params = KMeansParams { max_iter: 40, tol: 0.0, ..KMeansParams::new(25, 9) };
        let a = kmeans_rows(&data, 3, &params).unwrap();
        for pair in a.objective.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pair:?}");
        }
        let b = kmeans_rows(&data, 3, &params).unwrap();
        assert_eq!(a.codebook, b.codebook);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn empty_clusters_reseeded_at_farthest_points() {
        let points = [0.0, 1.0, 5.0, 9.0];
        // Everything assigned to cluster 0 (center 0.0); clusters 1 and 2 empty.
        let mut assignment = vec![(0, 0.0), (0, 1.0), (0, 25.0), (0, 81.0)];
        let next = update_centers(&points, &mut assignment, 3, 1);
        assert_eq!(next, [3.75, 9.0, 5.0]);
    }

    #[test]
    fn neighbor_table_one_dimensional() {
        let cb = Codebook::new(vec![vec![0.0f64], vec![1.0], vec![3.0]], Metric::SqEuclidean).unwrap();
        let t = build_neighbor_table(&cb, 1).unwrap();
        assert_eq!(t.nearest(w(1)), [w(2)]);
        assert_eq!(t.nearest(w(2)), [w(1)]);
        assert_eq!(t.nearest(w(3)), [w(2)]);

        let full = build_neighbor_table(&cb, 2).unwrap();
        assert_eq!(full.nearest(w(1)), [w(2), w(3)]);
        assert_eq!(full.nearest(w(2)), [w(1), w(3)]);
        assert_eq!(full.nearest(w(3)), [w(2), w(1)]);
    }

    #[test]
    fn neighbor_ties_prefer_lower_index() {
        let cb = Codebook::new(vec![vec![-1.0f64], vec![0.0], vec![1.0]], Metric::SqEuclidean).unwrap();
        let t = build_neighbor_table(&cb, 1).unwrap();
        assert_eq!(t.nearest(w(2)), [w(1)]);
        assert!(build_neighbor_table(&cb, 3).is_err());
        assert!(build_neighbor_table(&cb, 0).is_err());
        let shallow = build_neighbor_table_with_depth(&cb, 1, 1).unwrap();
        assert_eq!(shallow.depth(), 1);
    }
}
