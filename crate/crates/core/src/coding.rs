//! Forward Bag-of-Words pipeline: hard or soft coding followed by average
//! pooling.
//!
//! This is also the brute-force reference for every pruning shortcut: coding
//! against a word subset `T` with [`encode_corpus_on`] yields exactly what a
//! codebook holding only `T` would produce.

use rayon::prelude::*;

use crate::domain::{
    ClassId, Codebook, CodingMatrix, CodingScheme, DescriptorCorpus, Image, ImageCoding,
    Representation, RepresentationMatrix, Word,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output of [`encode_corpus`].
#[derive(Debug, Clone)]
pub struct Encoded<T> {
    pub representations: RepresentationMatrix<T>,
    /// Retained coding rows, when requested.
    pub coding: Option<CodingMatrix<T>>,
    /// Descriptor-to-centroid distances evaluated (`N * |T|` per image).
    pub distance_evaluations: u64,
}

/// Index of the smallest value; ties go to the lowest index.
#[inline]
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// `out_k = exp(-softness * d_k) / sum_j exp(-softness * d_j)`, shifted by the
/// smallest distance so the largest exponent is zero.
pub(crate) fn soft_weights(distances: &[f64], softness: f64, out: &mut [f64]) {
    let dmin = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    for (o, &d) in out.iter_mut().zip(distances) {
        *o = (-softness * (d - dmin)).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

fn check_dims<T: Scalar>(image: &Image<T>, codebook: &Codebook<T>) -> Result<()> {
    if image.dim() != codebook.dim() {
        return Err(Error::DimensionMismatch { context: "coding", expected: codebook.dim(), found: image.dim() });
    }
    Ok(())
}

fn check_softness(softness: f64) -> Result<()> {
    if softness > 0.0 && softness.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("softness must be positive, got {softness}")))
    }
}

/// One-hot rows: row `i` is 1 at the nearest word, lowest index on ties.
pub fn hard_code<T: Scalar>(image: &Image<T>, codebook: &Codebook<T>) -> Result<ImageCoding<T>> {
    code_image(image, codebook, &codebook.index_set(), CodingScheme::Hard)
}

/// Rows of normalized kernel weights `exp(-softness * delta(x_i, c_k)) / Z`.
pub fn soft_code<T: Scalar>(image: &Image<T>, codebook: &Codebook<T>, softness: f64) -> Result<ImageCoding<T>> {
    code_image(image, codebook, &codebook.index_set(), CodingScheme::Soft { softness })
}

/// Codes `image` against the words in `words` only.
pub fn code_image<T: Scalar>(
    image: &Image<T>,
    codebook: &Codebook<T>,
    words: &[Word],
    scheme: CodingScheme,
) -> Result<ImageCoding<T>> {
    check_dims(image, codebook)?;
    if let CodingScheme::Soft { softness } = scheme {
        check_softness(softness)?;
    }
    let width = words.len();
    let mut dist = vec![0.0; width];
    let mut weights = vec![0.0; width];
    let mut data = vec![T::zero(); image.len() * width];
    for (x, row) in image.descriptors().zip(data.chunks_exact_mut(width)) {
        codebook.distances_into(x, words, &mut dist);
        match scheme {
            CodingScheme::Hard => row[argmin(&dist)] = T::one(),
            CodingScheme::Soft { softness } => {
                soft_weights(&dist, softness, &mut weights);
                for (r, w) in row.iter_mut().zip(&weights) {
                    *r = T::of(*w);
                }
            }
        }
    }
    Ok(ImageCoding { rows: image.len(), data })
}

/// Entry-wise mean of coding rows, labelled with `words`.
pub fn average_pool<T: Scalar>(coding: &ImageCoding<T>, words: &[Word]) -> Result<Representation<T>> {
    if coding.rows == 0 {
        return Err(Error::EmptyInput("average pooling needs at least one row"));
    }
    let width = words.len();
    if coding.data.len() != coding.rows * width {
        return Err(Error::DimensionMismatch {
            context: "average pooling",
            expected: coding.rows * width,
            found: coding.data.len(),
        });
    }
    let mut acc = vec![0.0f64; width];
    for row in coding.data.chunks_exact(width) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v.f64();
        }
    }
    let n = coding.rows as f64;
    Ok(Representation::new_unchecked(acc.into_iter().map(|a| T::of(a / n)).collect(), words.to_vec()))
}

/// Pooled hard-coded histogram without materializing one-hot rows.
fn hard_histogram<T: Scalar>(image: &Image<T>, codebook: &Codebook<T>, words: &[Word]) -> Vec<T> {
    let mut dist = vec![0.0; words.len()];
    let mut counts = vec![0usize; words.len()];
    for x in image.descriptors() {
        codebook.distances_into(x, words, &mut dist);
        counts[argmin(&dist)] += 1;
    }
    let n = image.len() as f64;
    counts.into_iter().map(|c| T::of(c as f64 / n)).collect()
}

/// Encodes every image over the full codebook.
pub fn encode_corpus<T: Scalar>(
    corpus: &DescriptorCorpus<T>,
    codebook: &Codebook<T>,
    scheme: CodingScheme,
    retain_coding: bool,
) -> Result<Encoded<T>> {
    encode_corpus_on(corpus, codebook, &codebook.index_set(), scheme, retain_coding)
}

/// Encodes every image against the word subset `words` (ascending). The
/// result equals encoding with a codebook that holds only those words.
pub fn encode_corpus_on<T: Scalar>(
    corpus: &DescriptorCorpus<T>,
    codebook: &Codebook<T>,
    words: &[Word],
    scheme: CodingScheme,
    retain_coding: bool,
) -> Result<Encoded<T>> {
    if words.is_empty() {
        return Err(Error::EmptyInput("encoding needs at least one word"));
    }
    crate::domain::check_word_list(words, codebook.k(), "encoding")?;
    if corpus.dim() != codebook.dim() {
        return Err(Error::DimensionMismatch { context: "coding", expected: codebook.dim(), found: corpus.dim() });
    }
    if let CodingScheme::Soft { softness } = scheme {
        check_softness(softness)?;
    }
    let width = words.len();

    let per_image: Vec<(Vec<T>, Option<ImageCoding<T>>)> = corpus
        .images()
        .par_iter()
        .map(|img| -> Result<_> {
            if scheme == CodingScheme::Hard && !retain_coding {
                return Ok((hard_histogram(img, codebook, words), None));
            }
            let coding = code_image(img, codebook, words, scheme)?;
            let pooled = average_pool(&coding, words)?.into_parts().0;
            Ok((pooled, retain_coding.then_some(coding)))
        })
        .collect::<Result<_>>()?;

    let evaluations = corpus.images().iter().map(|i| (i.len() * width) as u64).sum();
    let mut data = Vec::with_capacity(corpus.len() * width);
    let mut codings = Vec::new();
    for (pooled, coding) in per_image {
        data.extend(pooled);
        codings.extend(coding);
    }
    let labels: Vec<ClassId> = corpus.labels();
    let representations = RepresentationMatrix::new(
        words.to_vec(),
        data,
        labels.clone(),
        corpus.classes().to_vec(),
        corpus.ids(),
    )?;
    let coding = if retain_coding {
        Some(CodingMatrix::new(
            scheme,
            codebook.metric(),
            codebook.k(),
            words.to_vec(),
            codings,
            labels,
            corpus.classes().to_vec(),
            corpus.ids(),
        )?)
    } else {
        None
    };
    Ok(Encoded { representations, coding, distance_evaluations: evaluations })
}
