use serde::{Deserialize, Serialize};

use crate::domain::{check_word_list, ClassId, Metric, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How descriptors are assigned to words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum CodingScheme {
    /// One-hot on the nearest word.
    Hard,
    /// Normalized `exp(-softness * delta)` weights over all words.
    Soft { softness: f64 },
}

impl CodingScheme {
    pub fn is_soft(&self) -> bool {
        matches!(self, CodingScheme::Soft { .. })
    }
}

/// Coding rows of one image: `N x |active|`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageCoding<T> {
    pub rows: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> ImageCoding<T> {
    pub fn row(&self, i: usize, width: usize) -> &[T] {
        &self.data[i * width..(i + 1) * width]
    }
}

/// Per-image coding coefficients retained from encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingMatrix<T> {
    scheme: CodingScheme,
    metric: Metric,
    k: usize,
    active: Vec<Word>,
    images: Vec<ImageCoding<T>>,
    labels: Vec<ClassId>,
    classes: Vec<String>,
    ids: Vec<String>,
}

impl<T: Scalar> CodingMatrix<T> {
    /// Validates coding rows. `k` is the size of the initial codebook and
    /// `active` the ascending words the columns refer to.
    ///
    /// Soft rows must be non-negative and sum to one; individual coefficients
    /// may have underflowed to zero.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scheme: CodingScheme,
        metric: Metric,
        k: usize,
        active: Vec<Word>,
        images: Vec<ImageCoding<T>>,
        labels: Vec<ClassId>,
        classes: Vec<String>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::EmptyInput("coding matrix without words"));
        }
        check_word_list(&active, k, "coding matrix")?;
        if labels.len() != images.len() || ids.len() != images.len() {
            return Err(Error::InvalidData("coding matrix: labels/ids do not match image count".into()));
        }
        if let Some(l) = labels.iter().find(|l| l.index() >= classes.len()) {
            return Err(Error::InvalidData(format!("coding matrix: class index {} out of range", l.0)));
        }
        if let CodingScheme::Soft { softness } = scheme {
            if !(softness > 0.0 && softness.is_finite()) {
                return Err(Error::InvalidParameter(format!("softness must be positive, got {softness}")));
            }
        }
        let width = active.len();
        for (i, img) in images.iter().enumerate() {
            if img.rows == 0 || img.data.len() != img.rows * width {
                return Err(Error::InvalidData(format!("coding of image {i} has a malformed shape")));
            }
            for (r, row) in img.data.chunks_exact(width).enumerate() {
                let ok = match scheme {
                    CodingScheme::Hard => {
                        row.iter().all(|v| *v == T::zero() || *v == T::one())
                            && row.iter().filter(|v| **v == T::one()).count() == 1
                    }
                    CodingScheme::Soft { .. } => {
                        row.iter().all(|v| v.is_finite() && *v >= T::zero())
                            && (row.iter().map(|v| v.f64()).sum::<f64>() - 1.0).abs() <= T::TIGHT_TOL
                    }
                };
                if !ok {
                    return Err(Error::InvalidData(format!("coding of image {i}, row {r} violates the scheme")));
                }
            }
        }
        Ok(CodingMatrix { scheme, metric, k, active, images, labels, classes, ids })
    }

    pub fn scheme(&self) -> CodingScheme {
        self.scheme
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Size of the initial codebook.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn active_words(&self) -> &[Word] {
        &self.active
    }

    pub fn images(&self) -> &[ImageCoding<T>] {
        &self.images
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// A pooled image representation over an ascending set of active words.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation<T> {
    vector: Vec<T>,
    active: Vec<Word>,
}

impl<T: Scalar> Representation<T> {
    /// Entries must be finite, non-negative and sum to one.
    pub fn new(vector: Vec<T>, active: Vec<Word>) -> Result<Self> {
        if vector.len() != active.len() {
            return Err(Error::DimensionMismatch {
                context: "representation",
                expected: active.len(),
                found: vector.len(),
            });
        }
        if active.is_empty() {
            return Err(Error::EmptyInput("representation without words"));
        }
        check_word_list(&active, usize::MAX, "representation")?;
        check_histogram(&vector, "representation")?;
        Ok(Representation { vector, active })
    }

    pub(crate) fn new_unchecked(vector: Vec<T>, active: Vec<Word>) -> Self {
        Representation { vector, active }
    }

    pub fn vector(&self) -> &[T] {
        &self.vector
    }

    pub fn active_words(&self) -> &[Word] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }

    pub fn position(&self, w: Word) -> Option<usize> {
        self.active.binary_search(&w).ok()
    }

    /// Value of the bin for `w`, if active.
    pub fn get(&self, w: Word) -> Option<T> {
        self.position(w).map(|i| self.vector[i])
    }

    pub fn sum(&self) -> f64 {
        self.vector.iter().map(|v| v.f64()).sum()
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<Word>) {
        (self.vector, self.active)
    }
}

fn check_histogram<T: Scalar>(row: &[T], what: &str) -> Result<()> {
    if row.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidData(format!("{what}: entries must be finite and non-negative")));
    }
    let s: f64 = row.iter().map(|v| v.f64()).sum();
    if (s - 1.0).abs() > T::LOOSE_TOL {
        return Err(Error::InvalidData(format!("{what}: entries sum to {s}, expected 1")));
    }
    Ok(())
}

/// One representation per image, all over the same active words.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix<T> {
    active: Vec<Word>,
    data: Vec<T>,
    labels: Vec<ClassId>,
    classes: Vec<String>,
    ids: Vec<String>,
}

impl<T: Scalar> RepresentationMatrix<T> {
    /// `data` is row-major `n x |active|`.
    pub fn new(
        active: Vec<Word>,
        data: Vec<T>,
        labels: Vec<ClassId>,
        classes: Vec<String>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::EmptyInput("representation matrix without words"));
        }
        check_word_list(&active, usize::MAX, "representation matrix")?;
        let width = active.len();
        if data.len() != labels.len() * width {
            return Err(Error::DimensionMismatch {
                context: "representation matrix",
                expected: labels.len() * width,
                found: data.len(),
            });
        }
        if ids.len() != labels.len() {
            return Err(Error::InvalidData("representation matrix: ids do not match rows".into()));
        }
        if let Some(l) = labels.iter().find(|l| l.index() >= classes.len()) {
            return Err(Error::InvalidData(format!("representation matrix: class index {} out of range", l.0)));
        }
        for (i, row) in data.chunks_exact(width).enumerate() {
            check_histogram(row, &format!("row {i} ({})", ids[i]))?;
        }
        Ok(RepresentationMatrix { active, data, labels, classes, ids })
    }

    pub(crate) fn new_unchecked(
        active: Vec<Word>,
        data: Vec<T>,
        labels: Vec<ClassId>,
        classes: Vec<String>,
        ids: Vec<String>,
    ) -> Self {
        debug_assert_eq!(data.len(), labels.len() * active.len());
        RepresentationMatrix { active, data, labels, classes, ids }
    }

    /// Stacks representations that share their active words.
    pub fn from_rows(
        rows: Vec<Representation<T>>,
        labels: Vec<ClassId>,
        classes: Vec<String>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyInput("representation matrix without rows"));
        };
        let active = first.active.clone();
        if rows.iter().any(|r| r.active != active) {
            return Err(Error::InvalidData("rows do not share active words".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidData("labels do not match rows".into()));
        }
        let data = rows.into_iter().flat_map(|r| r.vector).collect();
        Self::new(active, data, labels, classes, ids)
    }

    /// Same matrix with the rows at `indices`.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let w = self.width();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        RepresentationMatrix {
            active: self.active.clone(),
            data,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn active_words(&self) -> &[Word] {
        &self.active
    }

    /// Number of active words `|T|`.
    pub fn width(&self) -> usize {
        self.active.len()
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width())
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Values of bin `j` across rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j].f64()).collect()
    }

    pub fn representation(&self, i: usize) -> Representation<T> {
        Representation::new_unchecked(self.row(i).to_vec(), self.active.clone())
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}
