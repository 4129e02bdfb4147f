use crate::domain::ClassId;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unvalidated image as read from an external format.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage<T> {
    pub id: String,
    pub label: String,
    pub descriptors: Vec<Vec<T>>,
}

/// One image: `N >= 1` finite descriptors of a common dimension and a class.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    id: String,
    label: ClassId,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> ClassId {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of descriptors `N`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn descriptor(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn descriptors(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major `N x d` descriptor matrix.
    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Per-image sets of `d`-dimensional local descriptors with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorCorpus<T> {
    dim: usize,
    classes: Vec<String>,
    images: Vec<Image<T>>,
}

impl<T: Scalar> DescriptorCorpus<T> {
    /// Validates raw images against a declared class list.
    pub fn validate(dim: usize, classes: Vec<String>, raw: Vec<RawImage<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidData("descriptor dimension must be positive".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].contains(c) {
                return Err(Error::InvalidData(format!("class {c:?} declared twice")));
            }
        }
        let mut images = Vec::with_capacity(raw.len());
        for img in raw {
            let Some(label) = classes.iter().position(|c| *c == img.label) else {
                return Err(Error::UnknownLabel { id: img.id, label: img.label });
            };
            if img.descriptors.is_empty() {
                return Err(Error::EmptyImage { id: img.id });
            }
            let mut data = Vec::with_capacity(img.descriptors.len() * dim);
            for (row, x) in img.descriptors.iter().enumerate() {
                if x.len() != dim {
                    return Err(Error::DescriptorDim { id: img.id, row, expected: dim, found: x.len() });
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { context: format!("image {}, descriptor {row}", img.id) });
                }
                data.extend_from_slice(x);
            }
            images.push(Image { id: img.id, label: ClassId(label as u32), dim, data });
        }
        Ok(DescriptorCorpus { dim, classes, images })
    }

    /// Validates raw images, taking the class list to be the sorted distinct labels.
    pub fn from_raw(dim: usize, raw: Vec<RawImage<T>>) -> Result<Self> {
        let mut classes: Vec<String> = raw.iter().map(|r| r.label.clone()).collect();
        classes.sort();
        classes.dedup();
        Self::validate(dim, classes, raw)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn images(&self) -> &[Image<T>] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.images.iter().map(|i| i.label).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.images.iter().map(|i| i.id.clone()).collect()
    }

    pub fn total_descriptors(&self) -> usize {
        self.images.iter().map(|i| i.len()).sum()
    }

    /// Sub-corpus made of the images at `indices`, keeping the class list.
    pub fn subset(&self, indices: &[usize]) -> Self {
        DescriptorCorpus {
            dim: self.dim,
            classes: self.classes.clone(),
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
        }
    }

    /// Converts back to the raw form; `validate` on the result reproduces `self`.
    pub fn to_raw(&self) -> Vec<RawImage<T>> {
        self.images
            .iter()
            .map(|img| RawImage {
                id: img.id.clone(),
                label: self.classes[img.label.index()].clone(),
                descriptors: img.descriptors().map(<[T]>::to_vec).collect(),
            })
            .collect()
    }
}
