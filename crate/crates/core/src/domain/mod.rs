//! Domain types shared by every stage of the pipeline.
//!
//! Word indices are 1-based (`1..=K`) everywhere inside the library. File
//! formats use 0-based indices and translate at the boundary with
//! [`Word::from_slot`] / [`Word::slot`].

mod codebook;
mod corpus;
mod representation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use codebook::{Codebook, NeighborTable};
pub use corpus::{DescriptorCorpus, Image, RawImage};
pub use representation::{
    CodingMatrix, CodingScheme, ImageCoding, Representation, RepresentationMatrix,
};

/// A visual word, identified by its 1-based position in the initial codebook.
/// Serialized as its 0-based slot, like every file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(u32);

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u32(self.0 - 1)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let slot = u32::deserialize(d)?;
        slot.checked_add(1).map(Word).ok_or_else(|| serde::de::Error::custom("word slot out of range"))
    }
}

impl Word {
    /// Word with 1-based index `index`.
    ///
    /// Panics if `index` is zero or exceeds `u32::MAX`.
    pub fn new(index: usize) -> Word {
        assert!(index >= 1, "word indices are 1-based");
        Word(u32::try_from(index).expect("word index fits in u32"))
    }

    /// Word stored at 0-based position `slot`.
    pub fn from_slot(slot: usize) -> Word {
        Word::new(slot + 1)
    }

    /// 1-based index.
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// 0-based position.
    #[inline]
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Words `1..=k` in order.
pub fn index_set(k: usize) -> Vec<Word> {
    (1..=k).map(Word::new).collect()
}

/// Position of a class label in a corpus' class list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Descriptor-to-centroid distance function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    SqEuclidean,
    Euclidean,
    Cityblock,
}

impl Metric {
    /// Distance between two equal-length vectors, accumulated in `f64`.
    #[inline]
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::SqEuclidean => sq_euclidean(a, b),
            Metric::Euclidean => sq_euclidean(a, b).sqrt(),
            Metric::Cityblock => a.iter().zip(b).map(|(x, y)| (x.f64() - y.f64()).abs()).sum(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::SqEuclidean => "sqeuclidean",
            Metric::Euclidean => "euclidean",
            Metric::Cityblock => "cityblock",
        }
    }
}

#[inline]
fn sq_euclidean<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.f64() - y.f64();
            d * d
        })
        .sum()
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqeuclidean" => Ok(Metric::SqEuclidean),
            "euclidean" => Ok(Metric::Euclidean),
            "cityblock" => Ok(Metric::Cityblock),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Checks that `words` is strictly increasing and every entry is `<= k`.
pub(crate) fn check_word_list(words: &[Word], k: usize, what: &str) -> Result<()> {
    for pair in words.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidData(format!("{what}: word list is not strictly increasing")));
        }
    }
    if let Some(last) = words.last() {
        if last.get() > k {
            return Err(Error::InvalidData(format!("{what}: word {last} exceeds K = {k}")));
        }
    }
    Ok(())
}
