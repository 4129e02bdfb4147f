//! Visual-word codebook pruning for Bag-of-Words image representations.
//!
//! Representations computed once on a full codebook are updated in place as
//! words are removed ([`pruning`]), so a word-selection search ([`selection`])
//! never re-codes descriptors. The forward pipeline in [`coding`] doubles as
//! the brute-force reference for every pruning operator.
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for common use.

pub mod builder;
pub mod classifier;
pub mod coding;
pub mod domain;
pub mod error;
pub mod pruning;
pub mod rng;
pub mod scalar;
pub mod scoring;
pub mod selection;
pub mod validation;

pub use builder::{build_neighbor_table, kmeans, KMeansParams};
pub use classifier::{evaluate, train_linear, LinearModel, TrainConfig};
pub use coding::{encode_corpus, encode_corpus_on, Encoded};
pub use domain::{
    index_set, ClassId, Codebook, CodingMatrix, CodingScheme, DescriptorCorpus, Metric, NeighborTable,
    Representation, RepresentationMatrix, Word,
};
pub use error::{Error, ErrorKind, Result};
pub use pruning::{
    discard_baseline, estimate_lambda, prune_hard, prune_hard_exact, prune_soft, psi_exact, psi_heuristic,
    PruneSet, TransitionWeights,
};
pub use scalar::Scalar;
pub use scoring::{max_relevance, ScoreReport};
pub use selection::{anneal, AnnealConfig, AnnealSource};

pub type Codebook64 = Codebook<f64>;
pub type Codebook32 = Codebook<f32>;
pub type Corpus64 = DescriptorCorpus<f64>;
pub type Corpus32 = DescriptorCorpus<f32>;
pub type Representation64 = Representation<f64>;
pub type Representation32 = Representation<f32>;
pub type RepresentationMatrix64 = RepresentationMatrix<f64>;
pub type RepresentationMatrix32 = RepresentationMatrix<f32>;
pub type CodingMatrix64 = CodingMatrix<f64>;
pub type CodingMatrix32 = CodingMatrix<f32>;
