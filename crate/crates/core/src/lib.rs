//! Transductive string kernels for text classification.
//!
//! The pipeline: character n-gram kernels over the joint train+test corpus
//! ([`string_kernels`]), normalization and RBF re-embedding followed by the
//! test-adapted linear kernel `K̃·K̃ᵀ` ([`transforms`]), dual kernel ridge
//! regression ([`krr`]), and a two-iteration self-training classifier
//! ([`transductive`]). [`eval`] and [`experiment`] provide accuracy,
//! McNemar's test, and cross-domain experiment grids.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod krr;
pub mod matrix;
pub mod string_kernels;
pub mod synth;
pub mod transductive;
pub mod transforms;

pub use corpus::{Corpus, Document, LabelCodec, Partition};
pub use error::{Error, Result};
pub use exec::Execution;
pub use krr::{KrrConfig, KrrModel, Prediction, PredictionSet};
pub use matrix::Matrix;
pub use string_kernels::{
    gram_matrix, kernel_value, KernelKind, KernelSpec, NGramProfile, NGramRange, TextOptions,
};
pub use transductive::{tkc_run, TkcConfig, TkcTrace};
pub use transforms::{KernelMatrix, Stage, TransductivePipeline};
