//! Synthetic marginals, label noise and the dataset container.

mod dataset;
pub mod io;
mod marginal;
mod noise;

pub use dataset::{empirical_opt_upper_bound, sign, Dataset, Points};
pub use marginal::{sample_marginal, MarginalKind, MarginalSpec};
pub use noise::{label_dataset, CorruptionRule, FlipProfile, NoiseKind, NoiseModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionsError {
    #[error("unknown marginal kind '{0}'")]
    UnknownKind(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("dataset must contain at least one point")]
    Empty,
    #[error("labels must be -1 or +1, found {0}")]
    InvalidLabel(i64),
    #[error("non-finite coordinate")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, DistributionsError>;
