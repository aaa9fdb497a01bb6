//! Robust low-rank plus sparse tensor decomposition with graph total-variation
//! regularizers, solved by two-block ADMM, together with neighborhood-based
//! anomaly scoring, synthetic benchmark generation and evaluation metrics.
//!
//! All numerical code is generic over a [`Real`] scalar (`f32` or `f64`).
//! The aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line front end and the file formats use.
//!
//! Modes are 0-based throughout the library.

pub mod dtf;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod prox;
pub mod scalar;
pub mod scoring;
pub mod solver;
pub mod synth;
pub mod tensor;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision tensor.
pub type Tensor = tensor::DenseTensor<f64>;
/// Double-precision mode unfolding.
pub type Unfolding = tensor::ModeUnfolding<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;
pub type GraphOps = graph::GraphOperators<f64>;
pub type DiffOp = graph::DiffOperator<f64>;
pub type Config = solver::SolverConfig<f64>;
pub type Decomposition = solver::DecompositionResult<f64>;
pub type FastSolve = solver::FastSolveCache<f64>;
pub type Scores = scoring::ScoreField<f64>;
pub type ScoreConfig = scoring::ScoringConfig<f64>;
pub type Dataset = synth::LabeledDataset<f64>;
