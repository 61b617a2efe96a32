//! Joint-typicality support estimation for noisy sparse recovery.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for callers that do not need the choice.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod montecarlo;
pub mod projections;
pub mod rng;
pub mod scalar;
pub mod typicality;

pub use bounds::BoundInputs;
pub use ensembles::{EnsembleKind, MeasurementMatrix};
pub use error::{Error, Result};
pub use estimators::{EstimateResult, Outcome, SparseSignal};
pub use linalg::Matrix;
pub use montecarlo::{ExperimentConfig, ExperimentReport, MetricRow};
pub use projections::{ColumnSpan, SupportSet};
pub use scalar::Real;
pub use typicality::TypicalityParams;

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MeasurementMatrixF64 = MeasurementMatrix<f64>;
pub type MeasurementMatrixF32 = MeasurementMatrix<f32>;
pub type SparseSignalF64 = SparseSignal<f64>;
pub type SparseSignalF32 = SparseSignal<f32>;
pub type EstimateResultF64 = EstimateResult<f64>;
pub type EstimateResultF32 = EstimateResult<f32>;
pub type TypicalityParamsF64 = TypicalityParams<f64>;
pub type TypicalityParamsF32 = TypicalityParams<f32>;
pub type BoundInputsF64 = BoundInputs<f64>;
pub type BoundInputsF32 = BoundInputs<f32>;
