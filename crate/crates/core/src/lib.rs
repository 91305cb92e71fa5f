//! Explicit Wasserstein-1 normal-approximation bounds for sums of positively
//! associated variables, together with desk-scale simulators for the Ising
//! model, supercritical bond percolation, the voter model and the contact
//! process, and the statistics needed to compare the two.
//!
//! The bound formulas in [`bounds`] are generic over [`Scalar`] (`f32` or
//! `f64`); the simulators and estimators work in `f64`. Concrete aliases for
//! the common instantiations live at the crate root.

pub mod bounds;
pub mod harness;
pub mod lattice;
pub mod particles;
pub mod rng;
mod scalar;
pub mod stats;

pub use scalar::Scalar;

pub use bounds::{BoundKind, BoundsError};
pub use stats::{D1Estimate, SampleMatrix, StatsError};


pub type CovDecayParamsF64 = bounds::CovDecayParams<f64>;
pub type CovDecayParamsF32 = bounds::CovDecayParams<f32>;
pub type DecayConstantsF64 = bounds::DecayConstants<f64>;
pub type DecayConstantsF32 = bounds::DecayConstants<f32>;
pub type BoundReportF64 = bounds::BoundReport<f64>;
pub type BoundReportF32 = bounds::BoundReport<f32>;
pub type CovMatrixF64 = bounds::CovMatrix<f64>;
pub type CovMatrixF32 = bounds::CovMatrix<f32>;
