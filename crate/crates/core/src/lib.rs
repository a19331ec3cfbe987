//! Adaptive estimation of a 1-periodic signal from a continuous-time
//! observation `dy_t = S(t) dt + dxi_t` on `[0, n]`, where `xi` is a Brownian
//! motion plus a compound Poisson process.
//!
//! The estimator projects the observation on the trigonometric basis, forms
//! Pinsker-weighted least squares estimates over a grid of smoothness
//! parameters, and picks one by minimising a penalized empirical risk. The
//! [`risk`] module computes exact and Monte Carlo risks and checks the
//! resulting oracle inequality numerically.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

// NaN must fail validation, so `!(x > 0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod estimator;
pub mod io;
pub mod noise;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod signal;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use basis::BasisIndex;
pub use noise::JumpLaw;
pub use risk::BoundChoice;
pub use signal::Catalogue;

pub type SignalSpec = signal::SignalSpec<f64>;
pub type NoiseParams = noise::NoiseParams<f64>;
pub type JumpRecord = noise::JumpRecord<f64>;
pub type CoefficientEstimates = estimator::CoefficientEstimates<f64>;
pub type PathObservation = estimator::PathObservation<f64>;
pub type WeightSequence = weights::WeightSequence<f64>;
pub type WeightGrid = weights::WeightGrid<f64>;
pub type Alpha = weights::Alpha<f64>;
pub type SelectionConfig = selection::SelectionConfig<f64>;
pub type SigmaMode = selection::SigmaMode<f64>;
pub type SelectionResult = selection::SelectionResult<f64>;
pub type Experiment<'a> = risk::Experiment<'a, f64>;
pub type OracleReport = risk::OracleReport<f64>;
pub type McRisk = risk::McRisk<f64>;
