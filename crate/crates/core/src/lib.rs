//! Filtering, heralding, coincidence and visibility models for photon-pair
//! sources sharing fibers with classical light.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases at the bottom of this file pin the common `f64` instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod optimize;
pub mod presets;
pub mod scalar;
pub mod spectral;
pub mod sweep;
pub mod units;

pub use error::{Error, FieldError, Result};
pub use scalar::Real;

pub type SourceSpec = spectral::SourceSpec<f64>;
pub type FilterSpec = spectral::FilterSpec<f64>;
pub type JointSpectrum = spectral::JointSpectrum<f64>;
pub type MuTriple = spectral::MuTriple<f64>;
pub type GridConfig = spectral::GridConfig<f64>;
pub type GaussianCoeffs = gaussian::GaussianCoeffs<f64>;
pub type ClosedFormReport = gaussian::ClosedFormReport<f64>;
pub type ChannelSpec = detection::ChannelSpec<f64>;
pub type RateReport = detection::RateReport<f64>;
pub type EntangledSource = entanglement::EntangledSource<f64>;
pub type VisibilityReport = entanglement::VisibilityReport<f64>;

pub type SourceSpecF32 = spectral::SourceSpec<f32>;
pub type FilterSpecF32 = spectral::FilterSpec<f32>;
pub type MuTripleF32 = spectral::MuTriple<f32>;
