//! Joint spectral amplitudes, spectral filters and the quantities obtained
//! from them by direct two-dimensional quadrature.

mod filter;
mod jsa;
mod means;
mod purity;
mod ratio;
mod source;

pub use filter::{filter_transmission, FilterShape, FilterSpec, DEFAULT_FLAT_TOP_ORDER};
pub use jsa::{build_jsa, Axis, GridConfig, JointSpectrum, PhaseMatching, GAUSSIAN_PM_ALPHA};
pub use means::{filtered_means, MuTriple};
pub use purity::{schmidt_purity, schmidt_purity_trace};
pub use ratio::{photon_pump_width_ratio, WidthRatio};
pub use source::{PumpBandwidth, SourceSpec};
