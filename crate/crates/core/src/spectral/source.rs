use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};
use crate::units::{pump_sigma_from_fwhm, wavelength_to_angular};

/// How the pump bandwidth is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpBandwidth<T> {
    /// Intensity FWHM of a transform-limited pulse, in ps.
    FwhmTimePs(T),
    /// Field-amplitude spectral standard deviation, rad/s.
    Sigma(T),
}

/// Pair-source description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec<T> {
    pub pump: PumpBandwidth<T>,
    /// Phase-matching bandwidth σ_pm, rad/s.
    pub pm_sigma: T,
    /// Phase-matching angle θ in radians, [0, π).
    pub pm_angle: T,
    /// Mean pairs per pulse across the unfiltered joint spectrum.
    pub mu_total: T,
    /// Absolute signal and idler center frequencies, rad/s. Zero means the
    /// detuning frame is used directly.
    pub center_s: T,
    pub center_i: T,
}

impl<T: Real> SourceSpec<T> {
    pub fn new(pump: PumpBandwidth<T>, pm_sigma: T, pm_angle: T, mu_total: T) -> Self {
        Self { pump, pm_sigma, pm_angle, mu_total, center_s: T::zero(), center_i: T::zero() }
    }

    pub fn with_centers(mut self, center_s: T, center_i: T) -> Self {
        self.center_s = center_s;
        self.center_i = center_i;
        self
    }

    /// Degenerate source with both photons at `lambda_nm`.
    pub fn at_wavelength(self, lambda_nm: T) -> Self {
        let w = wavelength_to_angular(lambda_nm);
        self.with_centers(w, w)
    }

    pub fn with_mu_total(mut self, mu_total: T) -> Self {
        self.mu_total = mu_total;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = self.field_sigma()?;
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(domain(format!("pump sigma must be positive, got {sigma}")));
        }
        if !(self.pm_sigma > T::zero()) || !self.pm_sigma.is_finite() {
            return Err(domain(format!("pm_sigma must be positive, got {}", self.pm_sigma)));
        }
        if !(self.mu_total >= T::zero()) || !self.mu_total.is_finite() {
            return Err(domain(format!("mu_total must be non-negative, got {}", self.mu_total)));
        }
        if !(self.pm_angle >= T::zero() && self.pm_angle < T::PI()) {
            return Err(domain(format!("pm_angle must lie in [0, pi), got {}", self.pm_angle)));
        }
        Ok(())
    }

    /// Field-amplitude pump standard deviation: the pump spectrum is
    /// exp(−Ω²/(2σ²)).
    pub fn field_sigma(&self) -> Result<T> {
        match self.pump {
            PumpBandwidth::FwhmTimePs(tau) => pump_sigma_from_fwhm(tau),
            PumpBandwidth::Sigma(s) if s > T::zero() && s.is_finite() => Ok(s),
            PumpBandwidth::Sigma(s) => Err(domain(format!("pump sigma must be positive, got {s}"))),
        }
    }

    /// σ_p as it appears in the joint amplitude exp(−(ω_s+ω_i)²/(4σ_p²)) and in
    /// the Gaussian coefficients. Equal to field σ/√2 so that the pump factor of
    /// the amplitude is the pump field spectrum itself.
    pub fn jsa_pump_sigma(&self) -> Result<T> {
        Ok(self.field_sigma()? / lit::<T>(2.0).sqrt())
    }

    /// Pump intensity FWHM in seconds.
    pub fn pump_fwhm_seconds(&self) -> Result<T> {
        Ok(lit::<T>(2.0) * T::LN_2().sqrt() / self.field_sigma()?)
    }
}
