//! Unit conversions at the API boundary. Internally everything is angular
//! frequency detuning (rad/s), seconds and linear transmission.

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular-frequency width of a wavelength interval `delta_pm` (pm) at `lambda0_nm`.
///
/// Uses Δω = 2πcΔλ/λ₀². 50 pm at 1536.5 nm is 2π × 6.349 GHz.
pub fn pm_to_angular<T: Real>(delta_pm: T, lambda0_nm: T) -> T {
    let lambda = lambda0_nm * lit(1e-9);
    T::TAU() * lit::<T>(SPEED_OF_LIGHT) * delta_pm * lit(1e-12) / (lambda * lambda)
}

/// Inverse of [`pm_to_angular`].
pub fn angular_to_pm<T: Real>(delta_omega: T, lambda0_nm: T) -> T {
    let lambda = lambda0_nm * lit(1e-9);
    delta_omega * lambda * lambda / (T::TAU() * lit::<T>(SPEED_OF_LIGHT)) * lit(1e12)
}

/// Absolute angular frequency of a vacuum wavelength in nm.
pub fn wavelength_to_angular<T: Real>(lambda_nm: T) -> T {
    T::TAU() * lit::<T>(SPEED_OF_LIGHT) / (lambda_nm * lit(1e-9))
}

/// Ordinary frequency (Hz) from angular frequency.
pub fn angular_to_hz<T: Real>(omega: T) -> T {
    omega / T::TAU()
}

pub fn dbm_to_mw<T: Real>(dbm: T) -> T {
    lit::<T>(10.0).powf(dbm / lit(10.0))
}

pub fn mw_to_dbm<T: Real>(mw: T) -> T {
    lit::<T>(10.0) * mw.log10()
}

/// Power transmission of a loss given in dB.
pub fn loss_db_to_transmission<T: Real>(loss_db: T) -> T {
    lit::<T>(10.0).powf(-loss_db / lit(10.0))
}

/// Gaussian standard deviation from a full width at half maximum.
pub fn fwhm_to_sigma<T: Real>(fwhm: T) -> T {
    fwhm / (lit::<T>(2.0) * (lit::<T>(2.0) * T::LN_2()).sqrt())
}

/// Field-amplitude spectral standard deviation of a transform-limited
/// Gaussian pulse with intensity FWHM `tau_ps` (ps).
///
/// σ = 2·√(ln 2)/τ, so the field spectrum is exp(−Ω²/(2σ²)) and the
/// intensity time-bandwidth product Δν·τ equals 2·ln2/π.
pub fn pump_sigma_from_fwhm<T: Real>(tau_ps: T) -> Result<T> {
    if !(tau_ps > T::zero()) || !tau_ps.is_finite() {
        return Err(domain(format!("pump FWHM must be positive and finite, got {tau_ps} ps")));
    }
    Ok(lit::<T>(2.0) * T::LN_2().sqrt() / (tau_ps * lit(1e-12)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_pm_is_six_point_three_five_ghz() {
        let w = pm_to_angular(50.0f64, 1536.5);
        let ghz = angular_to_hz(w) / 1e9;
        assert!((ghz - 6.349).abs() < 1e-3, "{ghz}");
        assert!((angular_to_pm(w, 1536.5) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn power_conversions() {
        assert!((dbm_to_mw(0.0) - 1.0f64).abs() < 1e-15);
        assert!((dbm_to_mw(-10.0) - 0.1f64).abs() < 1e-15);
        assert!((mw_to_dbm(dbm_to_mw(3.3)) - 3.3f64).abs() < 1e-12);
        assert!((loss_db_to_transmission(5.0) - 0.316_227_766f64).abs() < 1e-9);
    }

    #[test]
    fn pump_sigma_at_fifty_ps() {
        let s: f64 = pump_sigma_from_fwhm(50.0).unwrap();
        assert!((s - 3.330e10).abs() / 3.330e10 < 1e-3);
        assert!(pump_sigma_from_fwhm(0.0f64).is_err());
        assert!(pump_sigma_from_fwhm(-1.0f64).is_err());
        let half: f64 = pump_sigma_from_fwhm(25.0).unwrap();
        assert!((half / s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pump_sigma_matches_time_bandwidth_product() {
        // intensity spectrum exp(-Ω²/σ²) has FWHM 2σ√ln2
        let tau = 50.0f64;
        let s: f64 = pump_sigma_from_fwhm(tau).unwrap();
        let dnu = 2.0 * s * std::f64::consts::LN_2.sqrt() / std::f64::consts::TAU;
        let tbp = dnu * tau * 1e-12;
        assert!((tbp - 2.0 * std::f64::consts::LN_2 / std::f64::consts::PI).abs() < 1e-12);
    }
}
