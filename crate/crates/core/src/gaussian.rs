//! Closed-form filtered-spectrum quantities for a Gaussian joint amplitude
//! (Gaussian pump, Gaussian-substituted phase matching, Gaussian filters).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};
use crate::spectral::{FilterShape, FilterSpec, SourceSpec, GAUSSIAN_PM_ALPHA};

/// Quadratic-form coefficients of |f·g_s·g_i|², in 1/(rad/s)².
/// `a0`/`b0` are `a`/`b` without the signal/idler filter term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoeffs<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub a0: T,
    pub b0: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport<T> {
    pub gamma_both: T,
    pub gamma_s: T,
    pub gamma_i: T,
    pub delta_s: T,
    pub delta_i: T,
    pub delta_ps: T,
    /// √((ab − c²)/(ab)) from the filtered coefficients.
    pub purity: T,
    /// Same expression with the unfiltered a0, b0.
    pub purity_unfiltered: T,
}

/// One point of a heralding-efficiency versus bandwidth curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FheRow<T> {
    /// Filter FWHM, rad/s.
    pub fwhm: T,
    pub delta_s: T,
    pub delta_i: T,
    pub delta_ps: T,
    pub purity: T,
}

/// Coefficients for filter widths `sigma_s`, `sigma_i` (rad/s); `None` means
/// unfiltered.
pub fn coeffs<T: Real>(source: &SourceSpec<T>, sigma_s: Option<T>, sigma_i: Option<T>) -> Result<GaussianCoeffs<T>> {
    source.validate()?;
    for s in [sigma_s, sigma_i].into_iter().flatten() {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(domain(format!("filter sigma must be positive and finite, got {s}")));
        }
    }
    let sp = source.jsa_pump_sigma()?;
    let q = lit::<T>(GAUSSIAN_PM_ALPHA) / source.pm_sigma;
    let (sin, cos) = source.pm_angle.sin_cos();
    let p = T::one() / (sp * sp);
    let a0 = q * q * sin * sin + p;
    let b0 = q * q * cos * cos + p;
    let c = q * q * cos * sin + p;
    let inv = |s: Option<T>| s.map_or(T::zero(), |s| T::one() / (s * s));
    Ok(GaussianCoeffs { a: a0 + inv(sigma_s), b: b0 + inv(sigma_i), c, a0, b0 })
}

fn closed_form_sigma<T: Real>(f: &FilterSpec<T>, source_center: T) -> Result<Option<T>> {
    match f.shape {
        FilterShape::AllPass => return Ok(None),
        FilterShape::Gaussian => {}
        FilterShape::FlatTop { .. } => return Err(Error::UnsupportedShape("flat-top".into())),
        FilterShape::Tabulated { .. } => return Err(Error::UnsupportedShape("tabulated".into())),
    }
    let off = (f.center - source_center).abs();
    if off > f.fwhm * lit(1e-9) {
        return Err(domain("closed form requires filters centered on the photon frequencies"));
    }
    f.validate()?;
    Ok(Some(f.sigma()))
}

/// Coefficients for Gaussian (or all-pass) filters centered on each photon.
pub fn coeffs_for_filters<T: Real>(
    source: &SourceSpec<T>,
    f_s: &FilterSpec<T>,
    f_i: &FilterSpec<T>,
) -> Result<GaussianCoeffs<T>> {
    let ss = closed_form_sigma(f_s, source.center_s)?;
    let si = closed_form_sigma(f_i, source.center_i)?;
    coeffs(source, ss, si)
}

pub fn closed_form_report<T: Real>(k: &GaussianCoeffs<T>) -> Result<ClosedFormReport<T>> {
    let c2 = k.c * k.c;
    let d00 = k.a0 * k.b0 - c2;
    let d11 = k.a * k.b - c2;
    if !(d00 > T::zero()) {
        return Err(Error::InvalidGaussian(format!("a0*b0 - c^2 = {d00} is not positive")));
    }
    if !(d11 > T::zero()) {
        return Err(Error::InvalidGaussian(format!("a*b - c^2 = {d11} is not positive")));
    }
    if k.a < k.a0 || k.b < k.b0 {
        return Err(Error::InvalidGaussian("filtered coefficients below unfiltered ones".into()));
    }
    let d10 = k.a * k.b0 - c2;
    let d01 = k.a0 * k.b - c2;
    let one = T::one();
    let delta_s = (d01 / d11).sqrt().min(one);
    let delta_i = (d10 / d11).sqrt().min(one);
    Ok(ClosedFormReport {
        gamma_both: (d00 / d11).sqrt().min(one),
        gamma_s: (d00 / d10).sqrt().min(one),
        gamma_i: (d00 / d01).sqrt().min(one),
        delta_s,
        delta_i,
        delta_ps: (delta_s * delta_i).sqrt(),
        purity: (d11 / (k.a * k.b)).sqrt(),
        purity_unfiltered: (d00 / (k.a0 * k.b0)).sqrt(),
    })
}

/// δ_s, δ_i, δ_PS and purity for symmetric Gaussian filters of each FWHM
/// (rad/s) in `fwhms`.
pub fn fhe_vs_bandwidth_curve<T: Real>(source: &SourceSpec<T>, fwhms: &[T]) -> Result<Vec<FheRow<T>>> {
    if fwhms.is_empty() {
        return Err(domain("bandwidth list is empty"));
    }
    fwhms
        .iter()
        .map(|&w| {
            if !(w > T::zero()) {
                return Err(domain(format!("filter fwhm must be positive, got {w}")));
            }
            let s = crate::units::fwhm_to_sigma(w);
            let r = closed_form_report(&coeffs(source, Some(s), Some(s))?)?;
            Ok(FheRow { fwhm: w, delta_s: r.delta_s, delta_i: r.delta_i, delta_ps: r.delta_ps, purity: r.purity })
        })
        .collect()
}
