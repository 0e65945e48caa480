use serde::{Deserialize, Serialize};

use super::jsa::{Axis, Photon};
use super::{build_jsa, FilterSpec, GridConfig, SourceSpec};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Filtered photon duration relative to the pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthRatio<T> {
    /// Intensity FWHM of the filtered signal photon, s.
    pub tau_photon: T,
    /// Intensity FWHM of the pump computed with the same transform, s.
    pub tau_pump: T,
    pub ratio: T,
}

/// Temporal intensity FWHM of the filtered signal photon over that of the pump.
///
/// The photon intensity is I(t) = Σ_y |Σ_x f(x, y)√T_s(x) e^{−ixt}|², i.e. the
/// idler is traced out incoherently.
pub fn photon_pump_width_ratio<T: Real>(
    source: &SourceSpec<T>,
    filter: &FilterSpec<T>,
    config: &GridConfig<T>,
) -> Result<WidthRatio<T>> {
    // amplitude tails fall half as fast as intensity tails
    let wide = GridConfig { truncation: config.truncation * lit::<T>(2.0).sqrt(), ..*config };
    let jsa = build_jsa(source, &wide)?;
    let n = config.points;
    let xs = jsa.filter_axis(Photon::Signal, filter, n)?;
    let ys = jsa.full_axis(Photon::Idler, n);
    jsa.check_resolution(Photon::Signal, &xs, Some(filter))?;
    let ws = jsa.filter_weights(Photon::Signal, filter, &xs);
    let yv = ys.values();
    let cols: Vec<Vec<T>> = (0..n)
        .map(|k| {
            let x = xs.at(k);
            yv.iter().map(|&y| jsa.evaluate(x, y) * ws[k]).collect()
        })
        .collect();
    let xv = xs.values();
    let photon = |t: T| {
        let mut re = vec![T::zero(); n];
        let mut im = vec![T::zero(); n];
        for (k, col) in cols.iter().enumerate() {
            let (s, c) = (xv[k] * t).sin_cos();
            for j in 0..n {
                re[j] = re[j] + col[j] * c;
                im[j] = im[j] - col[j] * s;
            }
        }
        re.iter().zip(&im).map(|(&a, &b)| a * a + b * b).sum::<T>()
    };

    let sp = source.jsa_pump_sigma()?;
    let half = config.truncation * sp * lit(2.0);
    let pump_axis = Axis::new(-half, half, n);
    let pump_amp: Vec<T> = pump_axis.values().iter().map(|&w| (-(w * w) / (lit::<T>(4.0) * sp * sp)).exp()).collect();
    let pv = pump_axis.values();
    let pump = |t: T| {
        let (mut re, mut im) = (T::zero(), T::zero());
        for (k, &a) in pump_amp.iter().enumerate() {
            let (s, c) = (pv[k] * t).sin_cos();
            re = re + a * c;
            im = im - a * s;
        }
        re * re + im * im
    };

    let guess = source.pump_fwhm_seconds()?;
    let tau_pump = fwhm(pump, guess)?;
    let tau_photon = fwhm(photon, guess)?;
    Ok(WidthRatio { tau_photon, tau_pump, ratio: tau_photon / tau_pump })
}

/// FWHM of an even, peaked function by outward scan and bisection.
fn fwhm<T: Real, F: Fn(T) -> T>(f: F, guess: T) -> Result<T> {
    let peak = f(T::zero());
    let target = peak / lit(2.0);
    let step = guess / lit(16.0);
    let mut lo = T::zero();
    let mut hi = step;
    let mut found = false;
    for _ in 0..4096 {
        if f(hi) < target {
            found = true;
            break;
        }
        lo = hi;
        hi = hi + step;
    }
    if !found {
        return Err(Error::Degenerate("temporal intensity never falls to half maximum".into()));
    }
    for _ in 0..80 {
        let mid = (lo + hi) / lit(2.0);
        if f(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo + hi)
}
