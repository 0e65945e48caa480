use serde::{Deserialize, Serialize};

use super::jsa::Photon;
use super::{FilterSpec, JointSpectrum};
use crate::error::{domain, Result};
use crate::scalar::Real;

/// Mean photon numbers inside the filter passbands and the filter heralding
/// efficiencies derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuTriple<T> {
    pub mu_s: T,
    pub mu_i: T,
    pub mu_both: T,
    /// μ_both/μ_i; `None` when μ_i vanishes.
    pub delta_s: Option<T>,
    /// μ_both/μ_s; `None` when μ_s vanishes.
    pub delta_i: Option<T>,
    pub delta_ps: Option<T>,
    /// False when halving the quadrature resolution moved any mean by more
    /// than the configured tolerance.
    pub converged: bool,
}

impl<T: Real> MuTriple<T> {
    /// Builds a triple from pass fractions Γ_s, Γ_i, Γ_both of the unfiltered
    /// joint intensity. The efficiencies are ratios of fractions, so they are
    /// defined even when `mu_total` is zero.
    pub fn from_fractions(mu_total: T, gamma_s: T, gamma_i: T, gamma_both: T) -> Self {
        let gamma_both = gamma_both.min(gamma_s).min(gamma_i);
        let ratio = |num: T, den: T| if den > T::zero() { Some((num / den).min(T::one())) } else { None };
        let delta_s = ratio(gamma_both, gamma_i);
        let delta_i = ratio(gamma_both, gamma_s);
        Self {
            mu_s: mu_total * gamma_s,
            mu_i: mu_total * gamma_i,
            mu_both: mu_total * gamma_both,
            delta_s,
            delta_i,
            delta_ps: delta_s.zip(delta_i).map(|(a, b)| (a * b).sqrt()),
            converged: true,
        }
    }

    /// Triple from directly specified means.
    pub fn from_means(mu_s: T, mu_i: T, mu_both: T) -> Result<Self> {
        if !(mu_s >= T::zero() && mu_i >= T::zero() && mu_both >= T::zero()) {
            return Err(domain("mean photon numbers must be non-negative"));
        }
        if mu_both > mu_s.min(mu_i) {
            return Err(domain(format!("mu_both {mu_both} exceeds min(mu_s, mu_i)")));
        }
        Ok(Self::from_fractions(T::one(), mu_s, mu_i, mu_both))
    }

    /// Triple with μ_s pinned and efficiencies given: μ_both = δ_i·μ_s,
    /// μ_i = μ_both/δ_s.
    pub fn from_signal_mean(mu_s: T, delta_s: T, delta_i: T) -> Result<Self> {
        let in_range = |d: T| d > T::zero() && d <= T::one();
        if !in_range(delta_s) || !in_range(delta_i) {
            return Err(domain("heralding efficiencies must lie in (0, 1]"));
        }
        let mu_both = delta_i * mu_s;
        Self::from_means(mu_s, mu_both / delta_s, mu_both)
    }

    /// Same pass fractions at a different overall brightness.
    pub fn scaled(&self, factor: T) -> Self {
        Self { mu_s: self.mu_s * factor, mu_i: self.mu_i * factor, mu_both: self.mu_both * factor, ..*self }
    }
}

/// μ_j = μ_T∬|f|²T_j and μ_both = μ_T∬|f|²T_sT_i by midpoint quadrature on
/// grids fitted to each filter's passband.
pub fn filtered_means<T: Real>(
    jsa: &JointSpectrum<T>,
    f_s: &FilterSpec<T>,
    f_i: &FilterSpec<T>,
    mu_total: T,
) -> Result<MuTriple<T>> {
    if !(mu_total >= T::zero()) {
        return Err(domain("mu_total must be non-negative"));
    }
    f_s.validate()?;
    f_i.validate()?;
    let n = jsa.config.points;
    let fine = fractions(jsa, f_s, f_i, n)?;
    let coarse = fractions(jsa, f_s, f_i, n / 2)?;
    let tol = jsa.config.convergence_tol;
    let converged = fine.iter().zip(coarse.iter()).all(|(&a, &b)| {
        let scale = a.abs().max(b.abs());
        scale == T::zero() || (a - b).abs() <= tol * scale
    });
    let mut triple = MuTriple::from_fractions(mu_total, fine[0], fine[1], fine[2]);
    triple.converged = converged;
    Ok(triple)
}

fn fractions<T: Real>(jsa: &JointSpectrum<T>, f_s: &FilterSpec<T>, f_i: &FilterSpec<T>, n: usize) -> Result<[T; 3]> {
    let xs = jsa.filter_axis(Photon::Signal, f_s, n)?;
    let ys = jsa.filter_axis(Photon::Idler, f_i, n)?;
    jsa.check_resolution(Photon::Signal, &xs, Some(f_s))?;
    jsa.check_resolution(Photon::Idler, &ys, Some(f_i))?;
    let xs_all = jsa.full_axis(Photon::Signal, n);
    let ys_all = jsa.full_axis(Photon::Idler, n);
    let intensity = |w: Vec<T>| w.into_iter().map(|a| a * a).collect::<Vec<_>>();
    let ws = intensity(jsa.filter_weights(Photon::Signal, f_s, &xs));
    let wi = intensity(jsa.filter_weights(Photon::Idler, f_i, &ys));
    let ones = vec![T::one(); n];
    let m = &jsa.model;
    Ok([m.integrate(&xs, &ys_all, &ws, &ones), m.integrate(&xs_all, &ys, &ones, &wi), m.integrate(&xs, &ys, &ws, &wi)])
}

#[cfg(test)]
mod tests {
    use super::super::{build_jsa, GridConfig, PumpBandwidth, SourceSpec};
    use super::*;

    #[test]
    fn all_pass_gives_total() {
        let s = SourceSpec::new(PumpBandwidth::FwhmTimePs(50.0), 4e10, 2.0, 1e-3);
        let j = build_jsa(&s, &GridConfig::default().with_points(256)).unwrap();
        let m = filtered_means(&j, &FilterSpec::all_pass(), &FilterSpec::all_pass(), 1e-3f64).unwrap();
        assert!((m.mu_s - 1e-3).abs() < 1e-15);
        assert!((m.mu_both - 1e-3).abs() < 1e-15);
        assert_eq!(m.delta_s, Some(1.0));
        assert_eq!(m.delta_i, Some(1.0));
    }

    #[test]
    fn paper_operating_point_efficiencies() {
        let m = MuTriple::<f64>::from_means(1.0e-3, 1.1e-3, 2.5e-4).unwrap();
        assert!((m.delta_s.unwrap() - 0.227).abs() < 1e-3);
        assert!((m.delta_i.unwrap() - 0.25).abs() < 1e-12);
        assert!((m.delta_i.unwrap() - 0.21).abs() / 0.21 < 0.2);
    }

    #[test]
    fn zero_marginal_gives_undefined_efficiency() {
        let m = MuTriple::<f64>::from_fractions(1.0, 0.0, 0.5, 0.0);
        assert_eq!(m.delta_i, None);
        assert_eq!(m.delta_ps, None);
        assert_eq!(m.delta_s, Some(0.0));
    }

    #[test]
    fn signal_pinned_triple() {
        let m = MuTriple::<f64>::from_signal_mean(0.005, 0.5, 0.4).unwrap();
        assert!((m.mu_both - 0.002).abs() < 1e-15);
        assert!((m.mu_i - 0.004).abs() < 1e-15);
        assert!((m.delta_s.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_means_rejected() {
        assert!(MuTriple::<f64>::from_means(1e-3, 1e-3, 2e-3).is_err());
        assert!(MuTriple::<f64>::from_means(-1e-3, 1e-3, 0.0).is_err());
    }
}
