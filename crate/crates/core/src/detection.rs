//! Singles, coincidences, accidentals and CAR for filtered pairs in a noisy
//! channel, in the low-gain (single-pair-dominated) regime.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{lit, Real};
use crate::spectral::MuTriple;
use crate::units::{dbm_to_mw, loss_db_to_transmission};

/// Probabilities above this value put the low-gain model out of range.
pub const LOW_GAIN_LIMIT: f64 = 0.1;

/// A ratio that may diverge (for example CAR with no accidentals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio<T> {
    Finite(T),
    Unbounded,
}

impl<T: Real> Ratio<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Unbounded => None,
        }
    }

    /// Finite value or +∞.
    pub fn value(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    fn of(num: T, den: T) -> Self {
        if den > T::zero() {
            Ratio::Finite(num / den)
        } else {
            Ratio::Unbounded
        }
    }
}

/// Where a noise rate is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseReference {
    /// Incident on the receiver; η_r and α_pol still apply.
    #[default]
    FiberOutput,
    /// Already as counted by the detector, receiver factors folded in.
    AtDetector,
}

/// One arm from source to detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec<T> {
    pub eta_c: T,
    pub eta_ch: T,
    pub eta_r: T,
    /// Source-to-polarizer misalignment, rad.
    pub theta_pol: T,
    /// Fraction of noise passing the polarizer (1/2 for unpolarized noise).
    pub alpha_pol: T,
    /// Noise spectral density, counts/(pm·s).
    pub noise_density: T,
    /// Noise rate per mW of launched classical power inside the passband,
    /// counts/(s·mW).
    pub noise_per_mw: T,
    pub launch_power_mw: T,
    /// Classical span loss, only used to report received power.
    pub span_loss_db: Option<T>,
    pub reference: NoiseReference,
    /// Detector dark count rate, counts/s.
    pub dark_rate: T,
    /// Coincidence window ΔT, s.
    pub delta_t: T,
    /// Filter FWHM Δλ, pm.
    pub delta_lambda_pm: T,
}

impl<T: Real> Default for ChannelSpec<T> {
    fn default() -> Self {
        Self {
            eta_c: T::one(),
            eta_ch: T::one(),
            eta_r: T::one(),
            theta_pol: T::zero(),
            alpha_pol: lit(0.5),
            noise_density: T::zero(),
            noise_per_mw: T::zero(),
            launch_power_mw: T::zero(),
            span_loss_db: None,
            reference: NoiseReference::FiberOutput,
            dark_rate: T::zero(),
            delta_t: lit(300e-12),
            delta_lambda_pm: lit(50.0),
        }
    }
}

impl<T: Real> ChannelSpec<T> {
    /// Channel with total efficiency `eta` lumped into the receiver and an
    /// at-detector noise density.
    pub fn effective(eta: T, noise_density: T, delta_lambda_pm: T, delta_t: T) -> Self {
        Self {
            eta_r: eta,
            noise_density,
            delta_lambda_pm,
            delta_t,
            reference: NoiseReference::AtDetector,
            ..Self::default()
        }
    }

    pub fn with_launch_power_dbm(mut self, dbm: T) -> Self {
        self.launch_power_mw = dbm_to_mw(dbm);
        self
    }

    pub fn with_launch_power_mw(mut self, mw: T) -> Self {
        self.launch_power_mw = mw;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v >= T::zero() && v <= T::one();
        for (name, v) in
            [("eta_c", self.eta_c), ("eta_ch", self.eta_ch), ("eta_r", self.eta_r), ("alpha_pol", self.alpha_pol)]
        {
            if !unit(v) {
                return Err(domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("noise_density", self.noise_density),
            ("noise_per_mw", self.noise_per_mw),
            ("launch_power_mw", self.launch_power_mw),
            ("dark_rate", self.dark_rate),
            ("delta_t", self.delta_t),
            ("delta_lambda_pm", self.delta_lambda_pm),
        ] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(domain(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        if !self.theta_pol.is_finite() {
            return Err(domain("theta_pol must be finite"));
        }
        Ok(())
    }

    /// η = η_c·η_ch·η_r·cos²θ_pol.
    pub fn eta(&self) -> T {
        let c = self.theta_pol.cos();
        self.eta_c * self.eta_ch * self.eta_r * c * c
    }

    /// Noise rate at the reference plane within the passband, counts/s.
    pub fn noise_rate(&self) -> T {
        self.noise_density * self.delta_lambda_pm + self.noise_per_mw * self.launch_power_mw
    }

    /// Noise count rate at the detector with polarizer pass fraction `alpha`.
    pub fn detected_noise_rate(&self, alpha: T) -> T {
        match self.reference {
            NoiseReference::FiberOutput => self.eta_r * alpha * self.noise_rate(),
            NoiseReference::AtDetector => self.noise_rate(),
        }
    }

    /// Background count probability per gate, D = (η_r·α_pol·R·Δλ + d)·ΔT.
    pub fn noise_probability(&self) -> T {
        (self.detected_noise_rate(self.alpha_pol) + self.dark_rate) * self.delta_t
    }

    /// Classical power reaching the receiver, mW.
    pub fn received_power_mw(&self) -> Option<T> {
        self.span_loss_db.map(|l| self.launch_power_mw * loss_db_to_transmission(l))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget<T> {
    pub d_s: T,
    pub d_i: T,
}

pub fn noise_budget<T: Real>(ch_s: &ChannelSpec<T>, ch_i: &ChannelSpec<T>) -> NoiseBudget<T> {
    NoiseBudget { d_s: ch_s.noise_probability(), d_i: ch_i.noise_probability() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport<T> {
    pub s_s: T,
    pub s_i: T,
    pub c: T,
    pub a: T,
    pub car: Ratio<T>,
    pub snr_s: Ratio<T>,
    pub snr_i: Ratio<T>,
    /// Set when any probability exceeds [`LOW_GAIN_LIMIT`].
    pub low_gain_warning: bool,
    pub mu: MuTriple<T>,
}

/// S_j = μ_j·η_j + D_j.
pub fn singles<T: Real>(mu_j: T, channel: &ChannelSpec<T>) -> T {
    mu_j * channel.eta() + channel.noise_probability()
}

/// C = μ_both·η_s·η_i + S_s·S_i, A = S_s·S_i.
pub fn coincidences<T: Real>(mu: &MuTriple<T>, ch_s: &ChannelSpec<T>, ch_i: &ChannelSpec<T>) -> Result<RateReport<T>> {
    ch_s.validate()?;
    ch_i.validate()?;
    if !(mu.mu_s >= T::zero() && mu.mu_i >= T::zero() && mu.mu_both >= T::zero()) {
        return Err(domain("mean photon numbers must be non-negative"));
    }
    let s_s = singles(mu.mu_s, ch_s);
    let s_i = singles(mu.mu_i, ch_i);
    let a = s_s * s_i;
    let c = mu.mu_both * ch_s.eta() * ch_i.eta() + a;
    let snr =
        |mu_j: T, ch: &ChannelSpec<T>| Ratio::of(mu_j * ch.eta(), ch.detected_noise_rate(ch.alpha_pol) * ch.delta_t);
    let limit = lit::<T>(LOW_GAIN_LIMIT);
    let low_gain_warning = [s_s, s_i, c, mu.mu_s, mu.mu_i].iter().any(|&p| p > limit);
    Ok(RateReport {
        s_s,
        s_i,
        c,
        a,
        car: Ratio::of(c, a),
        snr_s: snr(mu.mu_s, ch_s),
        snr_i: snr(mu.mu_i, ch_i),
        low_gain_warning,
        mu: *mu,
    })
}

fn check_delta<T: Real>(d: T) -> Result<()> {
    if d > T::zero() && d <= T::one() {
        Ok(())
    } else {
        Err(domain(format!("heralding efficiency must lie in (0, 1], got {d}")))
    }
}

/// CAR as a function of μ_both with μ_s = μ_both/δ_i and μ_i = μ_both/δ_s:
/// CAR = μ_both·η_s·η_i / ((μ_both·η_s/δ_i + D_s)(μ_both·η_i/δ_s + D_i)) + 1.
pub fn car_noisy<T: Real>(mu_both: T, delta_s: T, delta_i: T, eta_s: T, eta_i: T, d_s: T, d_i: T) -> Result<Ratio<T>> {
    check_delta(delta_s)?;
    check_delta(delta_i)?;
    for v in [mu_both, eta_s, eta_i, d_s, d_i] {
        if !(v >= T::zero()) {
            return Err(domain(format!("car_noisy arguments must be non-negative, got {v}")));
        }
    }
    let den = (mu_both * eta_s / delta_i + d_s) * (mu_both * eta_i / delta_s + d_i);
    Ok(match Ratio::of(mu_both * eta_s * eta_i, den) {
        Ratio::Finite(v) => Ratio::Finite(v + T::one()),
        r => r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarOptimum<T> {
    /// μ_both maximizing CAR, δ_PS·√(D_sD_i/(η_sη_i)).
    pub mu_both_opt: Ratio<T>,
    pub car_max: Ratio<T>,
    /// Equal-efficiency optimum of μ_s = μ_i, √(D_sD_i/(η_sη_i)).
    pub mu_si_opt: Ratio<T>,
}

/// Closed-form CAR optimum:
/// CAR_max = 1 + η_sη_i / (√(η_sD_i/δ_i) + √(η_iD_s/δ_s))².
/// With no noise in either arm the optimum is reported unbounded.
pub fn mu_opt_and_car_max<T: Real>(
    delta_s: T,
    delta_i: T,
    eta_s: T,
    eta_i: T,
    d_s: T,
    d_i: T,
) -> Result<CarOptimum<T>> {
    check_delta(delta_s)?;
    check_delta(delta_i)?;
    if !(eta_s > T::zero() && eta_i > T::zero()) {
        return Err(domain("efficiencies must be positive"));
    }
    if !(d_s >= T::zero() && d_i >= T::zero()) {
        return Err(domain("noise probabilities must be non-negative"));
    }
    if d_s == T::zero() && d_i == T::zero() {
        return Ok(CarOptimum {
            mu_both_opt: Ratio::Unbounded,
            car_max: Ratio::Unbounded,
            mu_si_opt: Ratio::Unbounded,
        });
    }
    let base = (d_s * d_i / (eta_s * eta_i)).sqrt();
    let root = (eta_s * d_i / delta_i).sqrt() + (eta_i * d_s / delta_s).sqrt();
    Ok(CarOptimum {
        mu_both_opt: Ratio::Finite((delta_s * delta_i).sqrt() * base),
        car_max: Ratio::Finite(T::one() + eta_s * eta_i / (root * root)),
        mu_si_opt: Ratio::Finite(base),
    })
}

/// Inverts the noise-free relation CAR_dark = δ_sδ_i/μ_both + 1. Returns
/// (μ_both, μ_si) where μ_si = δ_PS/(CAR_dark − 1) is the equal-efficiency
/// single-arm mean.
pub fn mu_from_car_dark<T: Real>(car_dark: T, delta_s: T, delta_i: T) -> Result<(T, T)> {
    if !(car_dark > T::one()) || !car_dark.is_finite() {
        return Err(domain(format!("noise-free CAR must exceed 1, got {car_dark}")));
    }
    check_delta(delta_s)?;
    check_delta(delta_i)?;
    let excess = car_dark - T::one();
    Ok((delta_s * delta_i / excess, (delta_s * delta_i).sqrt() / excess))
}

/// Thermal photon-number distribution μ^m/(1+μ)^(m+1).
pub fn thermal_pn<T: Real>(mu: T, m: u32) -> T {
    if mu == T::zero() {
        return if m == 0 { T::one() } else { T::zero() };
    }
    let m_t = lit::<T>(m as f64);
    (m_t * mu.ln() - (m_t + T::one()) * mu.ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_channel_has_no_singles() {
        let ch = ChannelSpec::<f64>::default();
        assert_eq!(singles(0.0, &ch), 0.0);
    }

    #[test]
    fn effective_noise_term() {
        let ch = ChannelSpec::<f64>::effective(0.1, 1477.4, 50.0, 300e-12);
        assert!((ch.noise_probability() - 1477.4 * 50.0 * 3e-10).abs() < 1e-18);
        assert!((ch.noise_probability() - 2.22e-5).abs() < 1e-7);
    }

    #[test]
    fn noise_power_mode_is_linear() {
        let ch = ChannelSpec::<f64> {
            noise_per_mw: 145793.8,
            reference: NoiseReference::AtDetector,
            ..ChannelSpec::default()
        };
        let one = ch.with_launch_power_mw(1.0).noise_rate();
        let two = ch.with_launch_power_mw(2.0).noise_rate();
        assert!((one - 145793.8).abs() < 1e-9);
        assert!((two - 2.0 * one).abs() < 1e-9);
    }

    #[test]
    fn fiber_output_noise_applies_receiver_factors() {
        let ch = ChannelSpec::<f64> {
            eta_r: 0.5,
            alpha_pol: 0.5,
            noise_density: 100.0,
            delta_lambda_pm: 10.0,
            delta_t: 1e-9,
            dark_rate: 1000.0,
            ..ChannelSpec::default()
        };
        assert!((ch.noise_probability() - (0.25 * 1000.0 + 1000.0) * 1e-9).abs() < 1e-18);
    }

    #[test]
    fn eta_decomposition() {
        let ch = ChannelSpec::<f64> { eta_c: 0.5, eta_ch: 0.4, eta_r: 0.3, theta_pol: 0.3, ..ChannelSpec::default() };
        assert!((ch.eta() - 0.06 * 0.3f64.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn noise_free_ideal_car() {
        let mu = MuTriple::<f64>::from_means(0.01, 0.01, 0.01).unwrap();
        let ch = ChannelSpec::<f64>::effective(0.2, 0.0, 50.0, 3e-10);
        let r = coincidences(&mu, &ch, &ch).unwrap();
        assert!((r.car.value() - 101.0).abs() < 1e-9);
    }

    #[test]
    fn noise_free_car_at_operating_point() {
        let mu = MuTriple::<f64>::from_means(1.0e-3, 1.1e-3, 2.5e-4).unwrap();
        let ch = ChannelSpec::<f64>::effective(0.1, 0.0, 50.0, 3e-10);
        let r = coincidences(&mu, &ch, &ch).unwrap();
        assert!((r.car.value() - (2.5e-4 / 1.1e-6 + 1.0)).abs() < 1e-9);
        assert!((r.car.value() - 228.27).abs() < 0.01);
    }

    #[test]
    fn zero_accidentals_unbounded() {
        let mu = MuTriple::<f64>::from_means(0.0, 0.0, 0.0).unwrap();
        let ch = ChannelSpec::<f64>::effective(0.1, 0.0, 50.0, 3e-10);
        let r = coincidences(&mu, &ch, &ch).unwrap();
        assert_eq!(r.car, Ratio::Unbounded);
        assert_eq!(r.snr_s, Ratio::Unbounded);
    }

    #[test]
    fn low_gain_flag() {
        let mu = MuTriple::<f64>::from_means(0.5, 0.5, 0.5).unwrap();
        let ch = ChannelSpec::<f64>::effective(1.0, 0.0, 50.0, 3e-10);
        assert!(coincidences(&mu, &ch, &ch).unwrap().low_gain_warning);
    }

    #[test]
    fn car_limits() {
        let c0 = car_noisy::<f64>(1e-12, 0.5, 0.6, 0.1, 0.1, 1e-4, 1e-4).unwrap().value();
        assert!((c0 - 1.0).abs() < 1e-6);
        let cinf = car_noisy::<f64>(1e6, 0.5, 0.6, 0.1, 0.1, 1e-4, 1e-4).unwrap().value();
        assert!((cinf - 1.0).abs() < 1e-5);
        assert!(car_noisy::<f64>(1e-3, 0.0, 0.6, 0.1, 0.1, 1e-4, 1e-4).is_err());
    }

    #[test]
    fn optimum_matches_car_at_optimum() {
        let (ds, di, es, ei, dns, dni) = (0.3, 0.7, 0.05, 0.08, 2e-5, 7e-5);
        let o = mu_opt_and_car_max::<f64>(ds, di, es, ei, dns, dni).unwrap();
        let c = car_noisy::<f64>(o.mu_both_opt.value(), ds, di, es, ei, dns, dni).unwrap().value();
        assert!((c - o.car_max.value()).abs() / c < 1e-12);
    }

    #[test]
    fn standard_optimum_when_lossless_filters() {
        let o = mu_opt_and_car_max::<f64>(1.0, 1.0, 0.1, 0.1, 1e-4, 1e-4).unwrap();
        assert!((o.mu_both_opt.value() - 1e-3).abs() < 1e-15);
        let o2 = mu_opt_and_car_max::<f64>(0.2, 0.2, 0.1, 0.1, 1e-4, 1e-4).unwrap();
        assert!((o2.mu_both_opt.value() - 2e-4).abs() < 1e-15);
        assert!((o2.mu_si_opt.value() - o.mu_si_opt.value()).abs() < 1e-18);
    }

    #[test]
    fn zero_noise_optimum_unbounded() {
        let o = mu_opt_and_car_max::<f64>(0.5, 0.5, 0.1, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(o.mu_both_opt, Ratio::Unbounded);
        assert_eq!(o.car_max, Ratio::Unbounded);
    }

    #[test]
    fn car_dark_inversion() {
        let (mb, _) = mu_from_car_dark::<f64>(101.0, 1.0, 1.0).unwrap();
        assert!((mb - 0.01).abs() < 1e-15);
        let (_, msi) = mu_from_car_dark::<f64>(49.0, 0.2, 0.2).unwrap();
        assert!((msi - 0.2 / 48.0).abs() < 1e-15);
        assert!(mu_from_car_dark::<f64>(1.0, 0.5, 0.5).is_err());
        assert!(mu_from_car_dark::<f64>(0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn thermal_distribution() {
        assert!((thermal_pn(0.3, 0) - 1.0 / 1.3f64).abs() < 1e-15);
        let total: f64 = (0..200).map(|m| thermal_pn(0.3, m)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // low gain: thermal single-pair probability and two-pair bunching ratio
        // stay within 0.2% of their Poisson counterparts
        let mu = 1e-3f64;
        let poisson = |m: i32| (-mu).exp() * mu.powi(m) / (1..=m).product::<i32>().max(1) as f64;
        assert!(((thermal_pn(mu, 1) - poisson(1)) / poisson(1)).abs() < 2e-3);
        let th_ratio = thermal_pn(mu, 2) / thermal_pn(mu, 1).powi(2);
        let po_ratio = 2.0 * poisson(2) / poisson(1).powi(2);
        assert!((th_ratio / po_ratio - 1.0).abs() < 2e-3);
        assert_eq!(thermal_pn(0.0, 0), 1.0);
        assert_eq!(thermal_pn(0.0, 3), 0.0);
    }
}
