//! Visibility of time-bin and polarization entangled pairs in noisy channels.
//!
//! Time-bin X/Y bases are measured at the middle bin of 1-bit-delay
//! interferometers. The Z basis is measured either at the interferometer side
//! bins or on a separate path reached through a switch or splitter.

use serde::{Deserialize, Serialize};

use crate::detection::ChannelSpec;
use crate::error::{domain, Result};
use crate::optimize::golden_section_max;
use crate::scalar::{lit, Real};
use crate::spectral::MuTriple;
use crate::units::{dbm_to_mw, mw_to_dbm};

/// Visibility needed for QKD.
pub const QKD_THRESHOLD: f64 = 0.78;
/// Visibility needed to violate a CHSH inequality, 1/√2.
pub const NONLOCALITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// Search interval of the pair-generation optimizer.
pub const MU_SEARCH_RANGE: (f64, f64) = (1e-7, 0.1);
/// Relative convergence in visibility of the optimizer.
pub const MU_SEARCH_TOL: f64 = 1e-4;

/// Mean photon numbers per time bin (or per polarization mode), identical in
/// both bins for a maximally entangled state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangledSource<T> {
    pub mu_s: T,
    pub mu_i: T,
    pub mu_both: T,
    /// Interferometer visibility.
    pub v_int: T,
}

impl<T: Real> EntangledSource<T> {
    pub fn new(mu_s: T, mu_i: T, mu_both: T, v_int: T) -> Result<Self> {
        let s = Self { mu_s, mu_i, mu_both, v_int };
        s.validate()?;
        Ok(s)
    }

    pub fn from_triple(mu: &MuTriple<T>, v_int: T) -> Result<Self> {
        Self::new(mu.mu_s, mu.mu_i, mu.mu_both, v_int)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_s >= T::zero() && self.mu_i >= T::zero() && self.mu_both >= T::zero()) {
            return Err(domain("mean photon numbers must be non-negative"));
        }
        if self.mu_both > self.mu_s.min(self.mu_i) {
            return Err(domain("mu_both exceeds min(mu_s, mu_i)"));
        }
        if !(self.v_int >= T::zero() && self.v_int <= T::one()) {
            return Err(domain(format!("v_int must lie in [0, 1], got {}", self.v_int)));
        }
        Ok(())
    }

    /// Brightness knob: max(μ_s, μ_i).
    pub fn mu_total(&self) -> T {
        self.mu_s.max(self.mu_i)
    }

    /// Same pass fractions rescaled so that max(μ_s, μ_i) = `mu_total`.
    pub fn at_mu_total(&self, mu_total: T) -> Self {
        let m = self.mu_total();
        if m == T::zero() {
            return *self;
        }
        let k = mu_total / m;
        Self { mu_s: self.mu_s * k, mu_i: self.mu_i * k, mu_both: self.mu_both * k, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverVariant {
    /// Interferometer outputs for all bases; Z from the side bins.
    TimebinInterferometer,
    /// Interferometer for X/Y, Z on a separate path via a switch.
    TimebinSwitchZ,
    PolarizationAnalyzer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receiver {
    pub variant: ReceiverVariant,
    /// Polarizer in front of a time-bin receiver. A polarization analyzer
    /// always filters polarization.
    pub polarization_filtering: bool,
}

impl Receiver {
    pub fn new(variant: ReceiverVariant, polarization_filtering: bool) -> Self {
        Self { variant, polarization_filtering }
    }

    fn polarizer(&self) -> bool {
        self.polarization_filtering || self.variant == ReceiverVariant::PolarizationAnalyzer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    X,
    Y,
    Z,
}

/// Noise count rate at the detector before any interferometer splitting.
fn arm_noise<T: Real>(ch: &ChannelSpec<T>, polarizer: bool) -> T {
    ch.detected_noise_rate(if polarizer { ch.alpha_pol } else { T::one() })
}

/// Coincidence probability at interferometer phase φ = φ_A + φ_B and the
/// middle-bin singles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fringe<T> {
    pub c: T,
    pub s_s: T,
    pub s_i: T,
}

/// C(φ) = ¼·μ_both·η_s·η_i·(½ + ½·V_int·cos φ) + S_s·S_i with
/// S_j = ½μ_jη_j + (½·n_j + d_j)·ΔT_j.
pub fn timebin_xy<T: Real>(
    phi: T,
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
    polarization_filtering: bool,
) -> Fringe<T> {
    let half = lit::<T>(0.5);
    let single = |mu: T, ch: &ChannelSpec<T>| {
        half * mu * ch.eta() + (half * arm_noise(ch, polarization_filtering) + ch.dark_rate) * ch.delta_t
    };
    let s_s = single(src.mu_s, ch_s);
    let s_i = single(src.mu_i, ch_i);
    let pair = lit::<T>(0.25) * src.mu_both * ch_s.eta() * ch_i.eta() * (half + half * src.v_int * phi.cos());
    Fringe { c: pair + s_s * s_i, s_s, s_i }
}

/// Extremal coincidences in one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCounts<T> {
    pub c_max: T,
    pub c_min: T,
    pub s_s: T,
    pub s_i: T,
    pub visibility: T,
    pub above_qkd: bool,
    pub above_nonlocality: bool,
}

impl<T: Real> BasisCounts<T> {
    fn new(c_max: T, c_min: T, s_s: T, s_i: T) -> Self {
        let sum = c_max + c_min;
        let visibility = if sum > T::zero() { (c_max - c_min) / sum } else { T::zero() };
        Self {
            c_max,
            c_min,
            s_s,
            s_i,
            visibility,
            above_qkd: visibility > lit(QKD_THRESHOLD),
            above_nonlocality: visibility > lit(NONLOCALITY_THRESHOLD),
        }
    }
}

fn xy_counts<T: Real>(
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
    pol: bool,
) -> BasisCounts<T> {
    let hi = timebin_xy(T::zero(), src, ch_s, ch_i, pol);
    let lo = timebin_xy(T::PI(), src, ch_s, ch_i, pol);
    BasisCounts::new(hi.c, lo.c, hi.s_s, hi.s_i)
}

/// Correlated-pair counts with no interferometer: S = μη + (n + d)ΔT,
/// C_max = μ_both·η_s·η_i + S_sS_i, C_min = S_sS_i.
fn direct_counts<T: Real>(
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
    pol: bool,
) -> BasisCounts<T> {
    let single = |mu: T, ch: &ChannelSpec<T>| mu * ch.eta() + (arm_noise(ch, pol) + ch.dark_rate) * ch.delta_t;
    let s_s = single(src.mu_s, ch_s);
    let s_i = single(src.mu_i, ch_i);
    let acc = s_s * s_i;
    BasisCounts::new(src.mu_both * ch_s.eta() * ch_i.eta() + acc, acc, s_s, s_i)
}

/// Z-basis counts of a time-bin receiver.
pub fn timebin_z<T: Real>(
    receiver: &Receiver,
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
) -> Result<BasisCounts<T>> {
    let pol = receiver.polarization_filtering;
    match receiver.variant {
        ReceiverVariant::TimebinInterferometer => {
            // side bins: S = ¼μη + (½n + d)ΔT, C_max = μ_bηη/16 + SS
            let q = lit::<T>(0.25);
            let half = lit::<T>(0.5);
            let single = |mu: T, ch: &ChannelSpec<T>| {
                q * mu * ch.eta() + (half * arm_noise(ch, pol) + ch.dark_rate) * ch.delta_t
            };
            let s_s = single(src.mu_s, ch_s);
            let s_i = single(src.mu_i, ch_i);
            let acc = s_s * s_i;
            Ok(BasisCounts::new(src.mu_both * ch_s.eta() * ch_i.eta() / lit(16.0) + acc, acc, s_s, s_i))
        }
        ReceiverVariant::TimebinSwitchZ => Ok(direct_counts(src, ch_s, ch_i, pol)),
        ReceiverVariant::PolarizationAnalyzer => Err(domain("polarization analyzer has no time-bin Z basis")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport<T> {
    pub v_x: T,
    pub v_y: T,
    pub v_z: T,
    pub x: BasisCounts<T>,
    pub z: BasisCounts<T>,
    /// All bases above the QKD threshold.
    pub qkd: bool,
    /// All bases above the nonlocality threshold.
    pub nonlocal: bool,
}

impl<T: Real> VisibilityReport<T> {
    fn new(x: BasisCounts<T>, z: BasisCounts<T>) -> Self {
        Self {
            v_x: x.visibility,
            v_y: x.visibility,
            v_z: z.visibility,
            qkd: x.above_qkd && z.above_qkd,
            nonlocal: x.above_nonlocality && z.above_nonlocality,
            x,
            z,
        }
    }

    pub fn basis(&self, b: Basis) -> T {
        match b {
            Basis::X => self.v_x,
            Basis::Y => self.v_y,
            Basis::Z => self.v_z,
        }
    }
}

/// Polarization-entangled pairs through a polarization analyzer, which
/// passes α_pol of unpolarized noise: S = μη + (α_pol·n + d)ΔT.
pub fn polarization_visibility<T: Real>(
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
) -> VisibilityReport<T> {
    let b = direct_counts(src, ch_s, ch_i, true);
    VisibilityReport::new(b, b)
}

/// Visibilities of every basis for a receiver.
pub fn visibility<T: Real>(
    receiver: &Receiver,
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
) -> Result<VisibilityReport<T>> {
    src.validate()?;
    ch_s.validate()?;
    ch_i.validate()?;
    if receiver.variant == ReceiverVariant::PolarizationAnalyzer {
        return Ok(polarization_visibility(src, ch_s, ch_i));
    }
    let x = xy_counts(src, ch_s, ch_i, receiver.polarizer());
    let z = timebin_z(receiver, src, ch_s, ch_i)?;
    Ok(VisibilityReport::new(x, z))
}

/// Rescales the pair rate of `src` (max(μ_s, μ_i) searched over
/// [`MU_SEARCH_RANGE`] in log space) to maximize the `basis` visibility.
/// The flag is false when the golden-section search did not converge.
pub fn optimize_source<T: Real>(
    receiver: &Receiver,
    src: &EntangledSource<T>,
    ch_s: &ChannelSpec<T>,
    ch_i: &ChannelSpec<T>,
    basis: Basis,
) -> (EntangledSource<T>, bool) {
    let eval = |ln_mu: T| {
        let s = src.at_mu_total(ln_mu.exp());
        visibility(receiver, &s, ch_s, ch_i).map(|r| r.basis(basis)).unwrap_or(T::zero())
    };
    let (lo, hi) = MU_SEARCH_RANGE;
    let r = golden_section_max(eval, lit::<T>(lo).ln(), lit::<T>(hi).ln(), lit(1e-6), lit(MU_SEARCH_TOL), 200);
    (src.at_mu_total(r.x.exp()), r.converged)
}

/// Source, channels and receiver for a launched-power sweep. The channels
/// carry `noise_per_mw`; their launch power is overwritten at each point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScenario<T> {
    pub source: EntangledSource<T>,
    pub ch_s: ChannelSpec<T>,
    pub ch_i: ChannelSpec<T>,
    pub receiver: Receiver,
}

impl<T: Real> PowerScenario<T> {
    fn at_power(&self, mw: T) -> (ChannelSpec<T>, ChannelSpec<T>) {
        (self.ch_s.with_launch_power_mw(mw), self.ch_i.with_launch_power_mw(mw))
    }

    /// Visibilities at launched power `mw`, optionally with the pair
    /// generation rate chosen to maximize the `objective` basis.
    pub fn evaluate(&self, mw: T, optimize_mu: Option<Basis>) -> Result<PowerPoint<T>> {
        let (ch_s, ch_i) = self.at_power(mw);
        let (source, converged) = match optimize_mu {
            None => (self.source, true),
            Some(basis) => optimize_source(&self.receiver, &self.source, &ch_s, &ch_i, basis),
        };
        let report = visibility(&self.receiver, &source, &ch_s, &ch_i)?;
        Ok(PowerPoint { power_mw: mw, power_dbm: mw_to_dbm(mw), mu_total: source.mu_total(), converged, report })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint<T> {
    pub power_mw: T,
    /// −∞ at zero power.
    pub power_dbm: T,
    pub mu_total: T,
    /// False when the pair-rate optimizer did not converge.
    pub converged: bool,
    pub report: VisibilityReport<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing<T> {
    pub basis: Basis,
    pub threshold: T,
    /// Launched power (dBm) where the visibility falls through the threshold,
    /// linearly interpolated in dBm; `None` if it never does on the grid.
    pub power_dbm: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve<T> {
    pub points: Vec<PowerPoint<T>>,
    pub crossings: Vec<Crossing<T>>,
}

/// Visibility versus launched classical power (mW, increasing).
pub fn visibility_vs_power<T: Real>(
    scenario: &PowerScenario<T>,
    powers_mw: &[T],
    optimize_mu: Option<Basis>,
) -> Result<PowerCurve<T>> {
    if powers_mw.is_empty() {
        return Err(domain("power grid is empty"));
    }
    if powers_mw.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
        return Err(domain("powers must be finite and non-negative"));
    }
    if powers_mw.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("power grid must be strictly increasing"));
    }
    let points = powers_mw.iter().map(|&p| scenario.evaluate(p, optimize_mu)).collect::<Result<Vec<_>>>()?;
    let mut crossings = Vec::new();
    for basis in [Basis::X, Basis::Z] {
        for th in [QKD_THRESHOLD, NONLOCALITY_THRESHOLD] {
            let th = lit::<T>(th);
            let power_dbm = points.windows(2).find_map(|w| {
                let (v0, v1) = (w[0].report.basis(basis), w[1].report.basis(basis));
                if v0 >= th && v1 < th {
                    let (p0, p1) = (w[0].power_dbm, w[1].power_dbm);
                    if !p0.is_finite() {
                        return Some(p1);
                    }
                    Some(p0 + (v0 - th) * (p1 - p0) / (v0 - v1))
                } else {
                    None
                }
            });
            crossings.push(Crossing { basis, threshold: th, power_dbm });
        }
    }
    Ok(PowerCurve { points, crossings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPower<T> {
    /// Below threshold already at the low end of the range.
    NeverReached,
    /// Crossing launched power in dBm.
    Crossing(T),
    /// Above threshold over the whole range.
    AboveRange,
}

/// Largest launched power (dBm) keeping `basis` visibility above `threshold`,
/// by bisection in dBm on [lo_dbm, hi_dbm].
pub fn max_tolerable_power<T: Real>(
    scenario: &PowerScenario<T>,
    threshold: T,
    basis: Basis,
    optimize_mu: bool,
    lo_dbm: T,
    hi_dbm: T,
) -> Result<ThresholdPower<T>> {
    if !(hi_dbm > lo_dbm) {
        return Err(domain("power range must be increasing"));
    }
    let objective = optimize_mu.then_some(basis);
    let v = |dbm: T| scenario.evaluate(dbm_to_mw(dbm), objective).map(|p| p.report.basis(basis));
    if v(lo_dbm)? < threshold {
        return Ok(ThresholdPower::NeverReached);
    }
    if v(hi_dbm)? >= threshold {
        return Ok(ThresholdPower::AboveRange);
    }
    let (mut lo, mut hi) = (lo_dbm, hi_dbm);
    for _ in 0..60 {
        let mid = (lo + hi) / lit(2.0);
        if v(mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < lit(1e-6) {
            break;
        }
    }
    Ok(ThresholdPower::Crossing((lo + hi) / lit(2.0)))
}
