use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{FilterSpec, SourceSpec};
use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};
use crate::units::SPEED_OF_LIGHT;

/// Width-matching constant of the sinc to Gaussian substitution
/// sinc(z) ≈ exp(−α² z²).
pub const GAUSSIAN_PM_ALPHA: f64 = 0.193;

/// Phase-matching function used in the joint amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMatching {
    /// sinc(v/(2σ_pm)), v = ω_s sinθ + ω_i cosθ.
    #[default]
    Sinc,
    /// exp(−α²v²/(4σ_pm²)), the form the closed-form coefficients describe.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig<T> {
    /// Points per axis.
    pub points: usize,
    /// Half-width of each axis in units of the marginal standard deviation.
    pub truncation: T,
    /// Minimum number of grid points across the narrowest feature.
    pub min_points_per_feature: T,
    /// Relative tolerance of the half-resolution convergence check.
    pub convergence_tol: T,
    pub phase_matching: PhaseMatching,
}

impl<T: Real> Default for GridConfig<T> {
    fn default() -> Self {
        Self {
            points: 512,
            truncation: lit(5.0),
            min_points_per_feature: T::one(),
            convergence_tol: lit(1e-4),
            phase_matching: PhaseMatching::Sinc,
        }
    }
}

impl<T: Real> GridConfig<T> {
    pub fn gaussian() -> Self {
        Self { phase_matching: PhaseMatching::Gaussian, ..Self::default() }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.points < 8 {
            return Err(domain(format!("grid needs at least 8 points per axis, got {}", self.points)));
        }
        if !(self.truncation > T::zero()) {
            return Err(domain("truncation multiple must be positive"));
        }
        Ok(())
    }
}

/// Uniform midpoint grid on [lo, lo + n·step].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub step: T,
    pub n: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(lo: T, hi: T, n: usize) -> Self {
        Self { lo, step: (hi - lo) / lit(n as f64), n }
    }

    #[inline]
    pub fn at(&self, k: usize) -> T {
        self.lo + (lit::<T>(k as f64) + lit(0.5)) * self.step
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.n).map(|k| self.at(k)).collect()
    }

    pub fn hi(&self) -> T {
        self.lo + self.step * lit(self.n as f64)
    }

    pub fn with_points(&self, n: usize) -> Self {
        Self::new(self.lo, self.hi(), n)
    }
}

/// Which photon an axis belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Photon {
    Signal,
    Idler,
}

/// Analytic amplitude evaluated anywhere in the detuning plane.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Model<T> {
    pub sp: T,
    pub pm_sigma: T,
    pub sin: T,
    pub cos: T,
    pub pm: PhaseMatching,
    /// Overall factor: analytic normalization times 1/√(grid norm).
    pub scale: T,
    pub half_s: T,
    pub half_i: T,
}

impl<T: Real> Model<T> {
    fn new(source: &SourceSpec<T>, pm: PhaseMatching, truncation: T) -> Result<Self> {
        source.validate()?;
        let sp = source.jsa_pump_sigma()?;
        let (sin, cos) = source.pm_angle.sin_cos();
        let alpha = lit::<T>(GAUSSIAN_PM_ALPHA);
        let skew = (cos - sin).abs();
        // a0·b0 − c² = α²(cosθ − sinθ)²/(σ_pm² σ_p²)
        if skew < lit(1e-9) {
            return Err(Error::Degenerate(
                "phase-matching ridge parallel to the pump ridge (theta = pi/4): joint spectrum is not normalizable"
                    .into(),
            ));
        }
        let q = alpha / source.pm_sigma;
        let a0 = q * q * sin * sin + T::one() / (sp * sp);
        let b0 = q * q * cos * cos + T::one() / (sp * sp);
        let c = q * q * sin * cos + T::one() / (sp * sp);
        let det = a0 * b0 - c * c;
        if !(det > T::zero()) {
            return Err(Error::Degenerate("unfiltered joint spectrum is not normalizable".into()));
        }
        let sx = (b0 / det).sqrt();
        let sy = (a0 / det).sqrt();
        let i_pm = match pm {
            PhaseMatching::Sinc => T::TAU() * source.pm_sigma,
            PhaseMatching::Gaussian => T::TAU().sqrt() * source.pm_sigma / alpha,
        };
        let norm2 = sp * T::TAU().sqrt() * i_pm / skew;
        Ok(Self {
            sp,
            pm_sigma: source.pm_sigma,
            sin,
            cos,
            pm,
            scale: T::one() / norm2.sqrt(),
            half_s: truncation * sx,
            half_i: truncation * sy,
        })
    }

    #[inline]
    pub fn amplitude(&self, x: T, y: T) -> T {
        let u = x + y;
        let v = x * self.sin + y * self.cos;
        let four = lit::<T>(4.0);
        match self.pm {
            PhaseMatching::Gaussian => {
                let a = lit::<T>(GAUSSIAN_PM_ALPHA);
                let e = u * u / (four * self.sp * self.sp) + a * a * v * v / (four * self.pm_sigma * self.pm_sigma);
                self.scale * (-e).exp()
            }
            PhaseMatching::Sinc => {
                let z = v / (lit::<T>(2.0) * self.pm_sigma);
                let sinc = if z.abs() < lit(1e-8) { T::one() } else { z.sin() / z };
                self.scale * (-(u * u) / (four * self.sp * self.sp)).exp() * sinc
            }
        }
    }

    /// Narrowest amplitude features along one axis.
    fn features(&self, photon: Photon) -> Vec<T> {
        let mut out = vec![self.sp];
        let proj = match photon {
            Photon::Signal => self.sin.abs(),
            Photon::Idler => self.cos.abs(),
        };
        if proj > lit(1e-12) {
            let w = match self.pm {
                PhaseMatching::Gaussian => self.pm_sigma / (lit::<T>(GAUSSIAN_PM_ALPHA) * proj),
                PhaseMatching::Sinc => lit::<T>(2.0) * self.pm_sigma / proj,
            };
            out.push(w);
        }
        out
    }

    pub fn half_span(&self, photon: Photon) -> T {
        match photon {
            Photon::Signal => self.half_s,
            Photon::Idler => self.half_i,
        }
    }

    /// Sum of |f|²·w_x·w_y·dx·dy over the grid.
    pub fn integrate(&self, xs: &Axis<T>, ys: &Axis<T>, wx: &[T], wy: &[T]) -> T {
        let yv = ys.values();
        let mut total = T::zero();
        for (k, &w) in wx.iter().enumerate().take(xs.n) {
            if w == T::zero() {
                continue;
            }
            let x = xs.at(k);
            let mut row = T::zero();
            for (j, &y) in yv.iter().enumerate() {
                let f = self.amplitude(x, y);
                row = row + f * f * wy[j];
            }
            total = total + row * w;
        }
        total * xs.step * ys.step
    }
}

/// Discretized joint spectral amplitude on a uniform detuning grid.
#[derive(Debug, Clone)]
pub struct JointSpectrum<T> {
    /// Signal detuning axis, rad/s (rows of `amplitude`).
    pub grid_s: Vec<T>,
    /// Idler detuning axis, rad/s (columns of `amplitude`).
    pub grid_i: Vec<T>,
    /// Row-major f(ω_s, ω_i), normalized so that Σ|f|²·cell_area = 1.
    pub amplitude: Vec<T>,
    pub cell_area: T,
    /// ∬|f|² on the grid before the numerical renormalization.
    pub norm_check: T,
    pub center_s: T,
    pub center_i: T,
    pub config: GridConfig<T>,
    pub(crate) model: Model<T>,
}

impl<T: Real> JointSpectrum<T> {
    #[inline]
    pub fn at(&self, k_s: usize, k_i: usize) -> T {
        self.amplitude[k_s * self.grid_i.len() + k_i]
    }

    /// Evaluates the normalized amplitude at arbitrary detunings.
    pub fn evaluate(&self, x: T, y: T) -> T {
        self.model.amplitude(x, y)
    }

    pub fn phase_matching(&self) -> PhaseMatching {
        self.model.pm
    }

    /// Discrete ∬|f|² on the stored grid.
    pub fn norm(&self) -> T {
        self.amplitude.iter().map(|&f| f * f).sum::<T>() * self.cell_area
    }

    fn center(&self, photon: Photon) -> T {
        match photon {
            Photon::Signal => self.center_s,
            Photon::Idler => self.center_i,
        }
    }

    pub(crate) fn full_axis(&self, photon: Photon, n: usize) -> Axis<T> {
        let h = self.model.half_span(photon);
        Axis::new(-h, h, n)
    }

    /// Axis covering the intersection of the JSA span with the filter support.
    pub(crate) fn filter_axis(&self, photon: Photon, filter: &FilterSpec<T>, n: usize) -> Result<Axis<T>> {
        let h = self.model.half_span(photon);
        let Some((lo, hi)) = filter.support(self.config.truncation) else {
            return Ok(Axis::new(-h, h, n));
        };
        let offset = filter.center - self.center(photon);
        let lo = (offset + lo).max(-h);
        let hi = (offset + hi).min(h);
        if !(hi > lo) {
            return Err(Error::Coverage(format!(
                "{photon:?} filter centered {offset} rad/s from the source lies outside the +/-{h} rad/s spectral support"
            )));
        }
        Ok(Axis::new(lo, hi, n))
    }

    /// Amplitude weights √T of `filter` on `axis`.
    pub(crate) fn filter_weights(&self, photon: Photon, filter: &FilterSpec<T>, axis: &Axis<T>) -> Vec<T> {
        let offset = filter.center - self.center(photon);
        (0..axis.n).map(|k| filter.amplitude_at(axis.at(k) - offset)).collect()
    }

    pub(crate) fn check_resolution(
        &self,
        photon: Photon,
        axis: &Axis<T>,
        filter: Option<&FilterSpec<T>>,
    ) -> Result<()> {
        let mut features = self.model.features(photon);
        if let Some(w) = filter.and_then(FilterSpec::feature_width) {
            features.push(w);
        }
        let narrowest = features.into_iter().fold(T::infinity(), T::min);
        let per_feature = narrowest / axis.step;
        if per_feature < self.config.min_points_per_feature {
            return Err(Error::Resolution(format!(
                "{photon:?} axis step {} rad/s gives {per_feature} points across a {narrowest} rad/s feature (minimum {})",
                axis.step, self.config.min_points_per_feature
            )));
        }
        Ok(())
    }

    /// Writes |f|² as a CSV matrix: the header row holds idler wavelengths (nm),
    /// the first column signal wavelengths (nm). Detunings in rad/s are used when
    /// the source has no absolute center frequencies.
    pub fn write_jsi_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let absolute = self.center_s > T::zero() && self.center_i > T::zero();
        let label = |c: T, d: T| {
            if absolute {
                T::TAU() * lit::<T>(SPEED_OF_LIGHT) / (c + d) * lit(1e9)
            } else {
                d
            }
        };
        let unit = if absolute { "nm" } else { "rad_per_s" };
        writeln!(w, "# joint spectral intensity |f|^2; rows signal, columns idler")?;
        write!(w, "signal_{unit}\\idler_{unit}")?;
        for &y in &self.grid_i {
            write!(w, ",{:.9e}", label(self.center_i, y))?;
        }
        writeln!(w)?;
        for (k, &x) in self.grid_s.iter().enumerate() {
            write!(w, "{:.9e}", label(self.center_s, x))?;
            for j in 0..self.grid_i.len() {
                let f = self.at(k, j);
                write!(w, ",{:.9e}", f * f)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Samples the joint amplitude of `source` on a grid spanning
/// ±truncation marginal standard deviations per axis and renormalizes it.
pub fn build_jsa<T: Real>(source: &SourceSpec<T>, config: &GridConfig<T>) -> Result<JointSpectrum<T>> {
    config.validate()?;
    let mut model = Model::new(source, config.phase_matching, config.truncation)?;
    let n = config.points;
    let xs = Axis::new(-model.half_s, model.half_s, n);
    let ys = Axis::new(-model.half_i, model.half_i, n);
    let mut jsa = JointSpectrum {
        grid_s: xs.values(),
        grid_i: ys.values(),
        amplitude: Vec::new(),
        cell_area: xs.step * ys.step,
        norm_check: T::zero(),
        center_s: source.center_s,
        center_i: source.center_i,
        config: *config,
        model,
    };
    jsa.check_resolution(Photon::Signal, &xs, None)?;
    jsa.check_resolution(Photon::Idler, &ys, None)?;
    let mut amp = Vec::with_capacity(n * n);
    for &x in &jsa.grid_s {
        for &y in &jsa.grid_i {
            amp.push(model.amplitude(x, y));
        }
    }
    if amp.iter().any(|f| !f.is_finite()) {
        return Err(domain("non-finite joint amplitude"));
    }
    let norm_check = amp.iter().map(|&f| f * f).sum::<T>() * jsa.cell_area;
    if !(norm_check > T::zero()) {
        return Err(Error::Degenerate("joint amplitude vanishes on the grid".into()));
    }
    let rescale = T::one() / norm_check.sqrt();
    for f in &mut amp {
        *f = *f * rescale;
    }
    model.scale = model.scale * rescale;
    jsa.model = model;
    jsa.amplitude = amp;
    jsa.norm_check = norm_check;
    Ok(jsa)
}

#[cfg(test)]
mod tests {
    use super::super::PumpBandwidth;
    use super::*;

    fn source(theta: f64) -> SourceSpec<f64> {
        SourceSpec::new(PumpBandwidth::FwhmTimePs(50.0), 4e10, theta, 1e-3)
    }

    #[test]
    fn normalized_after_build() {
        for pm in [PhaseMatching::Sinc, PhaseMatching::Gaussian] {
            let cfg = GridConfig { phase_matching: pm, ..GridConfig::default().with_points(256) };
            let j = build_jsa(&source(2.0), &cfg).unwrap();
            assert!((j.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_norm_check_is_near_one() {
        let j = build_jsa(&source(2.0), &GridConfig::gaussian()).unwrap();
        assert!((j.norm_check - 1.0).abs() < 1e-5, "{}", j.norm_check);
    }

    #[test]
    fn degenerate_angle_rejected() {
        let e = build_jsa(&source(std::f64::consts::FRAC_PI_4), &GridConfig::default());
        assert!(matches!(e, Err(Error::Degenerate(_))));
    }

    #[test]
    fn coarse_grid_rejected() {
        // pump far narrower than the phase-matching ridge needs many points
        let s = SourceSpec::new(PumpBandwidth::Sigma(1e8), 4e10, 2.0, 1e-3);
        let e = build_jsa(&s, &GridConfig::default().with_points(16));
        assert!(matches!(e, Err(Error::Resolution(_))), "{e:?}");
    }

    #[test]
    fn midpoint_axis() {
        let a = Axis::new(-1.0, 1.0, 4);
        assert_eq!(a.values(), vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(a.hi(), 1.0);
    }

    #[test]
    fn jsi_csv_has_axis_headers() {
        let s = source(2.0).at_wavelength(1536.5);
        let cfg = GridConfig { min_points_per_feature: 0.0, ..GridConfig::default().with_points(16) };
        let j = build_jsa(&s, &cfg).unwrap();
        let mut buf = Vec::new();
        j.write_jsi_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2 + 16);
        assert!(lines[1].starts_with("signal_nm"));
        let first: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert!((first - 1536.5).abs() < 2.0);
    }
}
