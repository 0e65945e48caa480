use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};
use crate::units::{fwhm_to_sigma, pm_to_angular, wavelength_to_angular};

pub const DEFAULT_FLAT_TOP_ORDER: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterShape<T> {
    /// Transmits everything.
    AllPass,
    Gaussian,
    /// Super-Gaussian exp(−½(u/σₙ)^(2n)).
    FlatTop {
        order: u32,
    },
    /// (detuning rad/s, intensity transmission) pairs, strictly increasing in
    /// detuning, linearly interpolated and zero outside the table.
    Tabulated {
        points: Vec<(T, T)>,
    },
}

/// A spectral filter. [`FilterSpec::transmission`] is the intensity
/// transmission T(ω); the field amplitude is multiplied by √T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec<T> {
    pub shape: FilterShape<T>,
    /// Intensity FWHM in rad/s. Unused for all-pass filters.
    pub fwhm: T,
    /// Absolute center frequency, rad/s.
    pub center: T,
}

impl<T: Real> FilterSpec<T> {
    pub fn all_pass() -> Self {
        Self { shape: FilterShape::AllPass, fwhm: T::infinity(), center: T::zero() }
    }

    pub fn gaussian(fwhm: T, center: T) -> Result<Self> {
        let f = Self { shape: FilterShape::Gaussian, fwhm, center };
        f.validate()?;
        Ok(f)
    }

    pub fn flat_top(order: u32, fwhm: T, center: T) -> Result<Self> {
        let f = Self { shape: FilterShape::FlatTop { order }, fwhm, center };
        f.validate()?;
        Ok(f)
    }

    /// Builds a tabulated filter; the FWHM is measured from the table.
    pub fn tabulated(points: Vec<(T, T)>, center: T) -> Result<Self> {
        let mut f = Self { shape: FilterShape::Tabulated { points }, fwhm: T::zero(), center };
        f.fwhm = T::one();
        f.validate()?;
        f.fwhm = f.measured_fwhm();
        Ok(f)
    }

    pub fn gaussian_pm(fwhm_pm: T, lambda0_nm: T) -> Result<Self> {
        Self::gaussian(pm_to_angular(fwhm_pm, lambda0_nm), wavelength_to_angular(lambda0_nm))
    }

    pub fn flat_top_pm(order: u32, fwhm_pm: T, lambda0_nm: T) -> Result<Self> {
        Self::flat_top(order, pm_to_angular(fwhm_pm, lambda0_nm), wavelength_to_angular(lambda0_nm))
    }

    /// Reads a two-column CSV of (wavelength detuning in pm, intensity
    /// transmission). Lines starting with '#' are skipped and a non-numeric
    /// first row is treated as a header. Transmission is normalized to its peak.
    pub fn tabulated_from_csv<R: Read>(reader: R, lambda0_nm: T) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() < 2 {
                return Err(Error::Parse(format!("row {}: expected two columns", row + 1)));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(dl), Ok(t)) => {
                    // longer wavelength is lower frequency
                    let dw = -pm_to_angular(lit::<T>(dl), lambda0_nm);
                    points.push((dw, lit::<T>(t)));
                }
                _ if row == 0 && points.is_empty() => continue,
                _ => return Err(Error::Parse(format!("row {}: non-numeric value", row + 1))),
            }
        }
        points.reverse();
        let peak = points.iter().map(|p| p.1).fold(T::zero(), T::max);
        if !(peak > T::zero()) {
            return Err(domain("tabulated filter has no transmitting point"));
        }
        for p in &mut points {
            p.1 = p.1 / peak;
        }
        Self::tabulated(points, wavelength_to_angular(lambda0_nm))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            FilterShape::AllPass => return Ok(()),
            FilterShape::FlatTop { order } if *order == 0 => {
                return Err(domain("flat-top order must be at least 1"));
            }
            FilterShape::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(domain("tabulated filter needs at least two points"));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(domain("tabulated detunings must be strictly increasing"));
                }
                if points.iter().any(|p| !(p.1 >= T::zero() && p.1 <= T::one())) {
                    return Err(domain("tabulated transmission must lie in [0, 1]"));
                }
            }
            _ => {}
        }
        if !(self.fwhm > T::zero()) || !self.fwhm.is_finite() {
            return Err(domain(format!("filter fwhm must be positive and finite, got {}", self.fwhm)));
        }
        Ok(())
    }

    pub fn is_all_pass(&self) -> bool {
        matches!(self.shape, FilterShape::AllPass)
    }

    /// Gaussian σ = FWHM/(2√(2 ln 2)).
    pub fn sigma(&self) -> T {
        fwhm_to_sigma(self.fwhm)
    }

    fn flat_top_sigma(&self, order: u32) -> T {
        let two_n = lit::<T>(2.0 * order as f64);
        self.fwhm / lit(2.0) / (lit::<T>(2.0) * T::LN_2()).powf(T::one() / two_n)
    }

    /// Intensity transmission at absolute frequency `omega`.
    pub fn transmission(&self, omega: T) -> T {
        self.transmission_at(omega - self.center)
    }

    /// Intensity transmission at detuning `u` from the filter center.
    pub fn transmission_at(&self, u: T) -> T {
        match &self.shape {
            FilterShape::AllPass => T::one(),
            FilterShape::Gaussian => {
                let s = self.sigma();
                (-(u * u) / (lit::<T>(2.0) * s * s)).exp()
            }
            FilterShape::FlatTop { order } => {
                let s = self.flat_top_sigma(*order);
                let z = (u / s).abs().powi(2 * *order as i32);
                (-lit::<T>(0.5) * z).exp()
            }
            FilterShape::Tabulated { points } => interpolate(points, u),
        }
    }

    /// Field amplitude factor √T.
    pub fn amplitude_at(&self, u: T) -> T {
        self.transmission_at(u).sqrt()
    }

    /// Detuning interval (relative to the filter center) outside of which the
    /// transmission is negligible; `None` for all-pass filters.
    pub fn support(&self, truncation: T) -> Option<(T, T)> {
        let half = match &self.shape {
            FilterShape::AllPass => return None,
            FilterShape::Gaussian => self.sigma() * truncation,
            FilterShape::FlatTop { order } => {
                self.flat_top_sigma(*order) * truncation.powf(T::one() / lit(*order as f64))
            }
            FilterShape::Tabulated { points } => {
                return Some((points[0].0, points[points.len() - 1].0));
            }
        };
        Some((-half, half))
    }

    /// Narrowest spectral feature of the transmission curve, used to check
    /// that integration grids resolve the filter edges.
    pub fn feature_width(&self) -> Option<T> {
        match &self.shape {
            FilterShape::Gaussian => Some(self.sigma()),
            FilterShape::FlatTop { order } => Some(self.flat_top_sigma(*order) / lit(*order as f64)),
            FilterShape::AllPass | FilterShape::Tabulated { .. } => None,
        }
    }

    fn measured_fwhm(&self) -> T {
        let FilterShape::Tabulated { points } = &self.shape else {
            return self.fwhm;
        };
        let peak = points.iter().map(|p| p.1).fold(T::zero(), T::max);
        let half = peak / lit(2.0);
        let first = points.iter().position(|p| p.1 >= half).unwrap_or(0);
        let last = points.iter().rposition(|p| p.1 >= half).unwrap_or(points.len() - 1);
        let cross = |a: (T, T), b: (T, T)| {
            if b.1 == a.1 {
                a.0
            } else {
                a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1)
            }
        };
        let lo = if first == 0 { points[0].0 } else { cross(points[first - 1], points[first]) };
        let hi = if last + 1 == points.len() { points[last].0 } else { cross(points[last], points[last + 1]) };
        let w = hi - lo;
        if w > T::zero() {
            w
        } else {
            points[points.len() - 1].0 - points[0].0
        }
    }
}

fn interpolate<T: Real>(points: &[(T, T)], u: T) -> T {
    let n = points.len();
    if u < points[0].0 || u > points[n - 1].0 {
        return T::zero();
    }
    let k = points.partition_point(|p| p.0 <= u);
    if k == 0 {
        return points[0].1;
    }
    if k == n {
        return points[n - 1].1;
    }
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
}

/// Intensity transmission of `filter` at absolute frequency `omega`.
pub fn filter_transmission<T: Real>(filter: &FilterSpec<T>, omega: T) -> T {
    filter.transmission(omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 1e10;

    #[test]
    fn peak_is_unity() {
        let c = 1.2e15;
        for f in [
            FilterSpec::gaussian(W, c).unwrap(),
            FilterSpec::flat_top(4, W, c).unwrap(),
            FilterSpec::flat_top(1, W, c).unwrap(),
            FilterSpec::all_pass(),
        ] {
            assert_eq!(filter_transmission(&f, f.center), 1.0);
        }
    }

    #[test]
    fn half_maximum_at_half_fwhm() {
        let g = FilterSpec::gaussian(W, 0.0).unwrap();
        assert!((g.transmission(W / 2.0) - 0.5).abs() < 1e-12);
        assert!((g.transmission(-W / 2.0) - 0.5).abs() < 1e-12);
        let f = FilterSpec::flat_top(4, W, 0.0).unwrap();
        assert!((f.transmission(W / 2.0) - 0.5).abs() < 1e-12);
        assert!(f.transmission(W / 4.0) > g.transmission(W / 4.0));
    }

    #[test]
    fn flat_top_order_one_is_gaussian() {
        let g = FilterSpec::gaussian(W, 0.0).unwrap();
        let f = FilterSpec::flat_top(1, W, 0.0).unwrap();
        for k in 0..20 {
            let u = k as f64 * 0.1 * W;
            assert!((g.transmission(u) - f.transmission(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_interpolates_and_clips() {
        let f = FilterSpec::<f64>::tabulated(vec![(-2.0, 0.0), (-1.0, 1.0), (1.0, 1.0), (2.0, 0.0)], 0.0).unwrap();
        assert_eq!(f.transmission(0.0), 1.0);
        assert!((f.transmission(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(f.transmission(3.0), 0.0);
        assert!((f.fwhm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_filters_rejected() {
        assert!(FilterSpec::gaussian(0.0, 0.0).is_err());
        assert!(FilterSpec::flat_top(0, W, 0.0).is_err());
        assert!(FilterSpec::tabulated(vec![(0.0, 1.0), (0.0, 0.5)], 0.0).is_err());
        assert!(FilterSpec::tabulated(vec![(0.0, 1.5), (1.0, 0.5)], 0.0).is_err());
    }

    #[test]
    fn csv_import_reverses_wavelength_axis() {
        let text = "# measured passband\ndetuning_pm,transmission\n-30,0.0\n-10,0.5\n0,1.0\n20,0.5\n30,0.0\n";
        let f = FilterSpec::<f64>::tabulated_from_csv(text.as_bytes(), 1536.5).unwrap();
        // +20 pm (red side) maps to negative frequency detuning
        let dw20 = pm_to_angular(20.0, 1536.5);
        assert!((f.transmission_at(-dw20) - 0.5).abs() < 1e-12);
        assert!((f.transmission_at(0.0) - 1.0).abs() < 1e-12);
        assert!((f.fwhm - pm_to_angular(30.0, 1536.5)).abs() / f.fwhm < 1e-12);
    }

    #[test]
    fn support_contains_negligible_tails() {
        for f in [FilterSpec::gaussian(W, 0.0).unwrap(), FilterSpec::flat_top(4, W, 0.0).unwrap()] {
            let (lo, hi) = f.support(5.0).unwrap();
            assert!(f.transmission_at(hi) < 1e-5);
            assert!(f.transmission_at(lo) < 1e-5);
        }
    }
}
