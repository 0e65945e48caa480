//! Scenario file schema and its resolution into model inputs.
//!
//! Wavelength-like inputs are in pm, times in ps and launch powers in dBm;
//! everything is converted to SI/angular units once, here.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::detection::{ChannelSpec, NoiseReference};
use crate::entanglement::{Basis, EntangledSource, Receiver, ReceiverVariant};
use crate::error::{Error, FieldError};
use crate::gaussian::coeffs_for_filters;
use crate::spectral::{
    FilterSpec, GridConfig, MuTriple, PhaseMatching, PumpBandwidth, SourceSpec, DEFAULT_FLAT_TOP_ORDER,
};
use crate::units::{dbm_to_mw, loss_db_to_transmission};

pub const DEFAULT_WAVELENGTH_NM: f64 = 1550.0;

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH_NM
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default)]
    pub source: Option<SourceConfig>,
    /// Bypasses the spectral model with explicitly given means.
    #[serde(default)]
    pub mu: Option<MuConfig>,
    #[serde(default)]
    pub filters: FilterPair,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub channels: Option<ChannelPair>,
    #[serde(default)]
    pub entanglement: Option<EntanglementConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub outputs: Vec<Quantity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default)]
    pub pump_fwhm_ps: Option<f64>,
    /// Pump field spectral σ, rad/s.
    #[serde(default)]
    pub pump_sigma: Option<f64>,
    /// Phase-matching width σ_pm, rad/s.
    pub pm_sigma: f64,
    /// Phase-matching angle θ, rad.
    pub pm_angle: f64,
    /// Total pair number per pulse; exclusive with `signal_mean`.
    #[serde(default)]
    pub mu_total: Option<f64>,
    /// Filtered signal mean to pin; μ_T is solved for.
    #[serde(default)]
    pub signal_mean: Option<f64>,
    #[serde(default)]
    pub phase_matching: PhaseMatching,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MuConfig {
    Means { mu_s: f64, mu_i: f64, mu_both: f64 },
    Efficiencies { mu_s: f64, delta_s: f64, delta_i: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterPair {
    #[serde(default)]
    pub signal: FilterConfig,
    #[serde(default)]
    pub idler: FilterConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    #[default]
    AllPass,
    Gaussian,
    FlatTop,
    Tabulated,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub shape: ShapeName,
    #[serde(default)]
    pub fwhm_pm: Option<f64>,
    #[serde(default)]
    pub order: Option<u32>,
    /// Two-column CSV (detuning pm, transmission), relative to the scenario.
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// Center detuning from the photon's nominal frequency, pm.
    #[serde(default)]
    pub offset_pm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub points: usize,
    pub truncation: f64,
    pub min_points_per_feature: f64,
    pub convergence_tol: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        let g = GridConfig::<f64>::default();
        Self {
            points: g.points,
            truncation: g.truncation,
            min_points_per_feature: g.min_points_per_feature,
            convergence_tol: g.convergence_tol,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPair {
    #[serde(default)]
    pub signal: ChannelConfig,
    #[serde(default)]
    pub idler: ChannelConfig,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn window() -> f64 {
    300.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Overall efficiency; when set it replaces η_r and the loss fields must
    /// be left at their defaults.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "one")]
    pub eta_c: f64,
    #[serde(default = "one")]
    pub eta_ch: f64,
    #[serde(default = "one")]
    pub eta_r: f64,
    #[serde(default)]
    pub source_loss_db: Option<f64>,
    #[serde(default)]
    pub channel_loss_db: Option<f64>,
    #[serde(default)]
    pub theta_pol: f64,
    #[serde(default = "half")]
    pub alpha_pol: f64,
    /// counts/(pm·s)
    #[serde(default)]
    pub noise_density: f64,
    /// counts/(s·mW) inside the passband.
    #[serde(default)]
    pub noise_per_mw: f64,
    /// counts/(s·mW·pm), scaled by the passband width.
    #[serde(default)]
    pub noise_per_mw_per_pm: f64,
    #[serde(default)]
    pub launch_power_dbm: Option<f64>,
    #[serde(default)]
    pub span_loss_db: Option<f64>,
    #[serde(default)]
    pub noise_reference: NoiseReference,
    /// counts/s
    #[serde(default)]
    pub dark_rate: f64,
    #[serde(default = "window")]
    pub delta_t_ps: f64,
    /// Noise bandwidth; defaults to the arm's filter FWHM.
    #[serde(default)]
    pub delta_lambda_pm: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("defaults deserialize")
    }
}

fn default_v_int() -> f64 {
    crate::presets::V_INT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntanglementConfig {
    #[serde(default = "default_v_int")]
    pub v_int: f64,
    #[serde(default = "default_receiver")]
    pub receiver: ReceiverVariant,
    #[serde(default)]
    pub polarization_filtering: bool,
    /// Rescale the pair rate at each point to maximize this basis.
    #[serde(default)]
    pub optimize_mu: Option<Basis>,
}

fn default_receiver() -> ReceiverVariant {
    ReceiverVariant::TimebinInterferometer
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<AxisConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
    /// Several parameters set to the same value.
    #[serde(default)]
    pub paths: Option<Vec<String>>,
    #[serde(default)]
    pub values: Option<Vec<Value>>,
    /// [first, last, count]
    #[serde(default)]
    pub linspace: Option<(f64, f64, usize)>,
    /// [first, last, count], geometric spacing.
    #[serde(default)]
    pub logspace: Option<(f64, f64, usize)>,
}

/// Quantities a sweep can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    MuTotal,
    MuS,
    MuI,
    MuBoth,
    DeltaS,
    DeltaI,
    DeltaPs,
    Purity,
    PurityUnfiltered,
    WidthRatio,
    TauPhotonPs,
    SinglesS,
    SinglesI,
    Coincidences,
    Accidentals,
    Car,
    SnrS,
    SnrI,
    NoiseS,
    NoiseI,
    MuBothOpt,
    MuSiOpt,
    CarMax,
    VX,
    VY,
    VZ,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        use Quantity::*;
        match self {
            MuTotal => "mu_total",
            MuS => "mu_s",
            MuI => "mu_i",
            MuBoth => "mu_both",
            DeltaS => "delta_s",
            DeltaI => "delta_i",
            DeltaPs => "delta_ps",
            Purity => "purity",
            PurityUnfiltered => "purity_unfiltered",
            WidthRatio => "width_ratio",
            TauPhotonPs => "tau_photon_ps",
            SinglesS => "singles_s",
            SinglesI => "singles_i",
            Coincidences => "coincidences",
            Accidentals => "accidentals",
            Car => "car",
            SnrS => "snr_s",
            SnrI => "snr_i",
            NoiseS => "noise_s",
            NoiseI => "noise_i",
            MuBothOpt => "mu_both_opt",
            MuSiOpt => "mu_si_opt",
            CarMax => "car_max",
            VX => "v_x",
            VY => "v_y",
            VZ => "v_z",
        }
    }

    pub(crate) fn needs_spectrum(self) -> bool {
        use Quantity::*;
        matches!(self, MuTotal | Purity | PurityUnfiltered | WidthRatio | TauPhotonPs)
    }

    pub(crate) fn needs_channels(self) -> bool {
        use Quantity::*;
        matches!(
            self,
            SinglesS
                | SinglesI
                | Coincidences
                | Accidentals
                | Car
                | SnrS
                | SnrI
                | NoiseS
                | NoiseI
                | MuBothOpt
                | MuSiOpt
                | CarMax
        ) || self.needs_entanglement()
    }

    pub(crate) fn needs_entanglement(self) -> bool {
        matches!(self, Quantity::VX | Quantity::VY | Quantity::VZ)
    }
}

/// Where the mean photon numbers come from at one grid point.
#[derive(Debug, Clone)]
pub(crate) enum MuSource {
    Spectral { source: SourceSpec<f64>, brightness: Brightness },
    Fixed(MuTriple<f64>),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Brightness {
    Total(f64),
    SignalMean(f64),
}

/// A grid point with every input converted and validated.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub mu: MuSource,
    pub f_s: FilterSpec<f64>,
    pub f_i: FilterSpec<f64>,
    pub method: Method,
    pub grid: GridConfig<f64>,
    pub channels: Option<(ChannelSpec<f64>, ChannelSpec<f64>)>,
    pub entanglement: Option<EntanglementConfig>,
}

struct Collector {
    errors: Vec<FieldError>,
}

impl Collector {
    fn push(&mut self, path: &str, message: impl ToString) {
        self.errors.push(FieldError { path: path.to_string(), message: message.to_string() });
    }

    fn check<T>(&mut self, path: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(Error::Scenario(list)) => {
                self.errors.extend(list);
                None
            }
            Err(e) => {
                self.push(path, e);
                None
            }
        }
    }

    fn finite(&mut self, path: &str, v: f64) -> bool {
        if v.is_finite() {
            true
        } else {
            self.push(path, format!("must be finite, got {v}"));
            false
        }
    }
}

impl Scenario {
    /// Converts to model inputs, reporting every problem found.
    pub(crate) fn resolve(&self, base_dir: &Path) -> Result<Resolved, Vec<FieldError>> {
        let mut c = Collector { errors: Vec::new() };
        if self.outputs.is_empty() {
            c.push("outputs", "at least one quantity is required");
        }
        let lambda0 = self.wavelength_nm;
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            c.push("wavelength_nm", format!("must be positive and finite, got {lambda0}"));
        }

        let f_s = self.filters.signal.resolve("filters.signal", lambda0, base_dir, &mut c);
        let f_i = self.filters.idler.resolve("filters.idler", lambda0, base_dir, &mut c);

        let grid = GridConfig {
            points: self.grid.points,
            truncation: self.grid.truncation,
            min_points_per_feature: self.grid.min_points_per_feature,
            convergence_tol: self.grid.convergence_tol,
            phase_matching: self.source.as_ref().map(|s| s.phase_matching).unwrap_or_default(),
        };
        if grid.points < 4 {
            c.push("grid.points", "at least 4 points are required");
        }
        for (p, v) in [
            ("grid.truncation", grid.truncation),
            ("grid.min_points_per_feature", grid.min_points_per_feature),
            ("grid.convergence_tol", grid.convergence_tol),
        ] {
            if c.finite(p, v) && v < 0.0 {
                c.push(p, "must be non-negative");
            }
        }

        let mu = match (&self.source, &self.mu) {
            (Some(_), Some(_)) => {
                c.push("mu", "give either source or mu, not both");
                None
            }
            (None, None) => {
                c.push("source", "a source or explicit mu is required");
                None
            }
            (None, Some(m)) => {
                if let Some(q) = self.outputs.iter().find(|q| q.needs_spectrum()) {
                    c.push("outputs", format!("{} needs a source spectrum", q.name()));
                }
                c.check("mu", m.triple()).map(MuSource::Fixed)
            }
            (Some(s), None) => s.resolve(lambda0, &mut c),
        };

        if let (Some(MuSource::Spectral { source, .. }), Some(fs), Some(fi)) = (&mu, &f_s, &f_i) {
            if self.method == Method::ClosedForm {
                c.check("method", coeffs_for_filters(source, fs, fi));
            }
        }

        let needs_channels = self.outputs.iter().any(|q| q.needs_channels());
        let channels = match &self.channels {
            Some(pair) => {
                let ws = self.filters.signal.width_pm(lambda0, f_s.as_ref());
                let wi = self.filters.idler.width_pm(lambda0, f_i.as_ref());
                let s = pair.signal.resolve("channels.signal", ws, &mut c);
                let i = pair.idler.resolve("channels.idler", wi, &mut c);
                s.zip(i)
            }
            None => {
                if needs_channels {
                    c.push("channels", "required by the requested outputs");
                }
                None
            }
        };

        if let Some(e) = &self.entanglement {
            if c.finite("entanglement.v_int", e.v_int) && !(0.0..=1.0).contains(&e.v_int) {
                c.push("entanglement.v_int", "must lie in [0, 1]");
            }
        } else if self.outputs.iter().any(|q| q.needs_entanglement()) {
            c.push("entanglement", "required by the requested outputs");
        }

        if !c.errors.is_empty() {
            return Err(c.errors);
        }
        Ok(Resolved {
            mu: mu.expect("checked"),
            f_s: f_s.expect("checked"),
            f_i: f_i.expect("checked"),
            method: self.method,
            grid,
            channels,
            entanglement: self.entanglement.clone(),
        })
    }
}

impl MuConfig {
    fn triple(&self) -> crate::Result<MuTriple<f64>> {
        match *self {
            MuConfig::Means { mu_s, mu_i, mu_both } => MuTriple::from_means(mu_s, mu_i, mu_both),
            MuConfig::Efficiencies { mu_s, delta_s, delta_i } => MuTriple::from_signal_mean(mu_s, delta_s, delta_i),
        }
    }
}

impl SourceConfig {
    fn resolve(&self, lambda0: f64, c: &mut Collector) -> Option<MuSource> {
        let pump = match (self.pump_fwhm_ps, self.pump_sigma) {
            (Some(t), None) => Some(PumpBandwidth::FwhmTimePs(t)),
            (None, Some(s)) => Some(PumpBandwidth::Sigma(s)),
            _ => {
                c.push("source", "give exactly one of pump_fwhm_ps and pump_sigma");
                None
            }
        };
        let brightness = match (self.mu_total, self.signal_mean) {
            (Some(m), None) => Some(Brightness::Total(m)),
            (None, Some(m)) if m > 0.0 && m.is_finite() => Some(Brightness::SignalMean(m)),
            (None, Some(m)) => {
                c.push("source.signal_mean", format!("must be positive and finite, got {m}"));
                None
            }
            _ => {
                c.push("source", "give exactly one of mu_total and signal_mean");
                None
            }
        };
        let pump = pump?;
        let mu_total = match brightness? {
            Brightness::Total(m) => m,
            Brightness::SignalMean(_) => 1.0,
        };
        let source = SourceSpec::new(pump, self.pm_sigma, self.pm_angle, mu_total).at_wavelength(lambda0);
        c.check("source", source.validate())?;
        Some(MuSource::Spectral { source, brightness: brightness? })
    }
}

impl FilterConfig {
    fn resolve(&self, path: &str, lambda0: f64, base: &Path, c: &mut Collector) -> Option<FilterSpec<f64>> {
        let offset = crate::units::pm_to_angular(self.offset_pm, lambda0);
        if !c.finite(&format!("{path}.offset_pm"), self.offset_pm) {
            return None;
        }
        let need_fwhm = |c: &mut Collector| match self.fwhm_pm {
            Some(w) if w > 0.0 && w.is_finite() => Some(w),
            Some(w) => {
                c.push(&format!("{path}.fwhm_pm"), format!("must be positive and finite, got {w}"));
                None
            }
            None => {
                c.push(&format!("{path}.fwhm_pm"), "required for this shape");
                None
            }
        };
        let spec = match self.shape {
            ShapeName::AllPass => Ok(FilterSpec::all_pass()),
            ShapeName::Gaussian => FilterSpec::gaussian_pm(need_fwhm(c)?, lambda0),
            ShapeName::FlatTop => {
                FilterSpec::flat_top_pm(self.order.unwrap_or(DEFAULT_FLAT_TOP_ORDER), need_fwhm(c)?, lambda0)
            }
            ShapeName::Tabulated => {
                let Some(table) = &self.table else {
                    c.push(&format!("{path}.table"), "required for tabulated filters");
                    return None;
                };
                let file = base.join(table);
                match std::fs::File::open(&file) {
                    Ok(f) => FilterSpec::tabulated_from_csv(f, lambda0),
                    Err(e) => {
                        c.push(&format!("{path}.table"), format!("{}: {e}", file.display()));
                        return None;
                    }
                }
            }
        };
        let mut spec = c.check(path, spec)?;
        if !spec.is_all_pass() {
            // positive offsets are toward longer wavelength
            spec.center -= offset;
        }
        Some(spec)
    }

    /// FWHM in pm, measured for tabulated filters.
    fn width_pm(&self, lambda0: f64, spec: Option<&FilterSpec<f64>>) -> Option<f64> {
        match self.shape {
            ShapeName::AllPass => None,
            ShapeName::Tabulated => spec.map(|s| crate::units::angular_to_pm(s.fwhm, lambda0)),
            ShapeName::Gaussian | ShapeName::FlatTop => self.fwhm_pm,
        }
    }
}

impl ChannelConfig {
    fn resolve(&self, path: &str, filter_pm: Option<f64>, c: &mut Collector) -> Option<ChannelSpec<f64>> {
        let before = c.errors.len();
        let loss = |db: Option<f64>, lin: f64, name: &str, c: &mut Collector| match db {
            None => lin,
            Some(db) => {
                if lin != 1.0 {
                    c.push(&format!("{path}.{name}"), "give the loss in dB or as a transmission, not both");
                }
                loss_db_to_transmission(db)
            }
        };
        let eta_c = loss(self.source_loss_db, self.eta_c, "source_loss_db", c);
        let eta_ch = loss(self.channel_loss_db, self.eta_ch, "channel_loss_db", c);
        let eta_r = match self.eta {
            None => self.eta_r,
            Some(eta) => {
                if eta_c != 1.0 || eta_ch != 1.0 || self.eta_r != 1.0 {
                    c.push(&format!("{path}.eta"), "overall eta excludes eta_c, eta_ch, eta_r and loss fields");
                }
                eta
            }
        };
        let delta_lambda_pm = match self.delta_lambda_pm.or(filter_pm) {
            Some(w) => w,
            None => {
                if self.noise_density != 0.0 || self.noise_per_mw_per_pm != 0.0 {
                    c.push(&format!("{path}.delta_lambda_pm"), "required when the filter is all-pass");
                }
                0.0
            }
        };
        let launch_power_mw = match self.launch_power_dbm {
            None => 0.0,
            Some(dbm) if dbm.is_nan() || dbm == f64::INFINITY => {
                c.push(&format!("{path}.launch_power_dbm"), format!("must be finite or -inf, got {dbm}"));
                0.0
            }
            Some(dbm) => dbm_to_mw(dbm),
        };
        for (name, v) in [("noise_per_mw", self.noise_per_mw), ("noise_per_mw_per_pm", self.noise_per_mw_per_pm)] {
            c.finite(&format!("{path}.{name}"), v);
        }
        let spec = ChannelSpec {
            eta_c,
            eta_ch,
            eta_r,
            theta_pol: self.theta_pol,
            alpha_pol: self.alpha_pol,
            noise_density: self.noise_density,
            noise_per_mw: self.noise_per_mw + self.noise_per_mw_per_pm * delta_lambda_pm,
            launch_power_mw,
            span_loss_db: self.span_loss_db,
            reference: self.noise_reference,
            dark_rate: self.dark_rate,
            delta_t: self.delta_t_ps * 1e-12,
            delta_lambda_pm,
        };
        c.check(path, spec.validate());
        (c.errors.len() == before).then_some(spec)
    }
}

impl EntanglementConfig {
    pub(crate) fn receiver(&self) -> Receiver {
        Receiver::new(self.receiver, self.polarization_filtering)
    }

    pub(crate) fn source(&self, mu: &MuTriple<f64>) -> crate::Result<EntangledSource<f64>> {
        EntangledSource::from_triple(mu, self.v_int)
    }
}
