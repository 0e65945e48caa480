use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pairfilter::detection::{mu_opt_and_car_max, Ratio};
use pairfilter::entanglement::{
    max_tolerable_power, visibility_vs_power, Basis, PowerScenario, ReceiverVariant, ThresholdPower,
    NONLOCALITY_THRESHOLD, QKD_THRESHOLD,
};
use pairfilter::presets;
use pairfilter::spectral::{build_jsa, GridConfig, PhaseMatching, PumpBandwidth, SourceSpec};
use pairfilter::sweep::{run_scenario, run_scenario_bytes, AxisValue, Format, Table};
use pairfilter::units::dbm_to_mw;
use pairfilter::Error;

const OUT_DIR_VAR: &str = "PAIRFILTER_OUT_DIR";

/// Photon-pair filtering, coincidence and entanglement-visibility calculator.
#[derive(Parser)]
#[command(name = "pairfilter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filtered means, heralding efficiencies and purity of a pair source.
    Jsa(JsaArgs),
    /// Singles, coincidences and CAR versus signal mean photon number.
    Rates(RatesArgs),
    /// CAR-optimal pair rate, and optionally the largest tolerable launch power.
    Optimize(OptimizeArgs),
    /// Entanglement visibilities for a time-bin or polarization link.
    Entangle(EntangleArgs),
    /// Runs a scenario file.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Output {
    /// Output file; defaults to stdout, or to $PAIRFILTER_OUT_DIR/<command>.<ext> when set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    AllPass,
    Gaussian,
    FlatTop,
}

#[derive(Clone, Copy, ValueEnum)]
enum PmArg {
    Sinc,
    Gaussian,
}

#[derive(Args)]
struct JsaArgs {
    #[arg(long, default_value_t = presets::PUMP_FWHM_PS)]
    pump_fwhm_ps: f64,
    /// Phase-matching width σ_pm, rad/s.
    #[arg(long, default_value_t = presets::PM_SIGMA)]
    pm_sigma: f64,
    /// Phase-matching angle θ, rad.
    #[arg(long, default_value_t = presets::PM_ANGLE)]
    pm_angle: f64,
    #[arg(long, value_enum, default_value_t = PmArg::Gaussian)]
    phase_matching: PmArg,
    #[arg(long, default_value_t = presets::WAVELENGTH_NM)]
    wavelength_nm: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_total: f64,
    #[arg(long, value_enum, default_value_t = Shape::Gaussian)]
    filter_s: Shape,
    #[arg(long, value_enum, default_value_t = Shape::Gaussian)]
    filter_i: Shape,
    #[arg(long, default_value_t = presets::FILTER_PM)]
    fwhm_s_pm: f64,
    #[arg(long, default_value_t = presets::FILTER_PM)]
    fwhm_i_pm: f64,
    /// Flat-top order.
    #[arg(long, default_value_t = 4)]
    order: u32,
    /// Grid points per axis.
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// Also write the unfiltered joint spectral intensity matrix here.
    #[arg(long)]
    jsi: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RatesArgs {
    /// Signal mean photon numbers, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    mu_s: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta_s: f64,
    #[arg(long, default_value_t = 1.0)]
    delta_i: f64,
    #[arg(long)]
    eta_s: f64,
    #[arg(long)]
    eta_i: f64,
    /// Counted noise rates, counts/s.
    #[arg(long, default_value_t = 0.0)]
    noise_s: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_i: f64,
    /// Coincidence window, ps.
    #[arg(long, default_value_t = 300.0)]
    window_ps: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Sets both filter heralding efficiencies to this pair-symmetric value.
    #[arg(long, conflicts_with_all = ["delta_s", "delta_i"])]
    delta_ps: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta_s: f64,
    #[arg(long, default_value_t = 1.0)]
    delta_i: f64,
    #[arg(long)]
    eta_s: f64,
    #[arg(long)]
    eta_i: f64,
    /// Noise probability per window.
    #[arg(long)]
    d_s: f64,
    #[arg(long)]
    d_i: f64,
    /// Also find the largest launch power keeping this visibility.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = PresetArg::Idealized)]
    preset: PresetArg,
    #[arg(long, value_enum, default_value_t = BasisArg::X)]
    basis: BasisArg,
    /// Keep the preset pair rate instead of optimizing it per power.
    #[arg(long)]
    fixed_mu: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Deployed,
    Idealized,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    X,
    Y,
    Z,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::X => Basis::X,
            BasisArg::Y => Basis::Y,
            BasisArg::Z => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReceiverArg {
    TimebinInterferometer,
    TimebinSwitchZ,
    PolarizationAnalyzer,
}

#[derive(Args)]
struct EntangleArgs {
    #[arg(long, value_enum, default_value_t = PresetArg::Deployed)]
    preset: PresetArg,
    #[arg(long, value_enum)]
    receiver: Option<ReceiverArg>,
    #[arg(long)]
    polarization_filtering: Option<bool>,
    #[arg(long)]
    v_int: Option<f64>,
    /// Launch powers, dBm, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "power_range")]
    power_dbm: Vec<f64>,
    /// Evenly spaced launch powers: first,last,count (dBm).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    power_range: Vec<f64>,
    /// Rescale the pair rate at each power to maximize this basis.
    #[arg(long, value_enum)]
    optimize_mu: Option<BasisArg>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    scenario: PathBuf,
    /// Validate only.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Jsa(a) => {
            let t = jsa(&a)?;
            emit(&t, &a.output, "jsa")
        }
        Command::Rates(a) => emit(&rates(&a)?, &a.output, "rates"),
        Command::Optimize(a) => emit(&optimize(&a)?, &a.output, "optimize"),
        Command::Entangle(a) => emit(&entangle(&a)?, &a.output, "entangle"),
        Command::Sweep(a) => {
            if a.check {
                let bytes = std::fs::read(&a.scenario)?;
                pairfilter::sweep::validate_scenario(&bytes, a.scenario.parent().unwrap_or(Path::new(".")))?;
                eprintln!("scenario is valid");
                return Ok(());
            }
            let t = run_scenario(&a.scenario)?;
            let stem = a.scenario.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string();
            emit(&t, &a.output, &stem)
        }
    }
}

fn filter_json(shape: Shape, fwhm_pm: f64, order: u32) -> Value {
    match shape {
        Shape::AllPass => json!({"shape": "all_pass"}),
        Shape::Gaussian => json!({"shape": "gaussian", "fwhm_pm": fwhm_pm}),
        Shape::FlatTop => json!({"shape": "flat_top", "fwhm_pm": fwhm_pm, "order": order}),
    }
}

fn jsa(a: &JsaArgs) -> Result<Table, Error> {
    let pm = match a.phase_matching {
        PmArg::Sinc => "sinc",
        PmArg::Gaussian => "gaussian",
    };
    let doc = |method: &str| {
        json!({
            "name": "jsa",
            "wavelength_nm": a.wavelength_nm,
            "source": {"pump_fwhm_ps": a.pump_fwhm_ps, "pm_sigma": a.pm_sigma, "pm_angle": a.pm_angle,
                       "mu_total": a.mu_total, "phase_matching": pm},
            "filters": {"signal": filter_json(a.filter_s, a.fwhm_s_pm, a.order),
                        "idler": filter_json(a.filter_i, a.fwhm_i_pm, a.order)},
            "method": method,
            "grid": {"points": a.points, "truncation": 5.0, "min_points_per_feature": 1.0, "convergence_tol": 1e-4},
            "outputs": ["mu_s", "mu_i", "mu_both", "delta_s", "delta_i", "delta_ps", "purity", "purity_unfiltered"]
        })
    };
    let base = Path::new(".");
    let quad = run_scenario_bytes(doc("quadrature").to_string().as_bytes(), base)?;
    let mut table = Table::new(vec!["method".into()]);
    table.provenance = quad.provenance.clone();
    let mut append = |t: Table, label: &str| {
        for r in t.rows {
            table.push(vec![AxisValue::Text(label.into())], &r.quantity, r.value, r.flags);
        }
    };
    append(quad, "quadrature");
    let closed_ok = matches!(a.phase_matching, PmArg::Gaussian);
    if !closed_ok {
        eprintln!("note: closed form describes the Gaussian phase-matching model only; skipped");
    } else {
        match run_scenario_bytes(doc("closed_form").to_string().as_bytes(), base) {
            Ok(t) => append(t, "closed_form"),
            Err(e) => eprintln!("note: closed form unavailable: {e}"),
        }
    }
    if let Some(path) = &a.jsi {
        let source = SourceSpec::new(PumpBandwidth::FwhmTimePs(a.pump_fwhm_ps), a.pm_sigma, a.pm_angle, a.mu_total)
            .at_wavelength(a.wavelength_nm);
        let phase_matching = if closed_ok { PhaseMatching::Gaussian } else { PhaseMatching::Sinc };
        let cfg = GridConfig { phase_matching, ..GridConfig::default().with_points(a.points) };
        let j = build_jsa(&source, &cfg)?;
        let mut buf = Vec::new();
        j.write_jsi_csv(&mut buf)?;
        std::fs::write(path, buf)?;
    }
    Ok(table)
}

fn rates(a: &RatesArgs) -> Result<Table, Error> {
    // counted rates are spread over a nominal 1 pm band
    let channel = |eta: f64, noise: f64| {
        json!({"eta": eta, "noise_density": noise, "delta_lambda_pm": 1.0,
               "noise_reference": "at_detector", "delta_t_ps": a.window_ps})
    };
    let doc = json!({
        "name": "rates",
        "mu": {"mu_s": a.mu_s[0], "delta_s": a.delta_s, "delta_i": a.delta_i},
        "channels": {"signal": channel(a.eta_s, a.noise_s), "idler": channel(a.eta_i, a.noise_i)},
        "sweep": {"axes": [{"name": "mu_s", "path": "mu.mu_s", "values": a.mu_s}]},
        "outputs": ["mu_i", "mu_both", "singles_s", "singles_i", "coincidences", "accidentals", "car", "snr_s", "snr_i"]
    });
    let t = run_scenario_bytes(doc.to_string().as_bytes(), Path::new("."))?;
    let car = t.series("car");
    if let Some((best, _)) = car.iter().enumerate().max_by(|x, y| x.1 .1.total_cmp(&y.1 .1)).map(|(k, v)| (k, v.1)) {
        if best > 0 && best + 1 < car.len() {
            eprintln!("note: CAR peaks on the grid at mu_s = {}", a.mu_s[best]);
        }
    }
    Ok(t)
}

fn ratio_value(r: Ratio<f64>, flags: &mut Vec<String>) -> f64 {
    match r {
        Ratio::Finite(v) => v,
        Ratio::Unbounded => {
            flags.push("unbounded".into());
            f64::INFINITY
        }
    }
}

fn optimize(a: &OptimizeArgs) -> Result<Table, Error> {
    let (ds, di) = a.delta_ps.map_or((a.delta_s, a.delta_i), |d| (d, d));
    let o = mu_opt_and_car_max(ds, di, a.eta_s, a.eta_i, a.d_s, a.d_i)?;
    let mut t = Table::new(vec![]);
    for (name, r) in [("mu_both_opt", o.mu_both_opt), ("mu_si_opt", o.mu_si_opt), ("car_max", o.car_max)] {
        let mut flags = vec![];
        let v = ratio_value(r, &mut flags);
        t.push(vec![], name, v, flags);
    }
    if let Some(th) = a.threshold {
        let scenario = preset(a.preset);
        let basis = Basis::from(a.basis);
        let (lo, hi) = (-40.0, 30.0);
        let mut flags = vec![];
        let v = match max_tolerable_power(&scenario, th, basis, !a.fixed_mu, lo, hi)? {
            ThresholdPower::Crossing(p) => p,
            ThresholdPower::NeverReached => {
                flags.push("below_threshold_at_range_start".into());
                f64::NEG_INFINITY
            }
            ThresholdPower::AboveRange => {
                flags.push("above_threshold_over_range".into());
                f64::INFINITY
            }
        };
        t.push(vec![], "max_power_dbm", v, flags);
    }
    Ok(t)
}

fn preset(p: PresetArg) -> PowerScenario<f64> {
    match p {
        PresetArg::Deployed => presets::deployed_timebin(),
        PresetArg::Idealized => presets::idealized_timebin(),
    }
}

fn entangle(a: &EntangleArgs) -> Result<Table, Error> {
    let mut s = preset(a.preset);
    if let Some(r) = a.receiver {
        s.receiver.variant = match r {
            ReceiverArg::TimebinInterferometer => ReceiverVariant::TimebinInterferometer,
            ReceiverArg::TimebinSwitchZ => ReceiverVariant::TimebinSwitchZ,
            ReceiverArg::PolarizationAnalyzer => ReceiverVariant::PolarizationAnalyzer,
        };
    }
    if let Some(p) = a.polarization_filtering {
        s.receiver.polarization_filtering = p;
    }
    if let Some(v) = a.v_int {
        s.source.v_int = v;
    }
    s.source.validate()?;
    let powers_dbm: Vec<f64> = if !a.power_range.is_empty() {
        if a.power_range.len() != 3 {
            return Err(Error::Domain("--power-range takes first,last,count".into()));
        }
        let (lo, hi, n) = (a.power_range[0], a.power_range[1], a.power_range[2]);
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(Error::Domain(format!("power count must be a positive integer, got {n}")));
        }
        let n = n as usize;
        (0..n).map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
    } else if !a.power_dbm.is_empty() {
        a.power_dbm.clone()
    } else {
        vec![f64::NEG_INFINITY]
    };
    let mw: Vec<f64> = powers_dbm.iter().map(|&p| dbm_to_mw(p)).collect();
    let curve = visibility_vs_power(&s, &mw, a.optimize_mu.map(Basis::from))?;
    let mut t = Table::new(vec!["power_dbm".into()]);
    for (p, dbm) in curve.points.iter().zip(&powers_dbm) {
        let flags: Vec<String> = if p.converged { vec![] } else { vec!["optimizer_unconverged".into()] };
        let axes = vec![AxisValue::Num(*dbm)];
        for (name, v) in [("mu_total", p.mu_total), ("v_x", p.report.v_x), ("v_y", p.report.v_y), ("v_z", p.report.v_z)]
        {
            t.push(axes.clone(), name, v, flags.clone());
        }
    }
    if powers_dbm.len() > 1 {
        for c in &curve.crossings {
            let label = if c.threshold == QKD_THRESHOLD {
                "qkd"
            } else if c.threshold == NONLOCALITY_THRESHOLD {
                "nonlocality"
            } else {
                "threshold"
            };
            let basis =
                serde_json::to_value(c.basis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let value = c.power_dbm.map_or("none".to_string(), |p| format!("{p:.4}"));
            t = t.provenance(&format!("crossing_{label}_{basis}_dbm"), value);
        }
    }
    Ok(t)
}

fn emit(table: &Table, out: &Output, stem: &str) -> Result<(), Error> {
    let (format, ext) = match out.format {
        FormatArg::Csv => (Format::Csv, "csv"),
        FormatArg::Json => (Format::Json, "json"),
    };
    let mut counts = std::collections::BTreeMap::<&str, usize>::new();
    for f in table.rows.iter().flat_map(|r| &r.flags) {
        *counts.entry(f.as_str()).or_default() += 1;
    }
    for (flag, n) in counts {
        if flag != "unbounded" {
            eprintln!("warning: {n} row(s) flagged {flag}");
        }
    }
    let mut buf = Vec::new();
    table.write(format, &mut buf)?;
    let target = match &out.out {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUT_DIR_VAR).map(|d| PathBuf::from(d).join(format!("{stem}.{ext}"))),
    };
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, buf)?;
            eprintln!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
