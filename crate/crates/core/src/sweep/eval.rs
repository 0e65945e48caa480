//! Evaluation of one resolved grid point.

use super::scenario::{Brightness, Method, MuSource, Quantity, Resolved};
use crate::detection::{coincidences, mu_opt_and_car_max, Ratio};
use crate::entanglement::{optimize_source, visibility};
use crate::error::{Error, Result};
use crate::gaussian::{closed_form_report, coeffs_for_filters};
use crate::spectral::{build_jsa, filtered_means, photon_pump_width_ratio, schmidt_purity, FilterSpec, MuTriple};

pub(crate) struct Value {
    pub quantity: Quantity,
    pub value: f64,
    pub flags: Vec<String>,
}

struct Spectral {
    mu_total: Option<f64>,
    triple: MuTriple<f64>,
    purity: Option<(f64, f64)>,
}

fn spectral(p: &Resolved, outputs: &[Quantity]) -> Result<Spectral> {
    let (source, brightness) = match &p.mu {
        MuSource::Fixed(t) => return Ok(Spectral { mu_total: None, triple: *t, purity: None }),
        MuSource::Spectral { source, brightness } => (source, *brightness),
    };
    let wants_purity = outputs.iter().any(|q| matches!(q, Quantity::Purity | Quantity::PurityUnfiltered));
    let (fractions, purity) = match p.method {
        Method::Quadrature => {
            let jsa = build_jsa(source, &p.grid)?;
            let fr = filtered_means(&jsa, &p.f_s, &p.f_i, 1.0)?;
            let purity = if wants_purity {
                let all = FilterSpec::all_pass();
                Some((schmidt_purity(&jsa, &p.f_s, &p.f_i)?, schmidt_purity(&jsa, &all, &all)?))
            } else {
                None
            };
            (fr, purity)
        }
        Method::ClosedForm => {
            let r = closed_form_report(&coeffs_for_filters(source, &p.f_s, &p.f_i)?)?;
            (MuTriple::from_fractions(1.0, r.gamma_s, r.gamma_i, r.gamma_both), Some((r.purity, r.purity_unfiltered)))
        }
    };
    let mu_total = match brightness {
        Brightness::Total(m) => m,
        Brightness::SignalMean(m) => {
            if !(fractions.mu_s > 0.0) {
                return Err(Error::Degenerate("signal filter passes no light; cannot pin its mean".into()));
            }
            m / fractions.mu_s
        }
    };
    Ok(Spectral { mu_total: Some(mu_total), triple: fractions.scaled(mu_total), purity })
}

fn ratio(r: Ratio<f64>, flags: &mut Vec<String>) -> f64 {
    match r {
        Ratio::Finite(v) => v,
        Ratio::Unbounded => {
            flags.push("unbounded".into());
            f64::INFINITY
        }
    }
}

pub(crate) fn evaluate(p: &Resolved, outputs: &[Quantity]) -> Result<Vec<Value>> {
    let mut sp = spectral(p, outputs)?;
    let mut common = Vec::new();
    if !sp.triple.converged {
        common.push("unconverged".to_string());
    }

    let vis = match &p.entanglement {
        Some(cfg) if outputs.iter().any(|q| q.needs_entanglement()) => {
            let (cs, ci) = p.channels.as_ref().expect("validated");
            let receiver = cfg.receiver();
            let mut src = cfg.source(&sp.triple)?;
            if let Some(basis) = cfg.optimize_mu {
                let before = src.mu_total();
                let (opt, converged) = optimize_source(&receiver, &src, cs, ci, basis);
                if !converged {
                    common.push("optimizer_unconverged".into());
                }
                let factor = opt.mu_total() / before;
                sp.triple = sp.triple.scaled(factor);
                sp.mu_total = sp.mu_total.map(|m| m * factor);
                src = opt;
            }
            Some(visibility(&receiver, &src, cs, ci)?)
        }
        _ => None,
    };

    let rates = match &p.channels {
        Some((cs, ci)) => Some(coincidences(&sp.triple, cs, ci)?),
        None => None,
    };
    let optimum = match (&p.channels, sp.triple.delta_s, sp.triple.delta_i) {
        (Some((cs, ci)), Some(ds), Some(di)) if ds > 0.0 && di > 0.0 => {
            Some(mu_opt_and_car_max(ds, di, cs.eta(), ci.eta(), cs.noise_probability(), ci.noise_probability())?)
        }
        _ => None,
    };

    let mut out = Vec::with_capacity(outputs.len());
    for &q in outputs {
        let mut flags = common.clone();
        let optional = |v: Option<f64>, flags: &mut Vec<String>| {
            v.unwrap_or_else(|| {
                flags.push("undefined".into());
                f64::NAN
            })
        };
        let t = &sp.triple;
        let value = match q {
            Quantity::MuTotal => optional(sp.mu_total, &mut flags),
            Quantity::MuS => t.mu_s,
            Quantity::MuI => t.mu_i,
            Quantity::MuBoth => t.mu_both,
            Quantity::DeltaS => optional(t.delta_s, &mut flags),
            Quantity::DeltaI => optional(t.delta_i, &mut flags),
            Quantity::DeltaPs => optional(t.delta_ps, &mut flags),
            Quantity::Purity => optional(sp.purity.map(|p| p.0), &mut flags),
            Quantity::PurityUnfiltered => optional(sp.purity.map(|p| p.1), &mut flags),
            Quantity::WidthRatio | Quantity::TauPhotonPs => {
                let MuSource::Spectral { source, .. } = &p.mu else { unreachable!("validated") };
                let w = photon_pump_width_ratio(source, &p.f_s, &p.grid)?;
                if q == Quantity::WidthRatio {
                    w.ratio
                } else {
                    w.tau_photon * 1e12
                }
            }
            Quantity::VX | Quantity::VY | Quantity::VZ => {
                let v = vis.as_ref().expect("validated");
                match q {
                    Quantity::VX => v.v_x,
                    Quantity::VY => v.v_y,
                    _ => v.v_z,
                }
            }
            Quantity::MuBothOpt | Quantity::MuSiOpt | Quantity::CarMax => match &optimum {
                None => optional(None, &mut flags),
                Some(o) => ratio(
                    match q {
                        Quantity::MuBothOpt => o.mu_both_opt,
                        Quantity::MuSiOpt => o.mu_si_opt,
                        _ => o.car_max,
                    },
                    &mut flags,
                ),
            },
            _ => {
                let r = rates.as_ref().expect("validated");
                if r.low_gain_warning {
                    flags.push("low_gain".into());
                }
                let (cs, ci) = p.channels.as_ref().expect("validated");
                match q {
                    Quantity::SinglesS => r.s_s,
                    Quantity::SinglesI => r.s_i,
                    Quantity::Coincidences => r.c,
                    Quantity::Accidentals => r.a,
                    Quantity::Car => ratio(r.car, &mut flags),
                    Quantity::SnrS => ratio(r.snr_s, &mut flags),
                    Quantity::SnrI => ratio(r.snr_i, &mut flags),
                    Quantity::NoiseS => cs.noise_probability(),
                    Quantity::NoiseI => ci.noise_probability(),
                    _ => unreachable!(),
                }
            }
        };
        if value.is_nan() && flags.is_empty() {
            flags.push("undefined".into());
        }
        out.push(Value { quantity: q, value, flags });
    }
    Ok(out)
}
