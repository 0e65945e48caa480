use std::f64::consts::PI;

use pairfilter::detection::{mu_opt_and_car_max, ChannelSpec, NoiseReference};
use pairfilter::entanglement::{
    max_tolerable_power, optimize_source, polarization_visibility, timebin_xy, visibility, visibility_vs_power, Basis,
    EntangledSource, PowerScenario, Receiver, ReceiverVariant, ThresholdPower, NONLOCALITY_THRESHOLD, QKD_THRESHOLD,
};
use pairfilter::presets::{deployed_timebin, MU_BOTH, MU_I, MU_S};
use pairfilter::units::dbm_to_mw;
use proptest::prelude::*;

const INTERFEROMETER: Receiver =
    Receiver { variant: ReceiverVariant::TimebinInterferometer, polarization_filtering: false };

fn operating_point(v_int: f64) -> EntangledSource<f64> {
    EntangledSource::new(MU_S, MU_I, MU_BOTH, v_int).unwrap()
}

fn channel(noise_per_mw: f64) -> ChannelSpec<f64> {
    ChannelSpec {
        eta_c: 0.6,
        eta_ch: 0.3,
        eta_r: 0.2,
        noise_per_mw,
        reference: NoiseReference::FiberOutput,
        delta_t: 200e-12,
        ..ChannelSpec::default()
    }
}

#[test]
fn ideal_bell_state_limit() {
    let ch = channel(0.0);
    let s = EntangledSource::new(1e-10, 1e-10, 1e-10, 1.0).unwrap();
    let r = visibility(&INTERFEROMETER, &s, &ch, &ch).unwrap();
    assert!((r.v_x - 1.0).abs() < 1e-8 && (r.v_z - 1.0).abs() < 1e-8);
    let p = polarization_visibility(&s, &ch, &ch);
    assert!((p.v_x - 1.0).abs() < 1e-8);
}

#[test]
fn operating_point_visibilities() {
    let ch = channel(0.0);
    let vz = MU_BOTH / (MU_BOTH + 2.0 * MU_S * MU_I);
    let ideal = visibility(&INTERFEROMETER, &operating_point(1.0), &ch, &ch).unwrap();
    assert!((ideal.v_x - 0.9913).abs() < 1e-4);
    assert!((ideal.v_x - vz).abs() < 1e-14 && (ideal.v_z - vz).abs() < 1e-14);
    let r = visibility(&INTERFEROMETER, &operating_point(0.98), &ch, &ch).unwrap();
    assert!((r.v_x - 0.98 * vz).abs() < 1e-14);
    assert!((r.v_x - 0.9716).abs() < 5e-4);
    assert!((r.v_z - 0.991).abs() < 1e-3);
}

#[test]
fn fringe_extremes_at_zero_and_pi() {
    let ch = channel(1e6).with_launch_power_mw(0.1);
    let s = operating_point(0.95);
    let c = |phi: f64| timebin_xy(phi, &s, &ch, &ch, false).c;
    let (hi, lo) = (c(0.0), c(PI));
    for k in 1..64 {
        let v = c(k as f64 * PI / 32.0);
        assert!(v <= hi && v >= lo);
    }
    let e = ch.eta();
    assert!(((hi - lo) - 0.25 * MU_BOTH * e * e * 0.95).abs() <= 1e-15 * hi);
}

#[test]
fn receiver_ordering_with_noise() {
    // V_int < 1 would put V_xy below the side bins at low power, and without
    // dark counts a perfect interferometer ties the switch
    let s = operating_point(1.0);
    let switch = Receiver::new(ReceiverVariant::TimebinSwitchZ, false);
    for mw in [0.001, 0.01, 0.1, 1.0, 10.0] {
        let ch = ChannelSpec { dark_rate: 100.0, ..channel(1e6).with_launch_power_mw(mw) };
        let a = visibility(&INTERFEROMETER, &s, &ch, &ch).unwrap();
        let b = visibility(&switch, &s, &ch, &ch).unwrap();
        assert!(a.v_z < a.v_x && a.v_x < b.v_z, "{mw} mW: {} {} {}", a.v_z, a.v_x, b.v_z);
    }
}

#[test]
fn perfect_interferometer_without_darks_ties_switch() {
    // halving both pairs and noise leaves the ratio unchanged; only V_int < 1
    // or dark counts separate the two
    let switch = Receiver::new(ReceiverVariant::TimebinSwitchZ, false);
    let ch = channel(1e6).with_launch_power_mw(1.0);
    let a = visibility(&INTERFEROMETER, &operating_point(1.0), &ch, &ch).unwrap();
    let b = visibility(&switch, &operating_point(1.0), &ch, &ch).unwrap();
    assert!((a.v_x - b.v_z).abs() < 1e-12);
    let dark = ChannelSpec { dark_rate: 100.0, ..ch };
    let a = visibility(&INTERFEROMETER, &operating_point(1.0), &dark, &dark).unwrap();
    let b = visibility(&switch, &operating_point(1.0), &dark, &dark).unwrap();
    assert!(a.v_x < b.v_z);
}

#[test]
fn dark_source_has_no_z_contrast() {
    let ch = channel(1e6).with_launch_power_mw(1.0);
    let s = EntangledSource::new(0.0, 0.0, 0.0, 1.0).unwrap();
    assert_eq!(visibility(&INTERFEROMETER, &s, &ch, &ch).unwrap().v_z, 0.0);
}

#[test]
fn polarizers_make_timebin_match_polarization() {
    let s = operating_point(1.0);
    let filtered = Receiver::new(ReceiverVariant::TimebinInterferometer, true);
    for mw in [0.0, 0.01, 0.3, 3.0, 30.0] {
        let ch = channel(1e6).with_launch_power_mw(mw);
        let t = visibility(&filtered, &s, &ch, &ch).unwrap();
        let p = polarization_visibility(&s, &ch, &ch);
        assert!((t.v_x - p.v_x).abs() < 1e-9);
    }
}

#[test]
fn polarization_pair_term_is_four_times_timebin() {
    let ch = channel(0.0);
    let s = operating_point(1.0);
    let p = polarization_visibility(&s, &ch, &ch);
    let hi = timebin_xy(0.0, &s, &ch, &ch, true);
    let pol_pair = p.x.c_max - p.x.c_min;
    let tb_pair = hi.c - hi.s_s * hi.s_i;
    assert!((pol_pair / tb_pair - 4.0).abs() < 1e-12);
}

#[test]
fn zero_power_reproduces_noise_free() {
    let sc = deployed_timebin();
    let curve = visibility_vs_power(&sc, &[0.0, 0.1, 1.0], None).unwrap();
    let quiet = visibility(&sc.receiver, &sc.source, &channel(0.0), &channel(0.0)).unwrap();
    assert!((curve.points[0].report.v_x - quiet.v_x).abs() < 1e-12);
    assert!((curve.points[0].report.v_z - quiet.v_z).abs() < 1e-12);
}

#[test]
fn deployed_threshold_crossings() {
    let sc = deployed_timebin();
    let grid: Vec<f64> = (0..=400).map(|k| dbm_to_mw(-20.0 + k as f64 * 0.05)).collect();
    let curve = visibility_vs_power(&sc, &grid, None).unwrap();
    let at = |b: Basis, th: f64| {
        curve.crossings.iter().find(|c| c.basis == b && c.threshold == th).and_then(|c| c.power_dbm).unwrap()
    };
    let qkd = at(Basis::X, QKD_THRESHOLD);
    let bell = at(Basis::X, NONLOCALITY_THRESHOLD);
    assert!((qkd - (-1.7)).abs() <= 1.5, "{qkd}");
    assert!((bell - (-0.4)).abs() <= 1.5, "{bell}");
    // bisection agrees with the interpolated crossing
    let ThresholdPower::Crossing(b) = max_tolerable_power(&sc, QKD_THRESHOLD, Basis::X, false, -20.0, 20.0).unwrap()
    else {
        panic!("no crossing");
    };
    assert!((b - qkd).abs() < 0.01);
}

#[test]
fn visibility_maximum_maps_to_car_maximum() {
    // V = (CAR − 1)/(CAR + 1) for a polarization analyzer; scaling CAR_max − 1
    // by δ_PS = 0.2 takes 96% to 82.8%
    let ch = ChannelSpec::effective(0.1, 0.0, 1.0, 1.0);
    let pol = Receiver::new(ReceiverVariant::PolarizationAnalyzer, true);
    let car_from_v = |v: f64| (1.0 + v) / (1.0 - v);
    // detected noise D giving CAR_max = 49 at δ = 1 with η = 0.1: 1 + η/(4D) = 49
    let detected = 0.1 / (4.0 * 48.0);
    let noisy = ChannelSpec { noise_density: detected, ..ch };
    let best = |delta: f64| {
        let src = EntangledSource::new(1e-3, 1e-3, delta * 1e-3, 1.0).unwrap();
        let (opt, ok) = optimize_source(&pol, &src, &noisy, &noisy, Basis::X);
        assert!(ok);
        visibility(&pol, &opt, &noisy, &noisy).unwrap().v_x
    };
    let v1 = best(1.0);
    let o = mu_opt_and_car_max(1.0, 1.0, 0.1, 0.1, detected, detected).unwrap();
    assert!((car_from_v(v1) / o.car_max.value() - 1.0).abs() < 1e-4, "{v1}");
    assert!((v1 - 0.96).abs() < 1e-4);
    let v02 = best(0.2);
    assert!((v02 - 9.6 / 11.6).abs() < 1e-4, "{v02}");
}

#[test]
fn optimizer_finds_interior_peak() {
    let sc = deployed_timebin();
    let ch = sc.ch_s.with_launch_power_mw(0.5);
    let ci = sc.ch_i.with_launch_power_mw(0.5);
    let (opt, ok) = optimize_source(&sc.receiver, &sc.source, &ch, &ci, Basis::X);
    assert!(ok);
    let v = |s: &EntangledSource<f64>| visibility(&sc.receiver, s, &ch, &ci).unwrap().v_x;
    let peak = v(&opt);
    for k in [0.5, 0.9, 1.1, 2.0] {
        assert!(v(&opt.at_mu_total(opt.mu_total() * k)) <= peak * (1.0 + 1e-4));
    }
    assert!(peak >= v(&sc.source));
}

fn any_source() -> impl Strategy<Value = EntangledSource<f64>> {
    (1e-5..1e-2f64, 0.5..2.0f64, 0.05..1.0f64, 0.8..1.0f64)
        .prop_map(|(ms, k, f, v)| EntangledSource::new(ms, ms * k, f * ms.min(ms * k), v).unwrap())
}

fn any_receiver() -> impl Strategy<Value = Receiver> {
    (0..3usize, any::<bool>()).prop_map(|(k, pol)| {
        let variant = [
            ReceiverVariant::TimebinInterferometer,
            ReceiverVariant::TimebinSwitchZ,
            ReceiverVariant::PolarizationAnalyzer,
        ][k];
        Receiver::new(variant, pol)
    })
}

proptest! {
    #[test]
    fn visibility_bounded_and_falls_with_power(src in any_source(), rx in any_receiver(), slope in 1e3..1e7f64) {
        let sc = PowerScenario { source: src, ch_s: channel(slope), ch_i: channel(slope * 1.1), receiver: rx };
        let grid: Vec<f64> = (0..40).map(|k| dbm_to_mw(-30.0 + k as f64)).collect();
        let curve = visibility_vs_power(&sc, &grid, None).unwrap();
        for w in curve.points.windows(2) {
            for b in [Basis::X, Basis::Y, Basis::Z] {
                let (v0, v1) = (w[0].report.basis(b), w[1].report.basis(b));
                prop_assert!((0.0..=1.0).contains(&v1));
                prop_assert!(v1 <= v0 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn noise_free_closed_forms(src in any_source()) {
        let ch = channel(0.0);
        let r = visibility(&INTERFEROMETER, &src, &ch, &ch).unwrap();
        let v = src.mu_both / (src.mu_both + 2.0 * src.mu_s * src.mu_i);
        prop_assert!((r.v_z - v).abs() < 1e-12);
        prop_assert!((r.v_x - src.v_int * v).abs() < 1e-12);
    }

    #[test]
    fn polarizer_never_hurts(src in any_source(), rx in any_receiver(), mw in 0.0..10.0f64) {
        let ch = channel(1e6).with_launch_power_mw(mw);
        let off = visibility(&Receiver::new(rx.variant, false), &src, &ch, &ch).unwrap();
        let on = visibility(&Receiver::new(rx.variant, true), &src, &ch, &ch).unwrap();
        prop_assert!(on.v_x >= off.v_x && on.v_z >= off.v_z);
    }

    #[test]
    fn switch_z_matches_xy_with_polarizers(src in any_source(), mw in 0.0..10.0f64) {
        let src = EntangledSource { v_int: 1.0, ..src };
        let ch = channel(1e6).with_launch_power_mw(mw);
        let r = visibility(&Receiver::new(ReceiverVariant::TimebinSwitchZ, true), &src, &ch, &ch).unwrap();
        prop_assert!((r.v_x - r.v_z).abs() < 1e-9);
    }

    #[test]
    fn fringe_pairs_sum_to_constant(src in any_source(), phi in 0.0..6.3f64, mw in 0.0..1.0f64, pol in any::<bool>()) {
        let ch = channel(1e6).with_launch_power_mw(mw);
        let sum = |p: f64| timebin_xy(p, &src, &ch, &ch, pol).c + timebin_xy(p + PI, &src, &ch, &ch, pol).c;
        prop_assert!((sum(phi) - sum(0.0)).abs() <= 1e-14 * sum(0.0));
    }
}
