mod common;

use common::{estimate_run, pulsed_spdc, run, z};
use qng_core::estimation::{
    invert_click_statistics, predict_clicks, split_two_photon, trigger_rate_hz, InvertedStatistics,
};
use qng_core::sources::{
    BackgroundCoupling, IdealSourceConfig, QuantumDotConfig, SourceConfig, SpdcConfig,
};
use qng_core::timetag::{Detectors, RunConfig, RunLength};
use qng_core::witnesses::qng_approx;
use qng_core::{ClickProbabilities, Transmittance};
use proptest::prelude::*;

/// Pulses giving about `triggers` heralds.
fn pulses_for(cfg: &RunConfig, triggers: f64) -> u64 {
    let nu = cfg.source.rep_rate_hz().unwrap();
    (triggers * nu / trigger_rate_hz(cfg).unwrap()).ceil() as u64
}

fn assert_consistent(name: &str, cfg: &RunConfig, tau: f64) {
    let est = estimate_run(cfg, tau);
    let model = predict_clicks(cfg, tau, 0.0).unwrap();
    assert!(est.n_trigger >= 1_000_000, "{name}: {}", est.n_trigger);
    for (e, m, s) in [
        (est.clicks.p1, model.p1, est.clicks.sigma_p1),
        (est.clicks.p2plus, model.p2plus, est.clicks.sigma_p2plus),
    ] {
        assert!(z(e, m, s) < 3.0, "{name}: estimate {e} model {m} sigma {s}");
    }
}

#[test]
fn estimates_converge_to_pulsed_spdc_model() {
    let mut cfg = run(pulsed_spdc(0.05, 0.6), 0, 31);
    cfg.detectors.a.dark_rate_hz = 2e3;
    cfg.detectors.b.efficiency = 0.8;
    cfg.length = RunLength::Pulses(pulses_for(&cfg, 1.05e6));
    assert_consistent("pulsed", &cfg, 2e-9);
}

#[test]
fn estimates_converge_to_cw_model() {
    let cw = SpdcConfig {
        eta_signal: 0.4,
        ..SpdcConfig::cw(1e6, 1e6, 2e-9)
    };
    let mut cfg = run(SourceConfig::Spdc(cw), 0, 32);
    cfg.length = RunLength::DurationS(1.1);
    cfg.detectors.trigger.dark_rate_hz = 1e3;
    assert_consistent("cw", &cfg, 2e-9);
    assert_consistent("cw wide window", &cfg, 20e-9);
}

#[test]
fn estimates_converge_to_quantum_dot_and_ideal_models() {
    let qd = QuantumDotConfig::new(0.2, 0.02, BackgroundCoupling::SourceCorrelated);
    let mut cfg = run(SourceConfig::QuantumDot(qd), 1_050_000, 33);
    cfg.attenuator = Transmittance::from_db(3.0).unwrap();
    assert_consistent("quantum dot", &cfg, 2e-9);
    let mut cfg = run(SourceConfig::Ideal(IdealSourceConfig::new(0.7)), 1_050_000, 34);
    cfg.detectors.a.jitter_sigma_s = 1.5e-9;
    assert_consistent("ideal", &cfg, 2e-9);
}

#[test]
fn balanced_splitting_halves_two_photon_clicks() {
    let mut cfg = run(pulsed_spdc(0.01, 1.0), 1_000_000_000, 35);
    cfg.detectors = Detectors::perfect();
    let est = estimate_run(&cfg, 2e-9);
    let heralded = cfg.source.heralded_state().unwrap();
    let photon_p2 = heralded.multiphoton();
    assert!((photon_p2 - 0.01).abs() < 1e-12);
    // Splitting oracle: n photons fire both detectors with 1 - 2^(1 - n).
    let oracle: f64 = heralded
        .probs()
        .iter()
        .enumerate()
        .skip(2)
        .map(|(n, p)| p * (1.0 - 2f64.powi(1 - n as i32)))
        .sum();
    assert!(z(est.clicks.p2plus, oracle, est.clicks.sigma_p2plus) < 3.0);
    let ratio = est.clicks.p2plus / photon_p2;
    assert!(z(ratio, 0.5, est.clicks.sigma_p2plus / photon_p2) < 3.0, "{ratio}");
}

#[test]
fn dark_floor_at_zero_transmittance() {
    let mut cfg = run(pulsed_spdc(0.01, 0.3), 100_000_000, 36);
    for d in [&mut cfg.detectors.trigger, &mut cfg.detectors.a, &mut cfg.detectors.b] {
        d.dark_rate_hz = 1e4;
    }
    cfg.attenuator = Transmittance::ZERO;
    let est = estimate_run(&cfg, 2e-9);
    let floor = 2.0 * 1e4 * 2e-9;
    assert!(z(est.clicks.p1, floor, est.clicks.sigma_p1) < 3.0, "{}", est.clicks.p1);
}

/// Attenuation at which the predicted clicks stop witnessing QNG.
fn click_depth_db(cfg: &RunConfig, tau: f64) -> f64 {
    let holds = |db: f64| {
        let c = RunConfig {
            attenuator: Transmittance::from_db(db).unwrap(),
            ..*cfg
        };
        qng_approx(&predict_clicks(&c, tau, 0.0).unwrap())
    };
    let (mut lo, mut hi) = (0.0, 60.0);
    assert!(holds(lo) && !holds(hi));
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

#[test]
fn witness_pipeline_is_monotonic() {
    let mut cfg = run(pulsed_spdc(0.1, 0.8), 0, 37);
    cfg.length = RunLength::Pulses(pulses_for(&cfg, 1e6));
    let at0 = estimate_run(&cfg, 2e-9);
    assert!(qng_approx(&at0.clicks));
    assert!(2.0 / 3.0 * at0.clicks.p1.powi(3) - at0.clicks.p2plus > 3.0 * at0.clicks.sigma_p2plus);

    let depth = click_depth_db(&cfg, 2e-9);
    let beyond = RunConfig {
        attenuator: Transmittance::from_db(depth + 3.0).unwrap(),
        seed: 38,
        ..cfg
    };
    let model = predict_clicks(&beyond, 2e-9, 0.0).unwrap();
    let n = 1e6;
    let sigma = (model.p2plus * (1.0 - model.p2plus) / n).sqrt();
    assert!(model.p2plus - 2.0 / 3.0 * model.p1.powi(3) > 3.0 * sigma);
    let est = estimate_run(&beyond, 2e-9);
    assert!(!qng_approx(&est.clicks), "{:?}", est.clicks);
}

proptest! {
    #[test]
    fn inversion_round_trip(p1 in 0.0f64..1.0, frac in 0.0f64..1.0, two in 0.0f64..1.0) {
        let p1 = p1 * frac;
        let p2 = (1.0 - p1) * two * frac;
        let d = InvertedStatistics { p0: 1.0 - p1 - p2, p1, p2 };
        let back = invert_click_statistics(&split_two_photon(&d)).unwrap();
        prop_assert!((back.p0 - d.p0).abs() < 1e-12);
        prop_assert!((back.p1 - d.p1).abs() < 1e-12);
        prop_assert!((back.p2 - d.p2).abs() < 1e-12);
    }
}

#[test]
fn estimate_json_shape() {
    let mut cfg = run(pulsed_spdc(0.05, 0.5), 2_000_000, 1);
    cfg.detectors = Detectors::perfect();
    let est = estimate_run(&cfg, 2e-9);
    let v: serde_json::Value = serde_json::to_value(est).unwrap();
    for key in ["p0", "p1", "p2plus", "sigma_p0", "sigma_p1", "sigma_p2plus", "n_trigger", "tau_s"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let back: ClickProbabilities = serde_json::from_value(v).unwrap();
    assert_eq!(back, est.clicks);
}
