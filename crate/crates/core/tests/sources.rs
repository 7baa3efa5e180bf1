use qng_core::sources::{
    spdc_pulsed_heralded, BackgroundCoupling, IdealSourceConfig, ModeStatistics,
    QuantumDotConfig, SourceConfig, SpdcConfig,
};
use qng_core::{PhotonNumberDistribution, Transmittance};

fn max_diff(a: &PhotonNumberDistribution, b: &PhotonNumberDistribution) -> f64 {
    let n = a.probs().len().max(b.probs().len());
    (0..n).map(|i| (a.get(i) - b.get(i)).abs()).fold(0.0, f64::max)
}

fn sources() -> Vec<SourceConfig> {
    let mut out = vec![
        SourceConfig::Ideal(IdealSourceConfig::new(0.7)),
        SourceConfig::QuantumDot(QuantumDotConfig::new(0.3, 0.01, BackgroundCoupling::SourceCorrelated)),
        SourceConfig::QuantumDot(QuantumDotConfig::new(0.3, 0.2, BackgroundCoupling::Independent)),
    ];
    for stats in [ModeStatistics::Thermal, ModeStatistics::Poissonian] {
        out.push(SourceConfig::Spdc(SpdcConfig {
            eta_trigger: 0.4,
            eta_signal: 0.6,
            jitter_sigma_s: 0.5e-9,
            mode_statistics: stats,
            ..SpdcConfig::pulsed(0.05, 80e6, 2e-9)
        }));
        out.push(SourceConfig::Spdc(SpdcConfig {
            eta_signal: 0.6,
            jitter_sigma_s: 0.3e-9,
            mode_statistics: stats,
            ..SpdcConfig::cw(2e6, 1e6, 2e-9)
        }));
    }
    out
}

#[test]
fn loss_commutes_with_source_efficiencies() {
    for s in sources() {
        for t in [1.0, 0.5, 0.1, 1e-3, 0.0] {
            let t = Transmittance::new(t).unwrap();
            let lossy = s.heralded_state().unwrap().apply_loss(t);
            let rebuilt = s.attenuated(t).heralded_state().unwrap();
            assert!(max_diff(&lossy, &rebuilt) < 1e-12, "{s:?} at {t:?}");
        }
    }
}

#[test]
fn generated_states_are_valid() {
    for s in sources() {
        let d = s.heralded_state().unwrap();
        assert!(PhotonNumberDistribution::new(d.probs().to_vec()).is_ok());
        assert!((d.total() - 1.0).abs() < 1e-9);
        s.reported_clicks().unwrap().validate().unwrap();
    }
}

#[test]
fn trigger_efficiency_leaves_low_gain_state_unchanged() {
    let base = SpdcConfig {
        eta_signal: 0.5,
        ..SpdcConfig::pulsed(1e-6, 80e6, 2e-9)
    };
    let perfect = spdc_pulsed_heralded(&base).unwrap();
    let lossy = spdc_pulsed_heralded(&SpdcConfig {
        eta_trigger: 0.3,
        ..base
    })
    .unwrap();
    assert!(max_diff(&perfect.state, &lossy.state) < 1e-6);
    assert!((lossy.trigger_prob / perfect.trigger_prob - 0.3).abs() < 1e-5);
}

#[test]
fn trigger_inefficiency_reweights_multiphotons_upward() {
    let mut last = 0.0;
    for eta_t in [1.0, 0.7, 0.4, 0.1, 0.01] {
        let h = spdc_pulsed_heralded(&SpdcConfig {
            eta_trigger: eta_t,
            eta_signal: 0.5,
            ..SpdcConfig::pulsed(0.01, 80e6, 2e-9)
        })
        .unwrap();
        let p2 = h.state.multiphoton();
        assert!(p2 > last, "eta_t {eta_t}: {p2} <= {last}");
        last = p2;
    }
}

#[test]
fn multiphoton_is_linear_in_window_and_gain() {
    for r_bg_tau in [1e-5, 1e-4, 1e-3] {
        let p2 = |tau: f64| {
            SourceConfig::Spdc(SpdcConfig {
                eta_signal: 0.3,
                ..SpdcConfig::cw(r_bg_tau / 1e-9, 1e6, tau)
            })
            .reported_clicks()
            .unwrap()
            .p2plus
        };
        let ratio = p2(2e-9) / p2(1e-9);
        assert!((ratio / 2.0 - 1.0).abs() < 0.02, "r_bg tau {r_bg_tau}: {ratio}");
    }
    for g in [1e-5, 1e-4, 5e-4] {
        let p2 = |g: f64| {
            SourceConfig::Spdc(SpdcConfig {
                eta_signal: 0.3,
                ..SpdcConfig::pulsed(g, 80e6, 2e-9)
            })
            .reported_clicks()
            .unwrap()
            .p2plus
        };
        let ratio = p2(2.0 * g) / p2(g);
        assert!((ratio / 2.0 - 1.0).abs() < 0.02, "g {g}: {ratio}");
    }
}

#[test]
fn documents_parse_from_json() {
    let doc = r#"{"kind": "spdc_cw", "r_bg_hz": 1e5, "pair_rate_hz": 2e5, "tau_s": 1e-9, "eta_signal": 0.2}"#;
    let s: SourceConfig = serde_json::from_str(doc).unwrap();
    let SourceConfig::Spdc(c) = s else { panic!() };
    assert_eq!(c.eta_signal, 0.2);
    assert_eq!(c.eta_trigger, 1.0);
    assert_eq!(c.mode_statistics, ModeStatistics::Poissonian);
    assert!(serde_json::from_str::<SourceConfig>(r#"{"kind": "laser"}"#).is_err());
}
