//! Analytic photon statistics of heralded single-photon sources.
//!
//! Every model returns the photon-number distribution of the signal arm as it
//! reaches the autocorrelation splitter, conditioned on a herald.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    make_geometric, make_poisson, make_thermal, ClickProbabilities, PhotonNumberDistribution,
    Transmittance,
};

/// Repetition rate assumed for ideal and quantum-dot sources when a config
/// omits it.
pub const DEFAULT_REP_RATE_HZ: f64 = 80e6;

fn default_rep_rate() -> f64 {
    DEFAULT_REP_RATE_HZ
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} must lie in [0, 1]")))
    }
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} must be finite and >= 0")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} = {v} must be finite and > 0")))
    }
}

/// `eta |1><1| + (1 - eta) |0><0|`, the loss-only single photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealSourceConfig {
    pub eta: f64,
    #[serde(default = "default_rep_rate")]
    pub rep_rate_hz: f64,
}

impl IdealSourceConfig {
    pub fn new(eta: f64) -> Self {
        IdealSourceConfig {
            eta,
            rep_rate_hz: DEFAULT_REP_RATE_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta", self.eta)?;
        check_positive("rep_rate_hz", self.rep_rate_hz)
    }
}

/// Statistics of the photons sharing one coincidence window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeStatistics {
    /// One mode: geometric counts.
    Thermal,
    /// Many modes: Poisson counts.
    Poissonian,
}

/// Pump regime of an SPDC source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum SpdcRegime {
    Pulsed {
        rep_rate_hz: f64,
    },
    Cw {
        /// Accidental photons reaching the signal splitter per second; the
        /// mean background count in a window is `r_bg_hz * tau_s`.
        r_bg_hz: f64,
        /// Pair generation rate, used only by the time-tag simulator.
        pair_rate_hz: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdcConfig {
    /// Mean-per-mode gain of the two-mode state `(1 - g) g^n` (pulsed: per pulse).
    pub g: f64,
    pub regime: SpdcRegime,
    /// Coincidence window, seconds.
    pub tau_s: f64,
    pub eta_trigger: f64,
    pub eta_signal: f64,
    /// Combined trigger-signal timing jitter, seconds.
    pub jitter_sigma_s: f64,
    pub mode_statistics: ModeStatistics,
}

impl SpdcConfig {
    pub fn pulsed(g: f64, rep_rate_hz: f64, tau_s: f64) -> Self {
        SpdcConfig {
            g,
            regime: SpdcRegime::Pulsed { rep_rate_hz },
            tau_s,
            eta_trigger: 1.0,
            eta_signal: 1.0,
            jitter_sigma_s: 0.0,
            mode_statistics: ModeStatistics::Thermal,
        }
    }

    pub fn cw(r_bg_hz: f64, pair_rate_hz: f64, tau_s: f64) -> Self {
        SpdcConfig {
            g: 0.0,
            regime: SpdcRegime::Cw {
                r_bg_hz,
                pair_rate_hz,
            },
            tau_s,
            eta_trigger: 1.0,
            eta_signal: 1.0,
            jitter_sigma_s: 0.0,
            mode_statistics: ModeStatistics::Poissonian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.g) {
            return Err(Error::Validation(format!("g = {} must lie in [0, 1)", self.g)));
        }
        check_positive("tau_s", self.tau_s)?;
        check_probability("eta_trigger", self.eta_trigger)?;
        check_probability("eta_signal", self.eta_signal)?;
        check_nonnegative("jitter_sigma_s", self.jitter_sigma_s)?;
        match self.regime {
            SpdcRegime::Pulsed { rep_rate_hz } => check_positive("rep_rate_hz", rep_rate_hz),
            SpdcRegime::Cw {
                r_bg_hz,
                pair_rate_hz,
            } => {
                check_nonnegative("r_bg_hz", r_bg_hz)?;
                check_nonnegative("pair_rate_hz", pair_rate_hz)
            }
        }
    }

    pub fn is_pulsed(&self) -> bool {
        matches!(self.regime, SpdcRegime::Pulsed { .. })
    }

    /// Signal-arm transmission including the jitter-induced window loss.
    pub fn effective_signal_efficiency(&self) -> f64 {
        self.eta_signal * capture_fraction(self.tau_s, self.jitter_sigma_s)
    }
}

/// How quantum-dot background relates to the dot emission in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundCoupling {
    /// Report only dot-attributed singles and background-only multiphotons,
    /// so that p2+ stays fixed while the collection efficiency changes.
    Independent,
    #[default]
    SourceCorrelated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumDotConfig {
    pub eta_col: f64,
    /// Mean background photons per coincidence window.
    pub lambda_bg: f64,
    #[serde(default)]
    pub bg_coupling: BackgroundCoupling,
    #[serde(default = "default_rep_rate")]
    pub rep_rate_hz: f64,
}

impl QuantumDotConfig {
    pub fn new(eta_col: f64, lambda_bg: f64, bg_coupling: BackgroundCoupling) -> Self {
        QuantumDotConfig {
            eta_col,
            lambda_bg,
            bg_coupling,
            rep_rate_hz: DEFAULT_REP_RATE_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_col", self.eta_col)?;
        check_nonnegative("lambda_bg", self.lambda_bg)?;
        check_positive("rep_rate_hz", self.rep_rate_hz)
    }
}

/// Any supported source.
///
/// The JSON form is flat and tagged by `kind`:
/// `{"kind": "spdc_pulsed", "g": 0.01, "rep_rate_hz": 8e7, "tau_s": 2e-9, ...}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SourceDoc", into = "SourceDoc")]
pub enum SourceConfig {
    Ideal(IdealSourceConfig),
    Spdc(SpdcConfig),
    QuantumDot(QuantumDotConfig),
}

fn default_one() -> f64 {
    1.0
}

fn default_thermal() -> ModeStatistics {
    ModeStatistics::Thermal
}

fn default_poissonian() -> ModeStatistics {
    ModeStatistics::Poissonian
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SourceDoc {
    Ideal {
        eta: f64,
        #[serde(default = "default_rep_rate")]
        rep_rate_hz: f64,
    },
    SpdcPulsed {
        g: f64,
        rep_rate_hz: f64,
        tau_s: f64,
        #[serde(default = "default_one")]
        eta_trigger: f64,
        #[serde(default = "default_one")]
        eta_signal: f64,
        #[serde(default)]
        jitter_sigma_s: f64,
        #[serde(default = "default_thermal")]
        mode_statistics: ModeStatistics,
    },
    SpdcCw {
        r_bg_hz: f64,
        pair_rate_hz: f64,
        tau_s: f64,
        #[serde(default = "default_one")]
        eta_trigger: f64,
        #[serde(default = "default_one")]
        eta_signal: f64,
        #[serde(default)]
        jitter_sigma_s: f64,
        #[serde(default = "default_poissonian")]
        mode_statistics: ModeStatistics,
    },
    QuantumDot {
        eta_col: f64,
        lambda_bg: f64,
        #[serde(default)]
        bg_coupling: BackgroundCoupling,
        #[serde(default = "default_rep_rate")]
        rep_rate_hz: f64,
    },
}

impl From<SourceDoc> for SourceConfig {
    fn from(doc: SourceDoc) -> Self {
        match doc {
            SourceDoc::Ideal { eta, rep_rate_hz } => {
                SourceConfig::Ideal(IdealSourceConfig { eta, rep_rate_hz })
            }
            SourceDoc::SpdcPulsed {
                g,
                rep_rate_hz,
                tau_s,
                eta_trigger,
                eta_signal,
                jitter_sigma_s,
                mode_statistics,
            } => SourceConfig::Spdc(SpdcConfig {
                g,
                regime: SpdcRegime::Pulsed { rep_rate_hz },
                tau_s,
                eta_trigger,
                eta_signal,
                jitter_sigma_s,
                mode_statistics,
            }),
            SourceDoc::SpdcCw {
                r_bg_hz,
                pair_rate_hz,
                tau_s,
                eta_trigger,
                eta_signal,
                jitter_sigma_s,
                mode_statistics,
            } => SourceConfig::Spdc(SpdcConfig {
                g: 0.0,
                regime: SpdcRegime::Cw {
                    r_bg_hz,
                    pair_rate_hz,
                },
                tau_s,
                eta_trigger,
                eta_signal,
                jitter_sigma_s,
                mode_statistics,
            }),
            SourceDoc::QuantumDot {
                eta_col,
                lambda_bg,
                bg_coupling,
                rep_rate_hz,
            } => SourceConfig::QuantumDot(QuantumDotConfig {
                eta_col,
                lambda_bg,
                bg_coupling,
                rep_rate_hz,
            }),
        }
    }
}

impl From<SourceConfig> for SourceDoc {
    fn from(cfg: SourceConfig) -> Self {
        match cfg {
            SourceConfig::Ideal(c) => SourceDoc::Ideal {
                eta: c.eta,
                rep_rate_hz: c.rep_rate_hz,
            },
            SourceConfig::Spdc(c) => match c.regime {
                SpdcRegime::Pulsed { rep_rate_hz } => SourceDoc::SpdcPulsed {
                    g: c.g,
                    rep_rate_hz,
                    tau_s: c.tau_s,
                    eta_trigger: c.eta_trigger,
                    eta_signal: c.eta_signal,
                    jitter_sigma_s: c.jitter_sigma_s,
                    mode_statistics: c.mode_statistics,
                },
                SpdcRegime::Cw {
                    r_bg_hz,
                    pair_rate_hz,
                } => SourceDoc::SpdcCw {
                    r_bg_hz,
                    pair_rate_hz,
                    tau_s: c.tau_s,
                    eta_trigger: c.eta_trigger,
                    eta_signal: c.eta_signal,
                    jitter_sigma_s: c.jitter_sigma_s,
                    mode_statistics: c.mode_statistics,
                },
            },
            SourceConfig::QuantumDot(c) => SourceDoc::QuantumDot {
                eta_col: c.eta_col,
                lambda_bg: c.lambda_bg,
                bg_coupling: c.bg_coupling,
                rep_rate_hz: c.rep_rate_hz,
            },
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceConfig::Ideal(c) => c.validate(),
            SourceConfig::Spdc(c) => c.validate(),
            SourceConfig::QuantumDot(c) => c.validate(),
        }
    }

    /// Heralded signal-arm photon-number distribution.
    pub fn heralded_state(&self) -> Result<PhotonNumberDistribution> {
        self.validate()?;
        match self {
            SourceConfig::Ideal(c) => ideal_state(c),
            SourceConfig::Spdc(c) if c.is_pulsed() => spdc_pulsed_heralded(c).map(|h| h.state),
            SourceConfig::Spdc(c) => spdc_cw_heralded(c),
            SourceConfig::QuantumDot(c) => quantum_dot_state(c).map(|q| q.state),
        }
    }

    /// Click probabilities used for reporting: the photon-number marginals,
    /// except for a quantum dot in [`BackgroundCoupling::Independent`] mode.
    pub fn reported_clicks(&self) -> Result<ClickProbabilities> {
        match self {
            SourceConfig::QuantumDot(c) => {
                c.validate()?;
                Ok(quantum_dot_state(c)?.reported)
            }
            _ => Ok(self.heralded_state()?.click_probabilities()),
        }
    }

    /// The same source seen through an extra attenuator of transmittance `t`
    /// in the signal arm. Accidental background passes the attenuator too.
    pub fn attenuated(&self, t: Transmittance) -> Self {
        let t = t.value();
        match *self {
            SourceConfig::Ideal(c) => SourceConfig::Ideal(IdealSourceConfig {
                eta: c.eta * t,
                ..c
            }),
            SourceConfig::Spdc(c) => {
                let regime = match c.regime {
                    SpdcRegime::Cw {
                        r_bg_hz,
                        pair_rate_hz,
                    } => SpdcRegime::Cw {
                        r_bg_hz: r_bg_hz * t,
                        pair_rate_hz,
                    },
                    pulsed => pulsed,
                };
                SourceConfig::Spdc(SpdcConfig {
                    eta_signal: c.eta_signal * t,
                    regime,
                    ..c
                })
            }
            SourceConfig::QuantumDot(c) => SourceConfig::QuantumDot(QuantumDotConfig {
                eta_col: c.eta_col * t,
                lambda_bg: c.lambda_bg * t,
                ..c
            }),
        }
    }

    /// Pulse repetition rate, `None` for CW pumping.
    pub fn rep_rate_hz(&self) -> Option<f64> {
        match self {
            SourceConfig::Ideal(c) => Some(c.rep_rate_hz),
            SourceConfig::Spdc(c) => match c.regime {
                SpdcRegime::Pulsed { rep_rate_hz } => Some(rep_rate_hz),
                SpdcRegime::Cw { .. } => None,
            },
            SourceConfig::QuantumDot(c) => Some(c.rep_rate_hz),
        }
    }
}

pub fn ideal_state(cfg: &IdealSourceConfig) -> Result<PhotonNumberDistribution> {
    check_probability("eta", cfg.eta)?;
    PhotonNumberDistribution::bernoulli(cfg.eta)
}

/// Probability that a detection delayed by Gaussian jitter of std `sigma`
/// lands in a window of width `tau` centred on the mean delay,
/// `2 Phi(tau / 2 sigma) - 1`.
pub fn capture_fraction(tau: f64, jitter_sigma: f64) -> f64 {
    if jitter_sigma <= 0.0 {
        return if tau > 0.0 { 1.0 } else { 0.0 };
    }
    if tau <= 0.0 {
        return 0.0;
    }
    libm::erf(tau / (2.0 * jitter_sigma * std::f64::consts::SQRT_2))
}

/// Photon-pair number distribution of one pulse or window.
pub fn pair_distribution(g: f64, stats: ModeStatistics) -> Result<PhotonNumberDistribution> {
    match stats {
        ModeStatistics::Thermal => make_geometric(g),
        ModeStatistics::Poissonian => make_poisson(g / (1.0 - g)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedState {
    pub state: PhotonNumberDistribution,
    /// Per-pulse probability of a trigger click.
    pub trigger_prob: f64,
}

/// Herald-click probability of `n` trigger photons, `1 - (1 - eta)^n`.
fn herald_weight(n: usize, eta_trigger: f64) -> f64 {
    if eta_trigger >= 1.0 {
        return if n > 0 { 1.0 } else { 0.0 };
    }
    -((n as f64) * (-eta_trigger).ln_1p()).exp_m1()
}

/// Pulsed SPDC heralded by a trigger click.
///
/// Pair numbers are reweighted by the herald probability (Bayes), then the
/// signal photons are thinned by `eta_signal * capture(tau, jitter)`. The
/// `g -> 0` and `eta_trigger -> 0` limits are returned when no herald can
/// occur.
pub fn spdc_pulsed_heralded(cfg: &SpdcConfig) -> Result<HeraldedState> {
    if !cfg.is_pulsed() {
        return Err(Error::Usage(
            "spdc_pulsed_heralded needs a pulsed configuration".into(),
        ));
    }
    cfg.validate()?;
    let pairs = pair_distribution(cfg.g, cfg.mode_statistics)?;
    let weights: Vec<f64> = pairs
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| p * herald_weight(n, cfg.eta_trigger))
        .collect();
    let trigger_prob: f64 = weights.iter().sum();

    let heralded = if trigger_prob > 0.0 {
        weights.iter().map(|w| w / trigger_prob).collect()
    } else if cfg.g > 0.0 {
        // eta_trigger -> 0: herald probability becomes proportional to n.
        let mean = pairs.mean_photon_number();
        pairs
            .probs()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p / mean)
            .collect()
    } else {
        PhotonNumberDistribution::fock(1).probs().to_vec()
    };
    let heralded = PhotonNumberDistribution::from_model(heralded);
    let eta = Transmittance::new(cfg.effective_signal_efficiency())?;
    Ok(HeraldedState {
        state: heralded.apply_loss(eta),
        trigger_prob,
    })
}

/// Background count of the given statistics and mean.
pub fn background_counts(mean: f64, stats: ModeStatistics) -> Result<PhotonNumberDistribution> {
    match stats {
        ModeStatistics::Poissonian => make_poisson(mean),
        ModeStatistics::Thermal => make_thermal(mean),
    }
}

/// CW SPDC: one heralded twin plus accidental background in the window.
pub fn spdc_cw_heralded(cfg: &SpdcConfig) -> Result<PhotonNumberDistribution> {
    let SpdcRegime::Cw { r_bg_hz, .. } = cfg.regime else {
        return Err(Error::Usage("spdc_cw_heralded needs a cw configuration".into()));
    };
    cfg.validate()?;
    let twin = PhotonNumberDistribution::bernoulli(cfg.effective_signal_efficiency())?;
    let background = background_counts(r_bg_hz * cfg.tau_s, cfg.mode_statistics)?;
    Ok(twin.convolve(&background))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumDotState {
    /// Exact photon-number distribution.
    pub state: PhotonNumberDistribution,
    /// Click probabilities under the configured bookkeeping.
    pub reported: ClickProbabilities,
}

/// Quantum-dot emission `Bernoulli(eta_col)` with Poisson background.
pub fn quantum_dot_state(cfg: &QuantumDotConfig) -> Result<QuantumDotState> {
    cfg.validate()?;
    let dot = PhotonNumberDistribution::bernoulli(cfg.eta_col)?;
    let background = make_poisson(cfg.lambda_bg)?;
    let state = dot.convolve(&background);
    let reported = match cfg.bg_coupling {
        BackgroundCoupling::SourceCorrelated => state.click_probabilities(),
        BackgroundCoupling::Independent => {
            let p1 = cfg.eta_col * background.get(0);
            let p2plus = background.multiphoton();
            ClickProbabilities::from_p1_p2plus(p1, p2plus)?
        }
    };
    Ok(QuantumDotState { state, reported })
}
