//! Click-probability estimation from heralded autocorrelation time tags.
//!
//! Each trigger opens a window of width `tau` centred `offset` after it. The
//! window is classified by which signal detectors fired inside it: none, A
//! only, B only, or both. Windows of different triggers may overlap; every
//! trigger is analysed independently.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ClickProbabilities, PhotonNumberDistribution};
use crate::sources::{
    pair_distribution, quantum_dot_state, spdc_pulsed_heralded, QuantumDotConfig, SourceConfig,
    SpdcConfig, SpdcRegime,
};
use crate::timetag::{check_sorted, Channel, DetectorConfig, RunConfig, TimeTagRecord, PS_PER_S};

/// Half-width of the trigger-to-signal delay search, seconds.
pub const OFFSET_SEARCH_S: f64 = 50e-9;
/// Histogram bin of the delay search, seconds.
pub const OFFSET_BIN_S: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub n_trigger: u64,
    pub n_none: u64,
    pub n_a_only: u64,
    pub n_b_only: u64,
    pub n_both: u64,
}

impl CoincidenceCounts {
    fn merge(self, o: Self) -> Self {
        CoincidenceCounts {
            n_trigger: self.n_trigger + o.n_trigger,
            n_none: self.n_none + o.n_none,
            n_a_only: self.n_a_only + o.n_a_only,
            n_b_only: self.n_b_only + o.n_b_only,
            n_both: self.n_both + o.n_both,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.n_none + self.n_a_only + self.n_b_only + self.n_both == self.n_trigger
    }
}

/// Window geometry in integer picoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub tau_ps: i64,
    pub offset_ps: i64,
}

impl Window {
    pub fn new(tau_s: f64, offset_s: f64) -> Result<Self> {
        if !(tau_s > 0.0 && tau_s.is_finite()) {
            return Err(Error::Validation(format!("window tau = {tau_s} s must be > 0")));
        }
        if !offset_s.is_finite() {
            return Err(Error::Validation(format!("window offset {offset_s} s")));
        }
        let tau_ps = (tau_s * PS_PER_S).round() as i64;
        if tau_ps < 1 {
            return Err(Error::Validation(format!(
                "window tau = {tau_s} s is below the 1 ps time base"
            )));
        }
        Ok(Window {
            tau_ps,
            offset_ps: (offset_s * PS_PER_S).round() as i64,
        })
    }

    /// Half-open window `[lo, hi)` belonging to a trigger at `t`.
    pub fn bounds(&self, t: u64) -> (i64, i64) {
        let lo = t as i64 + self.offset_ps - self.tau_ps / 2;
        (lo, lo + self.tau_ps)
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_ps as f64 / PS_PER_S
    }
}

/// Per-channel timestamps of a sorted stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChannelTimes {
    pub trigger: Vec<u64>,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl ChannelTimes {
    pub fn from_stream(stream: &[TimeTagRecord]) -> Result<Self> {
        check_sorted(stream)?;
        let mut out = ChannelTimes::default();
        for r in stream {
            match r.channel {
                Channel::Trigger => out.trigger.push(r.timestamp_ps),
                Channel::SignalA => out.a.push(r.timestamp_ps),
                Channel::SignalB => out.b.push(r.timestamp_ps),
            }
        }
        Ok(out)
    }
}

/// Counts windows for triggers `range`, two-pointer over each signal channel.
fn count_range(times: &ChannelTimes, w: Window, range: std::ops::Range<usize>) -> CoincidenceCounts {
    let triggers = &times.trigger[range];
    let mut counts = CoincidenceCounts::default();
    let Some(&first) = triggers.first() else {
        return counts;
    };
    let start = |v: &[u64]| {
        let lo = w.bounds(first).0;
        v.partition_point(|&t| (t as i64) < lo)
    };
    let (mut ia, mut ib) = (start(&times.a), start(&times.b));
    for &t in triggers {
        let (lo, hi) = w.bounds(t);
        while ia < times.a.len() && (times.a[ia] as i64) < lo {
            ia += 1;
        }
        while ib < times.b.len() && (times.b[ib] as i64) < lo {
            ib += 1;
        }
        let a = ia < times.a.len() && (times.a[ia] as i64) < hi;
        let b = ib < times.b.len() && (times.b[ib] as i64) < hi;
        counts.n_trigger += 1;
        match (a, b) {
            (false, false) => counts.n_none += 1,
            (true, false) => counts.n_a_only += 1,
            (false, true) => counts.n_b_only += 1,
            (true, true) => counts.n_both += 1,
        }
    }
    counts
}

/// Serial single-pass classification of every trigger window.
pub fn count_coincidences(stream: &[TimeTagRecord], tau_s: f64, offset_s: f64) -> Result<CoincidenceCounts> {
    let w = Window::new(tau_s, offset_s)?;
    let times = ChannelTimes::from_stream(stream)?;
    Ok(count_range(&times, w, 0..times.trigger.len()))
}

/// Same result as [`count_coincidences`], with triggers split into `chunks`
/// partitions counted on the rayon pool.
pub fn count_coincidences_parallel(
    stream: &[TimeTagRecord],
    tau_s: f64,
    offset_s: f64,
    chunks: usize,
) -> Result<CoincidenceCounts> {
    let w = Window::new(tau_s, offset_s)?;
    let times = ChannelTimes::from_stream(stream)?;
    Ok(count_times_parallel(&times, w, chunks))
}

pub fn count_times_parallel(times: &ChannelTimes, w: Window, chunks: usize) -> CoincidenceCounts {
    let n = times.trigger.len();
    let size = n.div_ceil(chunks.max(1)).max(1);
    (0..n.div_ceil(size))
        .into_par_iter()
        .map(|i| count_range(times, w, i * size..((i + 1) * size).min(n)))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CoincidenceCounts::default(), CoincidenceCounts::merge)
}

/// Frequencies with binomial standard errors.
pub fn estimate(counts: &CoincidenceCounts) -> Result<ClickProbabilities> {
    if counts.n_trigger == 0 {
        return Err(Error::Domain("no trigger events to estimate from".into()));
    }
    if !counts.is_consistent() {
        return Err(Error::Validation(format!("inconsistent counts {counts:?}")));
    }
    let n = counts.n_trigger as f64;
    let p0 = counts.n_none as f64 / n;
    let p1 = (counts.n_a_only + counts.n_b_only) as f64 / n;
    let p2plus = counts.n_both as f64 / n;
    let sigma = |p: f64| (p * (1.0 - p) / n).max(0.0).sqrt();
    Ok(ClickProbabilities {
        p0,
        p1,
        p2plus,
        sigma_p0: sigma(p0),
        sigma_p1: sigma(p1),
        sigma_p2plus: sigma(p2plus),
    })
}

/// JSON document emitted by the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickEstimate {
    #[serde(flatten)]
    pub clicks: ClickProbabilities,
    pub n_trigger: u64,
    pub tau_s: f64,
    pub offset_s: f64,
}

pub fn estimate_stream(stream: &[TimeTagRecord], tau_s: f64, offset_s: f64) -> Result<ClickEstimate> {
    let w = Window::new(tau_s, offset_s)?;
    let times = ChannelTimes::from_stream(stream)?;
    let counts = count_times_parallel(&times, w, rayon::current_num_threads() * 4);
    Ok(ClickEstimate {
        clicks: estimate(&counts)?,
        n_trigger: counts.n_trigger,
        tau_s: w.tau_s(),
        offset_s: w.offset_ps as f64 / PS_PER_S,
    })
}

/// Photon-number distribution on `{0, 1, 2}` recovered from click
/// probabilities, assuming ideal detectors and a balanced splitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvertedStatistics {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn invert_click_statistics(p: &ClickProbabilities) -> Result<InvertedStatistics> {
    let out = InvertedStatistics {
        p0: p.p0,
        p1: p.p1 - p.p2plus,
        p2: 2.0 * p.p2plus,
    };
    if out.p0 < 0.0 || out.p1 < 0.0 || out.p2 < 0.0 {
        return Err(Error::Inversion(format!(
            "negative photon-number probability {out:?}; the two-photon support assumption fails"
        )));
    }
    Ok(out)
}

/// Forward map of [`invert_click_statistics`].
pub fn split_two_photon(d: &InvertedStatistics) -> ClickProbabilities {
    ClickProbabilities::exact(d.p0, d.p1 + d.p2 / 2.0, d.p2 / 2.0)
}

/// Trigger-to-signal delay, in seconds, of the strongest correlation peak.
///
/// Signal delays within [`OFFSET_SEARCH_S`] of each trigger are histogrammed
/// in [`OFFSET_BIN_S`] bins; starting from the modal bin, the window centre is
/// moved to the mean delay inside a three-bin window until it settles.
pub fn find_window_offset(stream: &[TimeTagRecord]) -> Result<f64> {
    let times = ChannelTimes::from_stream(stream)?;
    let span = (OFFSET_SEARCH_S * PS_PER_S) as i64;
    let bin = (OFFSET_BIN_S * PS_PER_S) as i64;
    let nbins = (2 * span / bin) as usize;
    let mut delays: Vec<i64> = Vec::new();
    for signal in [&times.a, &times.b] {
        let mut i = 0;
        for &t in &times.trigger {
            let lo = t as i64 - span;
            while i < signal.len() && (signal[i] as i64) < lo {
                i += 1;
            }
            let mut j = i;
            while j < signal.len() && (signal[j] as i64) < t as i64 + span {
                delays.push(signal[j] as i64 - t as i64);
                j += 1;
            }
        }
    }
    let mut hist = vec![0u64; nbins];
    for d in &delays {
        hist[(((d + span) / bin) as usize).min(nbins - 1)] += 1;
    }
    let (mode, &peak) = hist
        .iter()
        .enumerate()
        .max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i)))
        .expect("nonempty histogram");
    if peak == 0 {
        return Err(Error::Validation(format!(
            "no signal detections within {OFFSET_SEARCH_S} s of any trigger"
        )));
    }
    // Mean shift over a symmetric three-bin window, started at the modal bin.
    let mut centre = ((mode as i64) * bin - span) as f64 + 0.5 * bin as f64;
    let half = 1.5 * bin as f64;
    for _ in 0..50 {
        let (sum, n) = delays
            .iter()
            .map(|&d| d as f64)
            .filter(|d| (centre - half..centre + half).contains(d))
            .fold((0.0, 0u64), |(s, n), d| (s + d, n + 1));
        let next = sum / n as f64;
        let done = (next - centre).abs() < 0.5;
        centre = next;
        if done {
            break;
        }
    }
    Ok(centre.round() / PS_PER_S)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that a delay `N(mean, sigma)` falls in `[lo, hi)`.
fn window_capture(lo: f64, hi: f64, mean: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return if lo <= mean && mean < hi { 1.0 } else { 0.0 };
    }
    (normal_cdf((hi - mean) / sigma) - normal_cdf((lo - mean) / sigma)).max(0.0)
}

/// `(E[c_A], E[c_B], E[c_A c_B])` of the window captures of one A click
/// and one B click, averaged over the trigger jitter.
fn capture_moments(d: &crate::timetag::Detectors, lo: f64, hi: f64) -> (f64, f64, f64) {
    let shift = |det: &DetectorConfig| det.delay_s - d.trigger.delay_s;
    let given = |det: &DetectorConfig, x: f64| window_capture(lo + x, hi + x, shift(det), det.jitter_sigma_s);
    let st = d.trigger.jitter_sigma_s;
    if st <= 0.0 {
        let (a, b) = (given(&d.a, 0.0), given(&d.b, 0.0));
        return (a, b, a * b);
    }
    let total = |det: &DetectorConfig| {
        window_capture(lo, hi, shift(det), st.hypot(det.jitter_sigma_s))
    };
    // Simpson rule over the trigger jitter, +-12 sigma.
    const INTERVALS: usize = 4000;
    let h = 24.0 * st / INTERVALS as f64;
    let mut acc = 0.0;
    for i in 0..=INTERVALS {
        let x = -12.0 * st + i as f64 * h;
        let wgt = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let pdf = (-0.5 * (x / st).powi(2)).exp() / (st * (2.0 * std::f64::consts::PI).sqrt());
        acc += wgt * pdf * given(&d.a, x) * given(&d.b, x);
    }
    (total(&d.a), total(&d.b), acc * h / 3.0)
}

/// Signal-arm statistics conditioned on a photon-induced herald.
struct Herald {
    /// `G(x) = E[x^n]` of the signal photons reaching the splitter.
    state: PhotonNumberDistribution,
    /// Photon-induced trigger click rate, Hz.
    rate_hz: f64,
    /// Uncorrelated signal-arm photon rate seen by a window, Hz.
    accidental_hz: f64,
}

fn herald_model(run: &RunConfig) -> Result<Herald> {
    let t = run.attenuator.value();
    let eff_t = run.detectors.trigger.efficiency;
    Ok(match run.source {
        SourceConfig::Ideal(c) => Herald {
            state: PhotonNumberDistribution::bernoulli(c.eta * t)?,
            rate_hz: c.rep_rate_hz * eff_t,
            accidental_hz: 0.0,
        },
        SourceConfig::QuantumDot(c) => Herald {
            state: quantum_dot_state(&QuantumDotConfig {
                eta_col: c.eta_col * t,
                lambda_bg: c.lambda_bg * t,
                ..c
            })?
            .state,
            rate_hz: c.rep_rate_hz * eff_t,
            accidental_hz: 0.0,
        },
        SourceConfig::Spdc(c) => match c.regime {
            SpdcRegime::Pulsed { rep_rate_hz } => {
                let h = spdc_pulsed_heralded(&SpdcConfig {
                    eta_trigger: c.eta_trigger * eff_t,
                    eta_signal: c.eta_signal * t,
                    jitter_sigma_s: 0.0,
                    ..c
                })?;
                Herald {
                    state: h.state,
                    rate_hz: rep_rate_hz * h.trigger_prob,
                    accidental_hz: 0.0,
                }
            }
            SpdcRegime::Cw {
                r_bg_hz,
                pair_rate_hz,
            } => Herald {
                state: PhotonNumberDistribution::bernoulli(c.eta_signal * t)?,
                rate_hz: pair_rate_hz * c.eta_trigger * eff_t,
                accidental_hz: (r_bg_hz + pair_rate_hz * c.eta_signal) * t,
            },
        },
    })
}

/// Mean signal-arm photon rate after the attenuator, Hz.
fn signal_photon_rate(run: &RunConfig) -> Result<f64> {
    let t = run.attenuator.value();
    Ok(match run.source {
        SourceConfig::Ideal(c) => c.rep_rate_hz * c.eta * t,
        SourceConfig::QuantumDot(c) => c.rep_rate_hz * (c.eta_col + c.lambda_bg) * t,
        SourceConfig::Spdc(c) => match c.regime {
            SpdcRegime::Pulsed { rep_rate_hz } => {
                let pairs = pair_distribution(c.g, c.mode_statistics)?;
                rep_rate_hz * pairs.mean_photon_number() * c.eta_signal * t
            }
            SpdcRegime::Cw {
                r_bg_hz,
                pair_rate_hz,
            } => (r_bg_hz + pair_rate_hz * c.eta_signal) * t,
        },
    })
}

/// Expected click probabilities of the simulated measurement.
///
/// Includes detector efficiencies, timing jitter against the window, dark
/// counts on all channels, uncorrelated CW photons, and dark triggers. For
/// pulsed sources, photons of other pulses are assumed to miss the window of
/// a photon-induced herald; for dark triggers they are treated as a uniform
/// rate.
pub fn predict_clicks(run: &RunConfig, tau_s: f64, offset_s: f64) -> Result<ClickProbabilities> {
    run.validate()?;
    let w = Window::new(tau_s, offset_s)?;
    let tau = w.tau_s();
    let herald = herald_model(run)?;
    let d = &run.detectors;
    let (lo, hi) = (
        (w.offset_ps - w.tau_ps / 2) as f64 / PS_PER_S,
        (w.offset_ps - w.tau_ps / 2 + w.tau_ps) as f64 / PS_PER_S,
    );
    let (alpha, beta) = (0.5 * d.a.efficiency, 0.5 * d.b.efficiency);
    let (ca, cb, cab) = capture_moments(d, lo, hi);
    let gen = |x: f64| -> f64 {
        herald
            .state
            .probs()
            .iter()
            .rev()
            .fold(0.0, |acc, p| acc * x + p)
    };

    // Photon-induced herald. A detector fired by photons clicks once, with
    // one jitter draw; both captures share the trigger jitter.
    let fire_a = 1.0 - gen(1.0 - alpha);
    let fire_b = 1.0 - gen(1.0 - beta);
    let fire_ab = fire_a + fire_b - 1.0 + gen(1.0 - alpha - beta);
    let quiet = |det: &DetectorConfig, acc_hz: f64| {
        (-(det.dark_rate_hz + 0.5 * det.efficiency * acc_hz) * tau).exp()
    };
    let (ea, eb) = (quiet(&d.a, herald.accidental_hz), quiet(&d.b, herald.accidental_hz));
    let none = (1.0 - fire_a * ca - fire_b * cb + fire_ab * cab) * ea * eb;
    let no_b = (1.0 - fire_b * cb) * eb;
    let no_a = (1.0 - fire_a * ca) * ea;
    let photon = [none, no_b - none + no_a - none];

    // Dark trigger: only uncorrelated clicks.
    let acc = signal_photon_rate(run)?;
    let (fa, fb) = (quiet(&d.a, acc), quiet(&d.b, acc));
    let dark = [fa * fb, fa * (1.0 - fb) + fb * (1.0 - fa)];

    let total = herald.rate_hz + d.trigger.dark_rate_hz;
    if total <= 0.0 {
        return Err(Error::Domain("configuration produces no triggers".into()));
    }
    let f = d.trigger.dark_rate_hz / total;
    let p0 = (1.0 - f) * photon[0] + f * dark[0];
    let p1 = (1.0 - f) * photon[1] + f * dark[1];
    Ok(ClickProbabilities::exact(p0, p1, (1.0 - p0 - p1).max(0.0)))
}

/// Expected trigger rate of the simulated measurement, Hz.
pub fn trigger_rate_hz(run: &RunConfig) -> Result<f64> {
    Ok(herald_model(run)?.rate_hz + run.detectors.trigger.dark_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timetag::Channel::{SignalA as A, SignalB as B, Trigger as T};

    fn rec(ch: Channel, ns: f64) -> TimeTagRecord {
        TimeTagRecord::new(ch, (ns * 1e3).round() as u64)
    }

    #[test]
    fn single_a_click_in_window() {
        let s = [rec(T, 0.0), rec(A, 1.0)];
        let c = count_coincidences(&s, 2e-9, 1e-9).unwrap();
        assert_eq!((c.n_a_only, c.n_both, c.n_trigger), (1, 0, 1));
    }

    #[test]
    fn both_clicks_in_window() {
        let s = [rec(T, 0.0), rec(A, 1.0), rec(B, 1.5)];
        let c = count_coincidences(&s, 2e-9, 1e-9).unwrap();
        assert_eq!(c.n_both, 1);
    }

    #[test]
    fn window_is_half_open() {
        let s = [rec(T, 0.0), rec(A, 2.0), rec(B, 3.0)];
        let c = count_coincidences(&s, 2e-9, 1e-9).unwrap();
        assert_eq!(c.n_none, 1);
        let s = [rec(T, 1.0), rec(A, 1.0)];
        assert_eq!(count_coincidences(&s, 2e-9, 1e-9).unwrap().n_a_only, 1);
    }

    #[test]
    fn overlapping_windows_share_clicks() {
        let s = [rec(T, 0.0), rec(T, 0.5), rec(A, 1.2)];
        let c = count_coincidences(&s, 2e-9, 1e-9).unwrap();
        assert_eq!((c.n_trigger, c.n_a_only), (2, 2));
    }

    #[test]
    fn negative_offset_window() {
        let s = [rec(A, 0.0), rec(T, 10.0)];
        let c = count_coincidences(&s, 2e-9, -10e-9).unwrap();
        assert_eq!(c.n_a_only, 1);
    }

    #[test]
    fn unsorted_stream_rejected() {
        let s = [rec(A, 5.0), rec(T, 0.0)];
        assert!(matches!(
            count_coincidences(&s, 2e-9, 0.0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            count_coincidences(&[], 0.0, 0.0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn estimator_examples() {
        let c = CoincidenceCounts {
            n_trigger: 1_000_000,
            n_none: 999_000,
            n_a_only: 450,
            n_b_only: 450,
            n_both: 100,
        };
        let p = estimate(&c).unwrap();
        assert!((p.p2plus - 1e-4).abs() < 1e-15);
        assert!((p.sigma_p2plus - 1e-5).abs() < 1e-8);
        let all_none = CoincidenceCounts {
            n_trigger: 10,
            n_none: 10,
            ..Default::default()
        };
        let p = estimate(&all_none).unwrap();
        assert_eq!((p.p0, p.p1, p.p2plus, p.sigma_p0), (1.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            estimate(&CoincidenceCounts::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inversion_examples() {
        let p = ClickProbabilities::exact(0.9, 0.095, 0.005);
        let d = invert_click_statistics(&p).unwrap();
        assert!((d.p0 - 0.9).abs() < 1e-15);
        assert!((d.p1 - 0.09).abs() < 1e-15);
        assert!((d.p2 - 0.01).abs() < 1e-15);
        let v = invert_click_statistics(&ClickProbabilities::exact(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((v.p0, v.p1, v.p2), (1.0, 0.0, 0.0));
        let bad = ClickProbabilities::exact(0.5, 0.2, 0.3);
        assert!(matches!(
            invert_click_statistics(&bad),
            Err(Error::Inversion(_))
        ));
    }

    #[test]
    fn window_capture_matches_centred_capture_fraction() {
        let sigma = 0.7e-9;
        let c = window_capture(-1e-9, 1e-9, 0.0, sigma);
        assert!((c - crate::sources::capture_fraction(2e-9, sigma)).abs() < 1e-12);
        assert_eq!(window_capture(-1.0, 1.0, 0.0, 0.0), 1.0);
        assert_eq!(window_capture(0.0, 1.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn capture_moments_limits() {
        let mut d = crate::timetag::Detectors::default();
        let (a, b, ab) = capture_moments(&d, -1e-9, 1e-9);
        let c = crate::sources::capture_fraction(2e-9, 0.5e-9f64.hypot(0.5e-9));
        assert!((a - c).abs() < 1e-12 && (b - c).abs() < 1e-12);
        // The shared trigger jitter correlates the two captures.
        assert!(ab > a * b && ab < a.min(b));
        d.trigger.jitter_sigma_s = 0.0;
        let (a, b, ab) = capture_moments(&d, -1e-9, 1e-9);
        assert!((ab - a * b).abs() < 1e-15);
        // Independent signal jitter integrates back to the marginal.
        d.trigger.jitter_sigma_s = 0.3e-9;
        d.b.jitter_sigma_s = 0.0;
        let (a, b, ab) = capture_moments(&d, -1e-9, 1e-9);
        assert!((b - crate::sources::capture_fraction(2e-9, 0.3e-9)).abs() < 1e-12);
        assert!(ab <= a.min(b));
    }

    #[test]
    fn offset_found_from_delay_peak() {
        let mut s = Vec::new();
        for k in 0..2000u64 {
            let t = k * 100_000;
            s.push(TimeTagRecord::new(T, t));
            s.push(TimeTagRecord::new(if k % 2 == 0 { A } else { B }, t + 7_300 + (k % 5) * 10));
        }
        s.sort();
        let off = find_window_offset(&s).unwrap();
        assert!((off - 7.32e-9).abs() < 1e-12, "{off}");
    }

    #[test]
    fn offset_unbiased_for_spread_centred_on_zero() {
        let mut s = Vec::new();
        for k in 0..14_010u64 {
            let t = 1_000_000 + k * 100_000;
            let d = ((k * 37) % 1401) as i64 - 700;
            s.push(TimeTagRecord::new(T, t));
            s.push(TimeTagRecord::new(A, (t as i64 + d) as u64));
        }
        s.sort();
        let off = find_window_offset(&s).unwrap();
        assert!(off.abs() < 2e-12, "{off}");
    }
}
