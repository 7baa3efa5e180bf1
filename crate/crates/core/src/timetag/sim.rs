//! Monte Carlo generation of heralded autocorrelation time-tag streams.
//!
//! Pulsed sources are simulated pulse by pulse (SPDC skips empty pulses with a
//! geometric draw). CW SPDC heralds form a Poisson process, and accidental
//! photons are an independent Poisson stream in the signal arm so that the
//! analysis window stays a pure post-processing choice. Dark counts are
//! homogeneous Poisson processes on all three channels.
//!
//! A run is cut into segments; segment `i` draws only from
//! `segment_rng(seed, i)`, so the output depends on the seed and the segment
//! partition but not on the number of workers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonicalize, Channel, TimeTagRecord, PS_PER_S};
use crate::error::{Error, Result};
use crate::fock::Transmittance;
use crate::rng::segment_rng;
use crate::sources::{pair_distribution, SourceConfig, SpdcRegime};

/// Detector timing jitter used when a config does not give one.
pub const DEFAULT_JITTER_SIGMA_S: f64 = 0.5e-9;
pub const DEFAULT_SEGMENT_PULSES: u64 = 1 << 22;
pub const DEFAULT_SEGMENT_S: f64 = 0.05;

fn default_one() -> f64 {
    1.0
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER_SIGMA_S
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(default = "default_one")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
    #[serde(default = "default_jitter")]
    pub jitter_sigma_s: f64,
    /// Fixed cable/electronics delay added to every photon detection.
    #[serde(default)]
    pub delay_s: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_sigma_s: DEFAULT_JITTER_SIGMA_S,
            delay_s: 0.0,
        }
    }
}

impl DetectorConfig {
    /// Unit efficiency, no darks, no jitter, no delay.
    pub fn perfect() -> Self {
        DetectorConfig {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_sigma_s: 0.0,
            delay_s: 0.0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Validation(format!(
                "{name}.efficiency = {} must lie in [0, 1]",
                self.efficiency
            )));
        }
        for (field, v) in [
            ("dark_rate_hz", self.dark_rate_hz),
            ("jitter_sigma_s", self.jitter_sigma_s),
            ("delay_s", self.delay_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name}.{field} = {v} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Detectors {
    #[serde(default)]
    pub trigger: DetectorConfig,
    #[serde(default)]
    pub a: DetectorConfig,
    #[serde(default)]
    pub b: DetectorConfig,
}

impl Detectors {
    pub fn perfect() -> Self {
        Detectors {
            trigger: DetectorConfig::perfect(),
            a: DetectorConfig::perfect(),
            b: DetectorConfig::perfect(),
        }
    }

    pub fn get(&self, ch: Channel) -> &DetectorConfig {
        match ch {
            Channel::Trigger => &self.trigger,
            Channel::SignalA => &self.a,
            Channel::SignalB => &self.b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunLength {
    Pulses(u64),
    DurationS(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub source: SourceConfig,
    /// Variable attenuator in the signal arm.
    pub attenuator: Transmittance,
    pub detectors: Detectors,
    pub length: RunLength,
    pub seed: u64,
    /// Pulses per segment for pulsed sources.
    pub segment_pulses: u64,
    /// Segment duration for CW sources, seconds.
    pub segment_s: f64,
}

impl RunConfig {
    pub fn new(source: SourceConfig, length: RunLength, seed: u64) -> Self {
        RunConfig {
            source,
            attenuator: Transmittance::ONE,
            detectors: Detectors::default(),
            length,
            seed,
            segment_pulses: DEFAULT_SEGMENT_PULSES,
            segment_s: DEFAULT_SEGMENT_S,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detectors.trigger.validate("trigger")?;
        self.detectors.a.validate("a")?;
        self.detectors.b.validate("b")?;
        match (self.length, self.source.rep_rate_hz()) {
            (RunLength::Pulses(0), _) => {
                return Err(Error::Validation("run needs at least one pulse".into()))
            }
            (RunLength::Pulses(_), None) => {
                return Err(Error::Validation(
                    "a CW source needs a run duration, not a pulse count".into(),
                ))
            }
            (RunLength::DurationS(d), _) if !(d > 0.0 && d.is_finite()) => {
                return Err(Error::Validation(format!("run duration {d} s must be > 0")))
            }
            _ => {}
        }
        if self.segment_pulses == 0 || !(self.segment_s > 0.0) {
            return Err(Error::Validation("segment size must be positive".into()));
        }
        Ok(())
    }

    /// Run length in picoseconds.
    pub fn duration_ps(&self) -> u64 {
        match (self.length, self.source.rep_rate_hz()) {
            (RunLength::Pulses(n), Some(nu)) => (n as f64 * PS_PER_S / nu).round() as u64,
            (RunLength::DurationS(d), _) => (d * PS_PER_S).round() as u64,
            (RunLength::Pulses(_), None) => 0,
        }
    }

    /// Number of pulses for pulsed sources.
    pub fn pulse_count(&self) -> Option<u64> {
        let nu = self.source.rep_rate_hz()?;
        Some(match self.length {
            RunLength::Pulses(n) => n,
            RunLength::DurationS(d) => (d * nu).floor() as u64,
        })
    }
}

/// Bookkeeping of one segment, before window analysis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SegmentStats {
    pub index: u64,
    pub start_ps: u64,
    pub end_ps: u64,
    /// Pulses (pulsed) or pair events (CW) in the segment.
    pub emissions: u64,
    /// Photons emitted into the signal arm before any loss.
    pub signal_photons: u64,
    /// Trigger clicks caused by photons.
    pub herald_clicks: u64,
    /// Signal-detector clicks caused by photons.
    pub signal_clicks: u64,
    pub dark_counts: [u64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    /// Sorted stream, timestamps unique per channel.
    pub tags: Vec<TimeTagRecord>,
    pub segments: Vec<SegmentStats>,
    pub duration_ps: u64,
}

/// Runs the simulation on the current rayon pool.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    cfg.validate()?;
    let plan = Plan::new(cfg)?;
    let parts: Vec<(Vec<TimeTagRecord>, SegmentStats)> = (0..plan.segments)
        .into_par_iter()
        .map(|i| plan.segment(i))
        .collect();
    let mut tags = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
    let mut segments = Vec::with_capacity(parts.len());
    for (t, s) in parts {
        tags.extend(t);
        segments.push(s);
    }
    canonicalize(&mut tags, plan.duration_ps);
    Ok(Simulation {
        tags,
        segments,
        duration_ps: plan.duration_ps,
    })
}

/// Runs the simulation on a dedicated pool of `workers` threads.
pub fn simulate_with_workers(cfg: &RunConfig, workers: usize) -> Result<Simulation> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| simulate(cfg))
}

/// Per-pulse emission model of a pulsed source.
#[derive(Clone, Debug)]
enum Emitter {
    /// One trigger photon per pulse, signal photon with probability `eta`.
    Ideal { eta: f64 },
    /// Pair-bearing pulses only; `cdf[k]` is `P(n <= k + 1 | n >= 1)`.
    Spdc {
        p_any: f64,
        cdf: Vec<f64>,
        eta_trigger: f64,
        eta_signal: f64,
    },
    /// One trigger photon per pulse, dot photon with probability `eta_col`
    /// plus Poisson background in the signal arm.
    Dot { eta_col: f64, lambda_bg: f64 },
    /// CW heralds as a Poisson process plus accidental signal photons.
    Cw {
        pair_rate_hz: f64,
        r_bg_hz: f64,
        eta_trigger: f64,
        eta_signal: f64,
    },
}

struct Plan {
    emitter: Emitter,
    detectors: Detectors,
    attenuator: f64,
    seed: u64,
    duration_ps: u64,
    period_ps: f64,
    pulses: u64,
    segment_pulses: u64,
    segment_ps: u64,
    segments: u64,
}

impl Plan {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let emitter = match cfg.source {
            SourceConfig::Ideal(c) => Emitter::Ideal { eta: c.eta },
            SourceConfig::QuantumDot(c) => Emitter::Dot {
                eta_col: c.eta_col,
                lambda_bg: c.lambda_bg,
            },
            SourceConfig::Spdc(c) => match c.regime {
                SpdcRegime::Pulsed { .. } => {
                    let pairs = pair_distribution(c.g, c.mode_statistics)?;
                    let p_any = pairs.non_vacuum();
                    let mut acc = 0.0;
                    let cdf = pairs.probs()[1..]
                        .iter()
                        .map(|p| {
                            acc += p / p_any;
                            acc
                        })
                        .collect();
                    Emitter::Spdc {
                        p_any,
                        cdf,
                        eta_trigger: c.eta_trigger,
                        eta_signal: c.eta_signal,
                    }
                }
                SpdcRegime::Cw {
                    r_bg_hz,
                    pair_rate_hz,
                } => Emitter::Cw {
                    pair_rate_hz,
                    r_bg_hz,
                    eta_trigger: c.eta_trigger,
                    eta_signal: c.eta_signal,
                },
            },
        };
        let duration_ps = cfg.duration_ps();
        let (period_ps, pulses, segments, segment_ps) = match cfg.source.rep_rate_hz() {
            Some(nu) => {
                let pulses = cfg.pulse_count().unwrap_or(0);
                (
                    PS_PER_S / nu,
                    pulses,
                    pulses.div_ceil(cfg.segment_pulses),
                    0,
                )
            }
            None => {
                let seg = ((cfg.segment_s * PS_PER_S).round() as u64).max(1);
                (0.0, 0, duration_ps.div_ceil(seg), seg)
            }
        };
        Ok(Plan {
            emitter,
            detectors: cfg.detectors,
            attenuator: cfg.attenuator.value(),
            seed: cfg.seed,
            duration_ps,
            period_ps,
            pulses,
            segment_pulses: cfg.segment_pulses,
            segment_ps,
            segments,
        })
    }

    fn pulse_time(&self, k: u64) -> u64 {
        if k >= self.pulses {
            self.duration_ps
        } else {
            (k as f64 * self.period_ps).round() as u64
        }
    }

    fn segment(&self, index: u64) -> (Vec<TimeTagRecord>, SegmentStats) {
        let mut rng = segment_rng(self.seed, index);
        let mut out = Vec::new();
        let mut stats = SegmentStats {
            index,
            ..SegmentStats::default()
        };
        if let Emitter::Cw { .. } = self.emitter {
            stats.start_ps = index * self.segment_ps;
            stats.end_ps = ((index + 1) * self.segment_ps).min(self.duration_ps);
            self.cw_events(&mut rng, &mut out, &mut stats);
        } else {
            let first = index * self.segment_pulses;
            let last = ((index + 1) * self.segment_pulses).min(self.pulses);
            stats.start_ps = self.pulse_time(first);
            stats.end_ps = self.pulse_time(last);
            stats.emissions = last - first;
            self.pulsed_events(first, last, &mut rng, &mut out, &mut stats);
        }
        for ch in Channel::ALL {
            stats.dark_counts[ch.index()] =
                self.dark_counts(ch, stats.start_ps, stats.end_ps, &mut rng, &mut out);
        }
        (out, stats)
    }

    /// Appends a photon-induced click of `ch` for an emission at `t_ps`.
    fn click(&self, ch: Channel, t_ps: f64, rng: &mut ChaCha8Rng, out: &mut Vec<TimeTagRecord>) {
        let det = self.detectors.get(ch);
        let mut t = t_ps + det.delay_s * PS_PER_S;
        if det.jitter_sigma_s > 0.0 {
            let jitter = Normal::new(0.0, det.jitter_sigma_s * PS_PER_S).expect("sigma > 0");
            t += jitter.sample(rng);
        }
        let t = t.round();
        if t >= 0.0 && t < self.duration_ps as f64 {
            out.push(TimeTagRecord::new(ch, t as u64));
        }
    }

    /// Routes `photons` signal-arm photons (after all arm losses) through the
    /// splitter; returns whether A and B fired.
    fn split(&self, photons: u64, rng: &mut ChaCha8Rng) -> (bool, bool) {
        let (mut a, mut b) = (false, false);
        for _ in 0..photons {
            if rng.random::<bool>() {
                a |= rng.random::<f64>() < self.detectors.a.efficiency;
            } else {
                b |= rng.random::<f64>() < self.detectors.b.efficiency;
            }
        }
        (a, b)
    }

    fn thin(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
        (0..n).filter(|_| rng.random::<f64>() < p).count() as u64
    }

    fn pulsed_events(
        &self,
        first: u64,
        last: u64,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<TimeTagRecord>,
        stats: &mut SegmentStats,
    ) {
        let trig_eff = self.detectors.trigger.efficiency;
        let emit = |k: u64, herald: bool, signal: u64, rng: &mut ChaCha8Rng, out: &mut Vec<TimeTagRecord>, stats: &mut SegmentStats| {
            let t = k as f64 * self.period_ps;
            if herald {
                stats.herald_clicks += 1;
                self.click(Channel::Trigger, t, rng, out);
            }
            let (a, b) = self.split(signal, rng);
            if a {
                stats.signal_clicks += 1;
                self.click(Channel::SignalA, t, rng, out);
            }
            if b {
                stats.signal_clicks += 1;
                self.click(Channel::SignalB, t, rng, out);
            }
        };
        match &self.emitter {
            Emitter::Ideal { eta } => {
                for k in first..last {
                    let herald = rng.random::<f64>() < trig_eff;
                    let photon = rng.random::<f64>() < *eta;
                    stats.signal_photons += photon as u64;
                    let survives = photon && rng.random::<f64>() < self.attenuator;
                    emit(k, herald, survives as u64, rng, out, stats);
                }
            }
            Emitter::Dot { eta_col, lambda_bg } => {
                let background = (*lambda_bg > 0.0)
                    .then(|| Poisson::new(*lambda_bg).expect("lambda > 0"));
                for k in first..last {
                    let herald = rng.random::<f64>() < trig_eff;
                    let dot = (rng.random::<f64>() < *eta_col) as u64;
                    let bg = background
                        .as_ref()
                        .map_or(0, |p| p.sample(rng) as u64);
                    stats.signal_photons += dot + bg;
                    let survivors = Self::thin(dot + bg, self.attenuator, rng);
                    emit(k, herald, survivors, rng, out, stats);
                }
            }
            Emitter::Spdc {
                p_any,
                cdf,
                eta_trigger,
                eta_signal,
            } => {
                if *p_any <= 0.0 {
                    return;
                }
                let skip = Geometric::new(*p_any).expect("0 < p <= 1");
                let herald_p = eta_trigger * trig_eff;
                let signal_p = eta_signal * self.attenuator;
                let mut k = first;
                loop {
                    k = k.saturating_add(skip.sample(rng));
                    if k >= last {
                        break;
                    }
                    let u = rng.random::<f64>();
                    let n = 1 + cdf.partition_point(|&c| c < u).min(cdf.len() - 1) as u64;
                    let herald = Self::thin(n, herald_p, rng) > 0;
                    stats.signal_photons += n;
                    let survivors = Self::thin(n, signal_p, rng);
                    emit(k, herald, survivors, rng, out, stats);
                    k += 1;
                }
            }
            Emitter::Cw { .. } => unreachable!("CW handled separately"),
        }
    }

    fn cw_events(&self, rng: &mut ChaCha8Rng, out: &mut Vec<TimeTagRecord>, stats: &mut SegmentStats) {
        let Emitter::Cw {
            pair_rate_hz,
            r_bg_hz,
            eta_trigger,
            eta_signal,
        } = self.emitter
        else {
            unreachable!()
        };
        let herald_p = eta_trigger * self.detectors.trigger.efficiency;
        let signal_p = eta_signal * self.attenuator;
        for t in poisson_times(pair_rate_hz, stats.start_ps, stats.end_ps, rng) {
            stats.emissions += 1;
            stats.signal_photons += 1;
            if rng.random::<f64>() < herald_p {
                stats.herald_clicks += 1;
                self.click(Channel::Trigger, t, rng, out);
            }
            if rng.random::<f64>() < signal_p {
                self.cw_photon(t, rng, out, stats);
            }
        }
        for t in poisson_times(r_bg_hz, stats.start_ps, stats.end_ps, rng) {
            stats.signal_photons += 1;
            if rng.random::<f64>() < self.attenuator {
                self.cw_photon(t, rng, out, stats);
            }
        }
    }

    fn cw_photon(&self, t: f64, rng: &mut ChaCha8Rng, out: &mut Vec<TimeTagRecord>, stats: &mut SegmentStats) {
        let (a, b) = self.split(1, rng);
        if a {
            stats.signal_clicks += 1;
            self.click(Channel::SignalA, t, rng, out);
        }
        if b {
            stats.signal_clicks += 1;
            self.click(Channel::SignalB, t, rng, out);
        }
    }

    fn dark_counts(
        &self,
        ch: Channel,
        start: u64,
        end: u64,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<TimeTagRecord>,
    ) -> u64 {
        let rate = self.detectors.get(ch).dark_rate_hz;
        let mut count = 0;
        for t in poisson_times(rate, start, end, rng) {
            let t = t.floor() as u64;
            if t < end {
                out.push(TimeTagRecord::new(ch, t));
                count += 1;
            }
        }
        count
    }
}

/// Event times of a homogeneous Poisson process on `[start, end)` ps.
fn poisson_times(rate_hz: f64, start: u64, end: u64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut times = Vec::new();
    if rate_hz <= 0.0 {
        return times;
    }
    let gap = Exp::new(rate_hz / PS_PER_S).expect("rate > 0");
    let (mut t, end) = (start as f64, end as f64);
    loop {
        t += gap.sample(rng);
        if t >= end {
            return times;
        }
        times.push(t);
    }
}
