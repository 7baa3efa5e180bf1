#![allow(dead_code)]

use qng_core::estimation::{count_coincidences, estimate_stream, ClickEstimate};
use qng_core::sources::{SourceConfig, SpdcConfig};
use qng_core::timetag::{simulate, RunConfig, RunLength, TimeTagRecord};
use qng_core::PhotonNumberDistribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random normalized distribution with support up to `max_n`.
pub fn random_state(rng: &mut ChaCha8Rng, max_n: usize) -> PhotonNumberDistribution {
    let len = rng.random_range(1..=max_n + 1);
    let mut w: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    // Some sparse states with exact zeros.
    for x in w.iter_mut() {
        if rng.random::<f64>() < 0.2 {
            *x = 0.0;
        }
    }
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    PhotonNumberDistribution::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Pulsed geometric SPDC with the given signal efficiency.
pub fn pulsed_spdc(g: f64, eta_signal: f64) -> SourceConfig {
    SourceConfig::Spdc(SpdcConfig {
        eta_signal,
        ..SpdcConfig::pulsed(g, 80e6, 2e-9)
    })
}

pub fn run(source: SourceConfig, pulses: u64, seed: u64) -> RunConfig {
    RunConfig::new(source, RunLength::Pulses(pulses), seed)
}

pub fn estimate_run(cfg: &RunConfig, tau: f64) -> ClickEstimate {
    let sim = simulate(cfg).unwrap();
    estimate_stream(&sim.tags, tau, 0.0).unwrap()
}

/// `|a - b| / sigma`; with `sigma = 0` the values must agree to 1e-12.
pub fn z(a: f64, b: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if (a - b).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / sigma
    }
}

/// Per-window bookkeeping by binary search, independent of the two-pointer
/// scan.
pub fn brute_force_counts(stream: &[TimeTagRecord], tau_ps: i64, offset_ps: i64) -> [u64; 5] {
    use qng_core::timetag::Channel;
    let pick = |ch| -> Vec<i64> {
        stream
            .iter()
            .filter(|r| r.channel == ch)
            .map(|r| r.timestamp_ps as i64)
            .collect()
    };
    let (trig, a, b) = (pick(Channel::Trigger), pick(Channel::SignalA), pick(Channel::SignalB));
    let hit = |v: &[i64], lo: i64, hi: i64| {
        let i = v.partition_point(|&t| t < lo);
        i < v.len() && v[i] < hi
    };
    let mut c = [0u64; 5];
    for &t in &trig {
        let lo = t + offset_ps - tau_ps / 2;
        let hi = lo + tau_ps;
        c[0] += 1;
        match (hit(&a, lo, hi), hit(&b, lo, hi)) {
            (false, false) => c[1] += 1,
            (true, false) => c[2] += 1,
            (false, true) => c[3] += 1,
            (true, true) => c[4] += 1,
        }
    }
    c
}

pub fn counts_array(stream: &[TimeTagRecord], tau_s: f64, offset_s: f64) -> [u64; 5] {
    let c = count_coincidences(stream, tau_s, offset_s).unwrap();
    [c.n_trigger, c.n_none, c.n_a_only, c.n_b_only, c.n_both]
}
