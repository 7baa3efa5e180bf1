//! Time-tag streams of a heralded autocorrelation measurement: a trigger
//! detector plus two signal detectors behind a balanced splitter.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod io;
mod sim;

pub use io::{read_binary, read_csv, read_path, write_binary, write_csv, write_path, MAGIC, VERSION};
pub use sim::{
    simulate, simulate_with_workers, DetectorConfig, Detectors, RunConfig, RunLength,
    SegmentStats, Simulation, DEFAULT_JITTER_SIGMA_S, DEFAULT_SEGMENT_PULSES, DEFAULT_SEGMENT_S,
};

pub const PS_PER_S: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Channel {
    Trigger = 0,
    SignalA = 1,
    SignalB = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Trigger, Channel::SignalA, Channel::SignalB];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u8> for Channel {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Channel::Trigger),
            1 => Ok(Channel::SignalA),
            2 => Ok(Channel::SignalB),
            other => Err(Error::Format(format!("unknown channel {other}"))),
        }
    }
}

/// One detection event, timestamp in integer picoseconds since run start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeTagRecord {
    pub timestamp_ps: u64,
    pub channel: Channel,
}

impl TimeTagRecord {
    pub fn new(channel: Channel, timestamp_ps: u64) -> Self {
        TimeTagRecord {
            timestamp_ps,
            channel,
        }
    }
}

impl Ord for TimeTagRecord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.timestamp_ps
            .cmp(&other.timestamp_ps)
            .then(self.channel.cmp(&other.channel))
    }
}

impl PartialOrd for TimeTagRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Checks the stream order `(timestamp, channel)`.
pub fn check_sorted(stream: &[TimeTagRecord]) -> Result<()> {
    match stream.windows(2).position(|w| w[0] > w[1]) {
        None => Ok(()),
        Some(i) => Err(Error::Validation(format!(
            "time-tag stream not sorted at record {}: {:?} after {:?}",
            i + 1,
            stream[i + 1],
            stream[i]
        ))),
    }
}

/// Sorts a stream and makes timestamps unique per channel by nudging
/// collisions forward one picosecond at a time. Records nudged to or past
/// `end_ps` are dropped.
pub fn canonicalize(stream: &mut Vec<TimeTagRecord>, end_ps: u64) {
    stream.sort_unstable();
    let mut last: [Option<u64>; 3] = [None; 3];
    let mut nudged = false;
    for rec in stream.iter_mut() {
        let slot = &mut last[rec.channel.index()];
        if let Some(prev) = *slot {
            if rec.timestamp_ps <= prev {
                rec.timestamp_ps = prev + 1;
                nudged = true;
            }
        }
        *slot = Some(rec.timestamp_ps);
    }
    if nudged {
        stream.retain(|r| r.timestamp_ps < end_ps);
        stream.sort_unstable();
    }
}

/// Per-channel event counts.
pub fn channel_counts(stream: &[TimeTagRecord]) -> [u64; 3] {
    let mut counts = [0u64; 3];
    for r in stream {
        counts[r.channel.index()] += 1;
    }
    counts
}
