use std::path::Path;

use anyhow::{bail, Context, Result};
use qng_core::sources::SpdcConfig;
use qng_core::timetag::{Detectors, RunConfig, RunLength, DEFAULT_SEGMENT_PULSES, DEFAULT_SEGMENT_S};
use qng_core::{SourceConfig, Transmittance};
use serde::Deserialize;

/// A run document: source, detectors, attenuator and run length.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub source: SourceConfig,
    #[serde(default)]
    pub detectors: Detectors,
    #[serde(default)]
    pub attenuator_db: f64,
    #[serde(default)]
    pub seed: u64,
    pub pulses: Option<u64>,
    pub duration_s: Option<f64>,
    pub segment_pulses: Option<u64>,
    pub segment_s: Option<f64>,
}

impl RunDoc {
    pub fn transmittance(&self) -> Result<Transmittance> {
        Ok(Transmittance::from_db(self.attenuator_db)?)
    }

    /// Source seen behind the attenuator.
    pub fn attenuated_source(&self) -> Result<SourceConfig> {
        self.source.validate()?;
        Ok(self.source.attenuated(self.transmittance()?))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let length = match (self.pulses, self.duration_s) {
            (Some(n), None) => RunLength::Pulses(n),
            (None, Some(s)) => RunLength::DurationS(s),
            (None, None) => bail!(qng_core::Error::Validation(
                "run config needs \"pulses\" or \"duration_s\"".into()
            )),
            (Some(_), Some(_)) => bail!(qng_core::Error::Validation(
                "run config takes only one of \"pulses\" and \"duration_s\"".into()
            )),
        };
        let cfg = RunConfig {
            attenuator: self.transmittance()?,
            detectors: self.detectors,
            segment_pulses: self.segment_pulses.unwrap_or(DEFAULT_SEGMENT_PULSES),
            segment_s: self.segment_s.unwrap_or(DEFAULT_SEGMENT_S),
            ..RunConfig::new(self.source, length, self.seed)
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Run config for click prediction; the run length is irrelevant there
    /// and may be missing from the document.
    pub fn prediction_config(&self) -> Result<RunConfig> {
        if self.pulses.is_some() || self.duration_s.is_some() {
            return self.run_config();
        }
        let length = if self.source.rep_rate_hz().is_some() {
            RunLength::Pulses(1)
        } else {
            RunLength::DurationS(1.0)
        };
        let cfg = RunConfig {
            attenuator: self.transmittance()?,
            detectors: self.detectors,
            ..RunConfig::new(self.source, length, self.seed)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn parse_run(bytes: &[u8], path: &Path) -> Result<RunDoc> {
    serde_json::from_slice(bytes).with_context(|| format!("invalid run config {}", path.display()))
}

/// Accepts either a bare source document or a run document with a
/// `source` field.
pub fn parse_source(bytes: &[u8], path: &Path) -> Result<SourceConfig> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes)
        .with_context(|| format!("invalid JSON in {}", path.display()))?;
    if let Some(inner) = v.get_mut("source") {
        v = inner.take();
    }
    let source: SourceConfig = serde_json::from_value(v)
        .with_context(|| format!("invalid source config {}", path.display()))?;
    source.validate()?;
    Ok(source)
}

pub fn parse_spdc(bytes: &[u8], path: &Path) -> Result<SpdcConfig> {
    match parse_source(bytes, path)? {
        SourceConfig::Spdc(c) => Ok(c),
        _ => bail!(qng_core::Error::Usage(format!(
            "{} is not an SPDC source",
            path.display()
        ))),
    }
}
