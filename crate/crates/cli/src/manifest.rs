use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record written next to every output so a run can be repeated.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// SHA-256 of the input bytes, in input order.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[(&Path, &[u8])]) -> Self {
        let mut h = Sha256::new();
        for (_, bytes) in inputs {
            h.update(bytes);
        }
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|(p, _)| p.display().to_string()).collect(),
            config_digest: hex::encode(h.finalize()),
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
            result: None,
        }
    }

    /// Digest of an argument list, for commands without an input file.
    pub fn from_args(command: &str, args: &str) -> Self {
        let mut m = RunManifest::new(command, &[]);
        m.config_digest = hex::encode(Sha256::digest(args.as_bytes()));
        m.inputs.push(format!("args:{args}"));
        m
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` or stdout, then the manifest next to the file or
/// to stderr.
pub fn emit(out: Option<&Path>, body: &[u8], mut manifest: RunManifest) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))?;
            manifest.outputs.push(path.display().to_string());
            write_manifest(path, &manifest)
        }
        None => {
            std::io::stdout().lock().write_all(body)?;
            manifest.outputs.push("-".into());
            let mut err = std::io::stderr().lock();
            serde_json::to_writer(&mut err, &manifest)?;
            writeln!(err)?;
            Ok(())
        }
    }
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let path = manifest_path(out);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn json_body<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}
