//! Binary and CSV time-tag formats.
//!
//! Binary: a 16-byte header (`b"QTT1"`, little-endian `u32` version, 8
//! reserved zero bytes) followed by packed 9-byte records of `u8` channel and
//! little-endian `u64` picoseconds. CSV: header `channel,timestamp_ps`, one
//! record per LF-terminated line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Channel, TimeTagRecord};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"QTT1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 9;
const CSV_HEADER: &str = "channel,timestamp_ps";

pub fn write_binary<W: Write>(mut w: W, stream: &[TimeTagRecord]) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    w.write_all(&header)?;
    let mut buf = [0u8; RECORD_LEN];
    for rec in stream {
        buf[0] = rec.channel as u8;
        buf[1..].copy_from_slice(&rec.timestamp_ps.to_le_bytes());
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<TimeTagRecord>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("file shorter than the 16-byte header".into()))?;
    if header[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            &header[..4],
            MAGIC
        )));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % RECORD_LEN != 0 {
        return Err(Error::Format(format!(
            "truncated record: {} trailing bytes",
            body.len() % RECORD_LEN
        )));
    }
    body.chunks_exact(RECORD_LEN)
        .map(|c| {
            Ok(TimeTagRecord {
                channel: Channel::try_from(c[0])?,
                timestamp_ps: u64::from_le_bytes(c[1..].try_into().unwrap()),
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(mut w: W, stream: &[TimeTagRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for rec in stream {
        writeln!(w, "{},{}", rec.channel as u8, rec.timestamp_ps)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TimeTagRecord>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some(CSV_HEADER) {
        return Err(Error::Format(format!("missing CSV header `{CSV_HEADER}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: cannot parse `{line}`", i + 2));
        let (ch, ts) = line.split_once(',').ok_or_else(bad)?;
        let ch: u8 = ch.trim().parse().map_err(|_| bad())?;
        let ts: u64 = ts.trim().parse().map_err(|_| bad())?;
        out.push(TimeTagRecord::new(Channel::try_from(ch)?, ts));
    }
    Ok(out)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Writes CSV for a `.csv` extension, binary otherwise.
pub fn write_path(path: &Path, stream: &[TimeTagRecord]) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_csv(w, stream)
    } else {
        write_binary(w, stream)
    }
}

pub fn read_path(path: &Path) -> Result<Vec<TimeTagRecord>> {
    let r = BufReader::new(File::open(path)?);
    if is_csv(path) {
        read_csv(r)
    } else {
        read_binary(r)
    }
}
