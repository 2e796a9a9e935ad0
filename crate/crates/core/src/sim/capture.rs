use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::walk::{GroundTruth, Walk, WalkProfile};
use crate::detect::RssiSample;
use crate::session::{AntennaMap, AntennaRole, TagRead};

pub const CAPTURE_FORMAT: &str = "gaitspeed-capture/1";

/// First line of a capture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaptureHeader {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<WalkProfile>,
}

impl Default for CaptureHeader {
    fn default() -> Self {
        Self {
            format: CAPTURE_FORMAT.to_string(),
            epc: None,
            distance_m: None,
            ground_truth: None,
            profile: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("capture I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("capture stream: {0}")]
    Stream(#[from] io::Error),
    #[error("capture header: {0}")]
    Header(String),
    #[error("capture line {line}: {source}")]
    Read { line: usize, source: serde_json::Error },
}

/// A header line followed by one wire-format read per line.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub header: CaptureHeader,
    pub reads: Vec<TagRead>,
}

impl Capture {
    /// Interleaves the two traces of a walk in timestamp order.
    pub fn from_walk(walk: &Walk, profile: Option<&WalkProfile>, epc: &str, distance_m: f64, ports: (u16, u16)) -> Self {
        let mut reads: Vec<TagRead> = walk
            .trace1
            .iter()
            .map(|s| TagRead::new(epc, ports.0, s.timestamp_us, s.rssi_dbm))
            .chain(
                walk.trace2
                    .iter()
                    .map(|s| TagRead::new(epc, ports.1, s.timestamp_us, s.rssi_dbm)),
            )
            .collect();
        reads.sort_by_key(|r| r.timestamp_us);
        Self {
            header: CaptureHeader {
                epc: Some(epc.to_string()),
                distance_m: Some(distance_m),
                ground_truth: Some(walk.truth),
                profile: profile.cloned(),
                ..Default::default()
            },
            reads,
        }
    }

    pub fn write_to(&self, w: impl Write) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.reads {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, CaptureError> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| CaptureError::Header("empty capture".into()))??;
        let header: CaptureHeader =
            serde_json::from_str(&first).map_err(|e| CaptureError::Header(e.to_string()))?;
        if header.format != CAPTURE_FORMAT {
            return Err(CaptureError::Header(format!("unknown format {:?}", header.format)));
        }
        let mut reads = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            reads.push(serde_json::from_str(&line).map_err(|source| CaptureError::Read { line: i + 2, source })?);
        }
        Ok(Self { header, reads })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CaptureError> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|source| CaptureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(BufReader::new(f))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CaptureError> {
        let path = path.as_ref();
        let io_err = |source| CaptureError::Io {
            path: path.to_path_buf(),
            source,
        };
        let f = File::create(path).map_err(io_err)?;
        self.write_to(f).map_err(io_err)
    }

    /// Splits reads into entry and exit traces according to `map`.
    pub fn traces(&self, map: &AntennaMap) -> (Vec<RssiSample>, Vec<RssiSample>) {
        let mut entry = Vec::new();
        let mut exit = Vec::new();
        for r in &self.reads {
            match map.role(r.antenna_port) {
                AntennaRole::Entry => entry.push(r.sample()),
                AntennaRole::Exit => exit.push(r.sample()),
                AntennaRole::Ignored => {}
            }
        }
        (entry, exit)
    }

    /// Reads with every timestamp moved by `offset_us`.
    pub fn shifted_reads(&self, offset_us: u64) -> impl Iterator<Item = TagRead> + '_ {
        self.reads.iter().map(move |r| TagRead {
            timestamp_us: r.timestamp_us + offset_us,
            ..r.clone()
        })
    }

    pub fn span_us(&self) -> u64 {
        match (self.reads.first(), self.reads.last()) {
            (Some(a), Some(b)) => b.timestamp_us - a.timestamp_us,
            _ => 0,
        }
    }
}
