use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde_json::Value;

use crate::session::{TagRead, WireAdapter};
use crate::sim::CaptureHeader;

pub const MAX_BATCH: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchError {
    Malformed(String),
    Empty,
    TooLarge(usize),
}

/// Decodes a posted batch: either a bare array of reads or an object whose
/// adapter-configured key holds the array. Any bad record rejects the batch.
pub fn decode_batch(body: &[u8], adapter: &WireAdapter) -> Result<Vec<TagRead>, BatchError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| BatchError::Malformed(format!("invalid JSON: {e}")))?;
    let items = match value {
        Value::Array(items) => items,
        Value::Object(mut map) => match map.remove(&adapter.batch) {
            Some(Value::Array(items)) => items,
            _ => {
                return Err(BatchError::Malformed(format!(
                    "expected an array or an object with a {:?} array",
                    adapter.batch
                )))
            }
        },
        _ => return Err(BatchError::Malformed("expected an array of reads".into())),
    };
    if items.is_empty() {
        return Err(BatchError::Empty);
    }
    if items.len() > MAX_BATCH {
        return Err(BatchError::TooLarge(items.len()));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, v)| decode_read(v, adapter).map_err(|e| BatchError::Malformed(format!("read {i}: {e}"))))
        .collect()
}

fn decode_read(v: &Value, a: &WireAdapter) -> Result<TagRead, String> {
    let obj = v.as_object().ok_or("not an object")?;
    let field = |k: &str| obj.get(k).ok_or_else(|| format!("missing {k:?}"));
    let epc = field(&a.epc)?
        .as_str()
        .ok_or_else(|| format!("{:?} must be a string", a.epc))?;
    let port = field(&a.antenna_port)?
        .as_u64()
        .and_then(|p| u16::try_from(p).ok())
        .ok_or_else(|| format!("{:?} must be an integer in 0..=65535", a.antenna_port))?;
    let ts = field(&a.timestamp_us)?
        .as_u64()
        .ok_or_else(|| format!("{:?} must be a non-negative integer", a.timestamp_us))?;
    let rssi = field(&a.rssi)?
        .as_f64()
        .filter(|r| r.is_finite())
        .ok_or_else(|| format!("{:?} must be a number", a.rssi))?;
    Ok(TagRead::new(epc, port, ts, rssi))
}

/// Appends every ingested read to a capture file.
pub struct Recorder {
    out: Mutex<BufWriter<File>>,
}

impl Recorder {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, &CaptureHeader::default())?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(Self { out: Mutex::new(out) })
    }

    pub fn record(&self, reads: &[TagRead]) {
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        let res = reads.iter().try_for_each(|r| {
            serde_json::to_writer(&mut *out, r)?;
            out.write_all(b"\n")
        });
        if let Err(e) = res.and_then(|_| out.flush()) {
            tracing::error!(error = %e, "capture write failed");
        }
    }
}
