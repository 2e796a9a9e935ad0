use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use thiserror::Error;

use super::result::TrialResult;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("trial log I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("trial log serialization: {0}")]
    Encode(#[from] serde_json::Error),
}

/// Query over stored trials. `tag` matches either the label or the EPC.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialFilter {
    pub tag: Option<String>,
    pub since: Option<DateTime<Utc>>,
    pub limit: Option<usize>,
}

impl TrialFilter {
    pub fn matches(&self, r: &TrialResult) -> bool {
        let tag_ok = self
            .tag
            .as_deref()
            .is_none_or(|t| r.tag.label == t || r.tag.epc.eq_ignore_ascii_case(t));
        let since_ok = self.since.is_none_or(|s| r.completed_at >= s);
        tag_ok && since_ok
    }

    /// Filters and orders newest first, then truncates to the limit.
    pub fn apply<'a>(&self, trials: impl IntoIterator<Item = &'a TrialResult>) -> Vec<TrialResult> {
        let mut out: Vec<_> = trials.into_iter().filter(|r| self.matches(r)).cloned().collect();
        out.reverse();
        out.sort_by_key(|r| std::cmp::Reverse(r.completed_at));
        if let Some(limit) = self.limit {
            out.truncate(limit);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub trials: Vec<TrialResult>,
    /// Lines that did not parse and were skipped.
    pub skipped_lines: usize,
}

/// Append-only JSON-lines trial log.
#[derive(Debug)]
pub struct TrialLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl TrialLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| LogError::Io {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn persist(&self, result: &TrialResult) -> Result<(), LogError> {
        let mut line = serde_json::to_string(result)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|source| LogError::Io {
                path: self.path.clone(),
                source,
            })
    }

    pub fn load(&self, filter: &TrialFilter) -> Result<LoadReport, LogError> {
        load_trials(&self.path, filter)
    }
}

/// Reads a trial log, skipping lines that fail to parse (typically a record
/// cut short by a crash).
pub fn load_trials(path: impl AsRef<Path>, filter: &TrialFilter) -> Result<LoadReport, LogError> {
    let path = path.as_ref();
    let io_err = |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(LoadReport::default()),
        Err(e) => return Err(io_err(e)),
    };
    let mut all = Vec::new();
    let mut skipped = 0;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TrialResult>(&line) {
            Ok(r) => all.push(r),
            Err(e) => {
                tracing::warn!(line = n + 1, error = %e, path = %path.display(), "skipping unreadable trial record");
                skipped += 1;
            }
        }
    }
    Ok(LoadReport {
        trials: filter.apply(&all),
        skipped_lines: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectionParams;
    use crate::session::{Classification, TagIdentity};
    use chrono::Duration;

    fn result(i: i64, label: &str) -> TrialResult {
        let base: DateTime<Utc> = "2024-05-01T08:00:00Z".parse().unwrap();
        TrialResult {
            tag: TagIdentity::new(label, &format!("300833B2DDD90140000000{:02}", label.len())).unwrap(),
            t_start_us: Some(1_000_000 * i as u64),
            t_end_us: Some(1_000_000 * i as u64 + 5_324_000),
            speed_mps: 4.0 / 5.324 + i as f64 * 1e-3,
            classification: Classification::Success,
            entry_sample_count: 100 + i as usize,
            exit_sample_count: 20,
            completed_at: base + Duration::seconds(i),
            params_snapshot: DetectionParams::default(),
        }
    }

    #[test]
    fn round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let log = TrialLog::open(dir.path().join("trials.jsonl")).unwrap();
        let r = result(3, "Tag1");
        log.persist(&r).unwrap();
        let got = log.load(&TrialFilter::default()).unwrap();
        assert_eq!(got.trials, vec![r]);
        assert_eq!(got.skipped_lines, 0);
    }

    #[test]
    fn limit_returns_newest() {
        let dir = tempfile::tempdir().unwrap();
        let log = TrialLog::open(dir.path().join("trials.jsonl")).unwrap();
        for i in 0..25 {
            log.persist(&result(i, "Tag1")).unwrap();
        }
        let got = log
            .load(&TrialFilter {
                limit: Some(10),
                ..Default::default()
            })
            .unwrap();
        let starts: Vec<_> = got.trials.iter().map(|r| r.entry_sample_count).collect();
        assert_eq!(starts, (115..125).rev().collect::<Vec<_>>());
    }

    #[test]
    fn truncated_last_line_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.jsonl");
        let log = TrialLog::open(&path).unwrap();
        for i in 0..25 {
            log.persist(&result(i, "Tag1")).unwrap();
        }
        let len = std::fs::metadata(&path).unwrap().len();
        OpenOptions::new().write(true).open(&path).unwrap().set_len(len - 30).unwrap();
        let got = load_trials(&path, &TrialFilter::default()).unwrap();
        assert_eq!(got.trials.len(), 24);
        assert_eq!(got.skipped_lines, 1);
    }

    #[test]
    fn filter_by_tag_and_since() {
        let all: Vec<_> = (0..6).map(|i| result(i, if i % 2 == 0 { "Tag1" } else { "Tag22" })).collect();
        let f = TrialFilter {
            tag: Some("Tag22".into()),
            since: Some(all[2].completed_at),
            limit: None,
        };
        let got = f.apply(&all);
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].completed_at, all[5].completed_at);
        let by_epc = TrialFilter {
            tag: Some(all[0].tag.epc.to_lowercase()),
            ..Default::default()
        };
        assert_eq!(by_epc.apply(&all).len(), 3);
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let got = load_trials(dir.path().join("none.jsonl"), &TrialFilter::default()).unwrap();
        assert!(got.trials.is_empty());
    }
}
