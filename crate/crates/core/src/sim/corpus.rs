use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::capture::{Capture, CaptureError};
use super::walk::{generate_walk, FalsePeak, GroundTruth, ProfileError, Walk, WalkProfile};
use crate::detect::DetectionParams;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_EPC: &str = "300833B2DDD9014000000001";

/// What the simulated patient did. Anything other than `Normal` is an
/// injected failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum WalkKind {
    Normal,
    /// Passes the exit antenna first.
    Backwards,
    /// Runs through the gate.
    Running,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CorpusSpec {
    pub n: usize,
    pub speed_range: (f64, f64),
    pub seed: u64,
    pub distance_m: f64,
    pub lateral_range: (f64, f64),
    pub gain_range: (f64, f64),
    pub max_false_peaks: usize,
    pub backwards_fraction: f64,
    pub running_fraction: f64,
    pub running_speed_mps: f64,
    pub epc: String,
    /// Noise, sampling and propagation settings shared by every walk.
    pub base: WalkProfile,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n: 26,
            speed_range: (0.6, 1.5),
            seed: 7,
            distance_m: 4.0,
            lateral_range: (0.5, 0.9),
            gain_range: (-3.0, 0.0),
            max_false_peaks: 3,
            backwards_fraction: 0.0,
            running_fraction: 0.0,
            running_speed_mps: 2.5,
            epc: DEFAULT_EPC.to_string(),
            base: WalkProfile::default(),
        }
    }
}

impl CorpusSpec {
    /// A clinic-day mix: mostly normal walks with injected walk-backs and runs.
    pub fn clinic(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            speed_range: (0.5, 1.4),
            backwards_fraction: 0.08,
            running_fraction: 0.05,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub file: String,
    pub kind: WalkKind,
    pub profile: WalkProfile,
    pub ground_truth: GroundTruth,
    pub entry_samples: usize,
    pub exit_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub spec: CorpusSpec,
    pub walks: Vec<ManifestEntry>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus needs at least one walk")]
    Empty,
    #[error("speed range [{0}, {1}] is invalid")]
    SpeedRange(f64, f64),
    #[error("failure fractions must be in [0, 1] and sum to at most 1")]
    Fractions,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Capture(#[from] CaptureError),
    #[error("corpus I/O on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

/// One generated walk plus its capture.
#[derive(Debug, Clone)]
pub struct CorpusWalk {
    pub entry: ManifestEntry,
    pub walk: Walk,
    pub capture: Capture,
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws every walk from a single seeded chain.
pub fn build_corpus(spec: &CorpusSpec) -> Result<Vec<CorpusWalk>, CorpusError> {
    if spec.n == 0 {
        return Err(CorpusError::Empty);
    }
    let (lo, hi) = spec.speed_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CorpusError::SpeedRange(lo, hi));
    }
    let (fb, fr) = (spec.backwards_fraction, spec.running_fraction);
    if !((0.0..=1.0).contains(&fb) && (0.0..=1.0).contains(&fr) && fb + fr <= 1.0) {
        return Err(CorpusError::Fractions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_back = (fb * spec.n as f64).round() as usize;
    let n_run = ((fr * spec.n as f64).round() as usize).min(spec.n - n_back);
    let mut kinds: Vec<WalkKind> = std::iter::repeat_n(WalkKind::Backwards, n_back)
        .chain(std::iter::repeat_n(WalkKind::Running, n_run))
        .chain(std::iter::repeat_n(WalkKind::Normal, spec.n - n_back - n_run))
        .collect();
    kinds.shuffle(&mut rng);

    let params = DetectionParams {
        distance_m: spec.distance_m,
        ..Default::default()
    };
    let mut out = Vec::with_capacity(spec.n);
    for (i, kind) in kinds.into_iter().enumerate() {
        let speed = draw(&mut rng, spec.speed_range);
        let lateral = draw(&mut rng, spec.lateral_range);
        let gain = draw(&mut rng, spec.gain_range);
        let n_peaks = rng.random_range(0..=spec.max_false_peaks);
        let false_peaks: Vec<FalsePeak> = (0..n_peaks)
            .map(|j| FalsePeak {
                time_s: -1.5 - 2.0 * j as f64 - rng.random::<f64>(),
                duration_s: 0.4 + 0.6 * rng.random::<f64>(),
                peak_dbm: -62.0 + 12.0 * rng.random::<f64>(),
            })
            .collect();
        let seed = rng.random::<u64>();
        let profile = WalkProfile {
            speed_mps: if kind == WalkKind::Running {
                spec.running_speed_mps
            } else {
                speed
            },
            lateral_offset_m: lateral,
            gain_offset_db: gain,
            false_peaks: if kind == WalkKind::Backwards {
                Vec::new()
            } else {
                false_peaks
            },
            seed,
            ..spec.base.clone()
        };
        let mut walk = generate_walk(&profile, &params)?;
        if kind == WalkKind::Backwards {
            std::mem::swap(&mut walk.trace1, &mut walk.trace2);
        }
        let capture = Capture::from_walk(&walk, Some(&profile), &spec.epc, spec.distance_m, (1, 2));
        let entry = ManifestEntry {
            file: format!("walk_{i:03}.jsonl"),
            kind,
            ground_truth: walk.truth,
            entry_samples: walk.trace1.len(),
            exit_samples: walk.trace2.len(),
            profile,
        };
        out.push(CorpusWalk { entry, walk, capture });
    }
    Ok(out)
}

/// Writes one capture per walk and a manifest into `dir`.
pub fn generate_corpus(spec: &CorpusSpec, dir: impl AsRef<Path>) -> Result<Manifest, CorpusError> {
    let dir = dir.as_ref();
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let walks = build_corpus(spec)?;
    for w in &walks {
        w.capture.save(dir.join(&w.entry.file))?;
    }
    let manifest = Manifest {
        spec: spec.clone(),
        walks: walks.into_iter().map(|w| w.entry).collect(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

/// A corpus read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub manifest: Manifest,
    pub captures: Vec<Capture>,
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<LoadedCorpus, CorpusError> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let captures = manifest
        .walks
        .iter()
        .map(|w| Capture::load(dir.join(&w.file)))
        .collect::<Result<_, _>>()?;
    Ok(LoadedCorpus { manifest, captures })
}
