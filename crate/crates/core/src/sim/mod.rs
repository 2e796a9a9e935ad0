//! Reader emulator: synthetic walks, capture files, corpora and HTTP replay.

mod capture;
mod corpus;
mod model;
mod replay;
mod walk;

pub use capture::{Capture, CaptureError, CaptureHeader, CAPTURE_FORMAT};
pub use corpus::{
    build_corpus, generate_corpus, load_corpus, CorpusError, CorpusSpec, CorpusWalk, LoadedCorpus, Manifest,
    ManifestEntry, WalkKind, DEFAULT_EPC, MANIFEST_FILE,
};
pub use model::{rssi_model, AntennaPattern, PathLossModel};
pub use replay::{batch_reads, replay, ReplayOptions, ReplayReport, DEFAULT_ENDPOINT, ENDPOINT_ENV};
pub use walk::{generate_walk, FalsePeak, GroundTruth, ProfileError, Walk, WalkProfile};
