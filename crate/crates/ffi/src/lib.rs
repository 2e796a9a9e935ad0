//! C ABI over the gait-speed detectors, the per-tag session and the
//! agreement statistics.
//!
//! Every function returns a [`GsStatus`]. Outputs go through caller-provided
//! pointers and are only written on `GS_OK`. Handles are opaque and must be
//! released with their `_free` function. No function unwinds across the
//! boundary; a caught panic becomes `GS_PANIC`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use gaitspeed::detect::{
    baseline_threshold_detect, compute_gait_speed, detect_right_edge_forward, detect_right_edge_reversed,
    DetectError, DetectionParams, EdgeDetection, ForwardDetector, RssiSample, ScanOrder,
};
use gaitspeed::eval::{bland_altman, mae, EvalError, PairedMeasurement};
use gaitspeed::session::{classify_result, AntennaRole, Classification, SessionSettings, TagIdentity, TagSession, TrialResult};

/// Upper bound on trial results produced by one `gs_session_process` call.
pub const GS_MAX_RESULTS_PER_READ: usize = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidWindow = 2,
    InvalidThreshold = 3,
    NonMonotonic = 4,
    InvalidArgument = 5,
    InsufficientData = 6,
    BufferTooSmall = 7,
    InvalidString = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsSample {
    pub timestamp_us: u64,
    pub rssi_dbm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsEdge {
    pub edge_timestamp_us: u64,
    pub peak_rssi_dbm: f64,
    pub trigger_index: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsParams {
    pub w1: usize,
    pub w2: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub distance_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsClassification {
    Success = 0,
    Erroneous = 1,
    SystemFailure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsRole {
    Entry = 0,
    Exit = 1,
    Ignored = 2,
}

/// One completed trial. Edge fields are only meaningful when the matching
/// `has_*` flag is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsTrial {
    pub has_start: bool,
    pub t_start_us: u64,
    pub has_end: bool,
    pub t_end_us: u64,
    pub speed_mps: f64,
    pub classification: GsClassification,
    pub entry_samples: usize,
    pub exit_samples: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsPair {
    pub v_test_mps: f64,
    pub v_ref_mps: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsAgreement {
    pub n: usize,
    pub mae_mps: f64,
    pub mean_error_pct: f64,
    pub bias_mps: f64,
    pub sd_mps: f64,
    pub loa_low_mps: f64,
    pub loa_high_mps: f64,
}

/// Streaming exit detector.
pub struct GsForwardDetector(ForwardDetector);

/// Trial state machine for a single tag.
pub struct GsSession(TagSession);

impl From<GsSample> for RssiSample {
    fn from(s: GsSample) -> Self {
        RssiSample::new(s.timestamp_us, s.rssi_dbm)
    }
}

impl From<EdgeDetection> for GsEdge {
    fn from(e: EdgeDetection) -> Self {
        Self {
            edge_timestamp_us: e.edge_timestamp_us,
            peak_rssi_dbm: e.peak_rssi_dbm,
            trigger_index: e.trigger_index,
        }
    }
}

impl From<GsParams> for DetectionParams {
    fn from(p: GsParams) -> Self {
        Self {
            w1: p.w1,
            w2: p.w2,
            tau1: p.tau1,
            tau2: p.tau2,
            distance_m: p.distance_m,
        }
    }
}

impl From<Classification> for GsClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Success => Self::Success,
            Classification::Erroneous => Self::Erroneous,
            Classification::SystemFailure => Self::SystemFailure,
        }
    }
}

impl From<&TrialResult> for GsTrial {
    fn from(r: &TrialResult) -> Self {
        Self {
            has_start: r.t_start_us.is_some(),
            t_start_us: r.t_start_us.unwrap_or(0),
            has_end: r.t_end_us.is_some(),
            t_end_us: r.t_end_us.unwrap_or(0),
            speed_mps: r.speed_mps,
            classification: r.classification.into(),
            entry_samples: r.entry_sample_count,
            exit_samples: r.exit_sample_count,
        }
    }
}

impl From<DetectError> for GsStatus {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Window(_) => Self::InvalidWindow,
            DetectError::Threshold(_) => Self::InvalidThreshold,
            DetectError::NonMonotonic { .. } => Self::NonMonotonic,
        }
    }
}

impl From<EvalError> for GsStatus {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Empty | EvalError::InsufficientData { .. } => Self::InsufficientData,
            _ => Self::InvalidArgument,
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), GsStatus>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => GsStatus::Panic,
    }
}

unsafe fn samples(ptr: *const GsSample, len: usize) -> Result<Vec<RssiSample>, GsStatus> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if ptr.is_null() {
        return Err(GsStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(ptr, len).iter().map(|&s| s.into()).collect())
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, GsStatus> {
    p.as_mut().ok_or(GsStatus::NullPointer)
}

unsafe fn edge_result(
    samples_ptr: *const GsSample,
    len: usize,
    found: *mut bool,
    edge: *mut GsEdge,
    detect: impl FnOnce(&[RssiSample]) -> Result<Option<EdgeDetection>, DetectError>,
) -> GsStatus {
    guard(|| {
        let found = out(found)?;
        let edge = out(edge)?;
        let hit = detect(&samples(samples_ptr, len)?)?;
        *found = hit.is_some();
        if let Some(e) = hit {
            *edge = e.into();
        }
        Ok(())
    })
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn gs_status_message(status: GsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        GsStatus::Ok => c"ok",
        GsStatus::NullPointer => c"required pointer was null",
        GsStatus::InvalidWindow => c"window must hold at least 2 samples",
        GsStatus::InvalidThreshold => c"drop threshold must be positive and finite",
        GsStatus::NonMonotonic => c"timestamps must be strictly increasing",
        GsStatus::InvalidArgument => c"argument out of range",
        GsStatus::InsufficientData => c"not enough data",
        GsStatus::BufferTooSmall => c"output buffer too small",
        GsStatus::InvalidString => c"string is not valid UTF-8",
        GsStatus::Panic => c"internal error",
    };
    s.as_ptr()
}

/// Entry-antenna edge detection over a complete trace in time order.
/// `*found` is false when no window fires.
///
/// # Safety
/// `samples` must point to `len` readable elements; `found` and `edge` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_detect_reversed(
    samples_ptr: *const GsSample,
    len: usize,
    w: usize,
    tau: f64,
    found: *mut bool,
    edge: *mut GsEdge,
) -> GsStatus {
    edge_result(samples_ptr, len, found, edge, |s| detect_right_edge_reversed(s, w, tau))
}

/// Exit-antenna edge detection over a complete trace.
///
/// # Safety
/// Same contract as [`gs_detect_reversed`].
#[no_mangle]
pub unsafe extern "C" fn gs_detect_forward(
    samples_ptr: *const GsSample,
    len: usize,
    w: usize,
    tau: f64,
    found: *mut bool,
    edge: *mut GsEdge,
) -> GsStatus {
    edge_result(samples_ptr, len, found, edge, |s| detect_right_edge_forward(s, w, tau))
}

/// Creates a streaming exit detector.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_forward_new(w: usize, tau: f64, out_handle: *mut *mut GsForwardDetector) -> GsStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let d = ForwardDetector::new(w, tau)?;
        *slot = Box::into_raw(Box::new(GsForwardDetector(d)));
        Ok(())
    })
}

/// Feeds one sample. `*fired` is true on the call that fires and on every
/// later call until reset; `*edge` then holds the latched edge.
///
/// # Safety
/// `handle` must come from [`gs_forward_new`]; `fired` and `edge` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_forward_push(
    handle: *mut GsForwardDetector,
    sample: GsSample,
    fired: *mut bool,
    edge: *mut GsEdge,
) -> GsStatus {
    guard(|| {
        let d = out(handle)?;
        let fired = out(fired)?;
        let edge = out(edge)?;
        d.0.push(sample.into());
        let hit = d.0.fired();
        *fired = hit.is_some();
        if let Some(e) = hit {
            *edge = e.into();
        }
        Ok(())
    })
}

/// Clears the window and the latch.
///
/// # Safety
/// `handle` must come from [`gs_forward_new`].
#[no_mangle]
pub unsafe extern "C" fn gs_forward_reset(handle: *mut GsForwardDetector) -> GsStatus {
    guard(|| {
        out(handle)?.0.reset();
        Ok(())
    })
}

/// Releases a detector. Null is a no-op.
///
/// # Safety
/// `handle` must come from [`gs_forward_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_forward_free(handle: *mut GsForwardDetector) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Fixed-threshold edge: the first (forward) or last (reverse) sample at or
/// above `threshold_dbm`.
///
/// # Safety
/// `samples` must point to `len` readable elements; `found` and `timestamp_us` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_baseline_detect(
    samples_ptr: *const GsSample,
    len: usize,
    threshold_dbm: f64,
    reverse: bool,
    found: *mut bool,
    timestamp_us: *mut u64,
) -> GsStatus {
    guard(|| {
        let found = out(found)?;
        let ts = out(timestamp_us)?;
        let s = samples(samples_ptr, len)?;
        let order = if reverse { ScanOrder::Reverse } else { ScanOrder::Forward };
        let hit = baseline_threshold_detect(&s, threshold_dbm, order);
        *found = hit.is_some();
        if let Some(t) = hit {
            *ts = t;
        }
        Ok(())
    })
}

/// Speed in m/s between two edges.
///
/// # Safety
/// `speed_mps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_compute_speed(t_start_us: u64, t_end_us: u64, distance_m: f64, speed_mps: *mut f64) -> GsStatus {
    guard(|| {
        let slot = out(speed_mps)?;
        *slot = compute_gait_speed(t_start_us, t_end_us, distance_m).map_err(|_| GsStatus::InvalidArgument)?;
        Ok(())
    })
}

/// # Safety
/// `classification` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_classify(speed_mps: f64, classification: *mut GsClassification) -> GsStatus {
    guard(|| {
        let slot = out(classification)?;
        *slot = classify_result(speed_mps).map_err(|_| GsStatus::InvalidArgument)?.into();
        Ok(())
    })
}

unsafe fn pairs(ptr: *const GsPair, len: usize) -> Result<Vec<PairedMeasurement>, GsStatus> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if ptr.is_null() {
        return Err(GsStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(ptr, len)
        .iter()
        .map(|p| PairedMeasurement::new(p.v_test_mps, p.v_ref_mps))
        .collect())
}

/// Mean absolute difference between test and reference speeds.
///
/// # Safety
/// `pairs_ptr` must point to `len` readable elements; `mae_mps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_mae(pairs_ptr: *const GsPair, len: usize, mae_mps: *mut f64) -> GsStatus {
    guard(|| {
        let slot = out(mae_mps)?;
        *slot = mae(&pairs(pairs_ptr, len)?)?;
        Ok(())
    })
}

/// Bias, limits of agreement and error summary. Needs at least two pairs.
///
/// # Safety
/// `pairs_ptr` must point to `len` readable elements; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_bland_altman(pairs_ptr: *const GsPair, len: usize, report: *mut GsAgreement) -> GsStatus {
    guard(|| {
        let slot = out(report)?;
        let r = bland_altman(&pairs(pairs_ptr, len)?)?.report;
        *slot = GsAgreement {
            n: r.n,
            mae_mps: r.mae_mps,
            mean_error_pct: r.mean_error_pct,
            bias_mps: r.bias_mps,
            sd_mps: r.sd_mps,
            loa_low_mps: r.loa_low_mps,
            loa_high_mps: r.loa_high_mps,
        };
        Ok(())
    })
}

/// Defaults used by the service: w 14, tau 1 dB, 4 m.
#[no_mangle]
pub extern "C" fn gs_params_default() -> GsParams {
    let p = DetectionParams::default();
    GsParams {
        w1: p.w1,
        w2: p.w2,
        tau1: p.tau1,
        tau2: p.tau2,
        distance_m: p.distance_m,
    }
}

/// Creates a session for one tag with default timing (10 s cooldown,
/// 120 s idle timeout). `epc` must be 24 hex characters.
///
/// # Safety
/// `label` and `epc` must be NUL-terminated; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_session_new(label: *const c_char, epc: *const c_char, out_handle: *mut *mut GsSession) -> GsStatus {
    guard(|| {
        let slot = out(out_handle)?;
        if label.is_null() || epc.is_null() {
            return Err(GsStatus::NullPointer);
        }
        let label = CStr::from_ptr(label).to_str().map_err(|_| GsStatus::InvalidString)?;
        let epc = CStr::from_ptr(epc).to_str().map_err(|_| GsStatus::InvalidString)?;
        let tag = TagIdentity::new(label, epc).map_err(|_| GsStatus::InvalidArgument)?;
        *slot = Box::into_raw(Box::new(GsSession(TagSession::new(tag, SessionSettings::default()))));
        Ok(())
    })
}

/// Routes one read into the session. Up to [`GS_MAX_RESULTS_PER_READ`]
/// completed trials are written to `results`; `*written` holds the count.
///
/// # Safety
/// `handle` must come from [`gs_session_new`]; `params` must be readable;
/// `results` must have room for `capacity` elements; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_session_process(
    handle: *mut GsSession,
    role: GsRole,
    sample: GsSample,
    params: *const GsParams,
    results: *mut GsTrial,
    capacity: usize,
    written: *mut usize,
) -> GsStatus {
    guard(|| {
        let session = out(handle)?;
        let written = out(written)?;
        let params: DetectionParams = (*params.as_ref().ok_or(GsStatus::NullPointer)?).into();
        params.validate().map_err(|_| GsStatus::InvalidArgument)?;
        if results.is_null() || capacity < GS_MAX_RESULTS_PER_READ {
            return Err(if results.is_null() { GsStatus::NullPointer } else { GsStatus::BufferTooSmall });
        }
        let role = match role {
            GsRole::Entry => AntennaRole::Entry,
            GsRole::Exit => AntennaRole::Exit,
            GsRole::Ignored => AntennaRole::Ignored,
        };
        let done = session.0.process_read(role, sample.into(), &params);
        let dst = slice::from_raw_parts_mut(results, capacity);
        for (slot, r) in dst.iter_mut().zip(&done) {
            *slot = r.into();
        }
        *written = done.len();
        Ok(())
    })
}

/// Ends an open trial as if its idle timer expired. `*has_result` is false
/// when the session was not in a trial.
///
/// # Safety
/// `handle` must come from [`gs_session_new`]; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_session_expire(handle: *mut GsSession, has_result: *mut bool, result: *mut GsTrial) -> GsStatus {
    guard(|| {
        let session = out(handle)?;
        let has = out(has_result)?;
        let slot = out(result)?;
        let r = session.0.expire_idle();
        *has = r.is_some();
        if let Some(r) = r {
            *slot = (&r).into();
        }
        Ok(())
    })
}

/// Releases a session. Null is a no-op.
///
/// # Safety
/// `handle` must come from [`gs_session_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_session_free(handle: *mut GsSession) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
