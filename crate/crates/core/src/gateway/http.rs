use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::wire::{decode_batch, BatchError};
use super::AppState;
use crate::detect::DetectionParams;
use crate::session::{AntennaAssignment, AntennaMap, RouteOutcome, TagEntry, TrialFilter};

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({ "error": msg.into() }))).into_response()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IngestReport {
    pub received: usize,
    pub accepted: usize,
    pub ignored: usize,
    pub overflow: usize,
}

pub async fn post_reads(State(st): State<AppState>, body: Bytes) -> Response {
    let mut reads = match decode_batch(&body, &st.adapter) {
        Ok(r) => r,
        Err(BatchError::TooLarge(n)) => {
            return error(
                StatusCode::PAYLOAD_TOO_LARGE,
                format!("batch of {n} reads exceeds {}", super::wire::MAX_BATCH),
            )
        }
        Err(BatchError::Empty) => return error(StatusCode::BAD_REQUEST, "batch is empty"),
        Err(BatchError::Malformed(m)) => return error(StatusCode::BAD_REQUEST, m),
    };
    reads.sort_by_key(|r| r.timestamp_us);
    if let Some(rec) = &st.recorder {
        rec.record(&reads);
    }
    let mut report = IngestReport {
        received: reads.len(),
        ..Default::default()
    };
    for r in &reads {
        match st.engine.route_read(r) {
            RouteOutcome::Accepted => report.accepted += 1,
            RouteOutcome::UnknownEpc | RouteOutcome::IgnoredPort => report.ignored += 1,
            RouteOutcome::Overflow => report.overflow += 1,
        }
    }
    Json(report).into_response()
}

pub async fn list_tags(State(st): State<AppState>) -> Response {
    Json(st.engine.tags()).into_response()
}

pub async fn create_tag(State(st): State<AppState>, body: Bytes) -> Response {
    let entry: TagEntry = match serde_json::from_slice(&body) {
        Ok(e) => e,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("expected {{\"label\",\"epc\"}}: {e}")),
    };
    match st.engine.register_tag(&entry.label, &entry.epc) {
        Ok(tag) => (StatusCode::CREATED, Json(tag)).into_response(),
        Err(e) if e.is_conflict() => error(StatusCode::CONFLICT, e.to_string()),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

pub async fn delete_tag(State(st): State<AppState>, Path(label): Path<String>) -> Response {
    match st.engine.remove_tag(&label) {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error(StatusCode::NOT_FOUND, e.to_string()),
    }
}

/// Body of the config resource: detection parameters plus antenna roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigDoc {
    #[serde(flatten)]
    pub params: DetectionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antennas: Option<Vec<AntennaAssignment>>,
}

pub async fn get_config(State(st): State<AppState>) -> Response {
    let cfg = st.engine.runtime_config();
    Json(ConfigDoc {
        params: cfg.params,
        antennas: Some(cfg.antennas.assignments()),
    })
    .into_response()
}

pub async fn put_config(State(st): State<AppState>, body: Bytes) -> Response {
    let value: serde_json::Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid JSON: {e}")),
    };
    let doc: ConfigDoc = match serde_json::from_value(value) {
        Ok(d) => d,
        Err(e) => return error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    };
    let antennas = doc.antennas.as_deref().map(AntennaMap::from_assignments);
    match st.engine.update_config(doc.params, antennas) {
        Ok(()) => get_config(State(st)).await,
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
    }
}

#[derive(Debug, Default, Deserialize)]
pub struct TrialsQuery {
    pub tag: Option<String>,
    pub limit: Option<usize>,
    pub since: Option<String>,
}

pub async fn get_trials(State(st): State<AppState>, Query(q): Query<TrialsQuery>) -> Response {
    let since = match q.since.as_deref().map(DateTime::parse_from_rfc3339) {
        None => None,
        Some(Ok(t)) => Some(t.with_timezone(&Utc)),
        Some(Err(e)) => return error(StatusCode::BAD_REQUEST, format!("since must be RFC 3339: {e}")),
    };
    let filter = TrialFilter {
        tag: q.tag,
        since,
        limit: q.limit,
    };
    let trials = match &st.hub.log {
        Some(log) => match log.load(&filter) {
            Ok(report) => report.trials,
            Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        },
        None => filter.apply(&st.hub.recent()),
    };
    Json(trials).into_response()
}

pub async fn get_stats(State(st): State<AppState>) -> Response {
    let mut v = serde_json::to_value(st.engine.stats()).expect("stats serialize");
    v["subscribers"] = json!(st.hub.broadcaster.subscriber_count());
    Json(v).into_response()
}
