use std::time::Duration;

use serde::Serialize;
use tokio::time::Instant;

use crate::session::TagRead;

pub const ENDPOINT_ENV: &str = "GAITSPEED_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8080/api/reads";

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOptions {
    /// Full URL of the read-ingestion endpoint.
    pub endpoint: String,
    pub batch_window_us: u64,
    /// Multiplier on recorded inter-batch gaps; 0 sends back-to-back.
    pub time_scale: f64,
    pub retries: u32,
    pub retry_delay: Duration,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            batch_window_us: 100_000,
            time_scale: 1.0,
            retries: 3,
            retry_delay: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub batches_total: usize,
    pub batches_sent: usize,
    pub reads_sent: usize,
    /// Set when the replay stopped early.
    pub aborted: Option<String>,
}

/// Groups time-ordered reads into consecutive windows of `window_us`,
/// measured from the first read. Empty windows produce no batch.
pub fn batch_reads(reads: &[TagRead], window_us: u64) -> Vec<Vec<TagRead>> {
    let mut sorted = reads.to_vec();
    sorted.sort_by_key(|r| r.timestamp_us);
    let Some(t0) = sorted.first().map(|r| r.timestamp_us) else {
        return Vec::new();
    };
    let window = window_us.max(1);
    let mut batches: Vec<Vec<TagRead>> = Vec::new();
    let mut current = None;
    for r in sorted {
        let k = (r.timestamp_us - t0) / window;
        if current != Some(k) {
            batches.push(Vec::new());
            current = Some(k);
        }
        batches.last_mut().expect("pushed above").push(r);
    }
    batches
}

/// POSTs reads in recorded order, pacing batches by their first timestamp.
pub async fn replay(reads: &[TagRead], opts: &ReplayOptions) -> ReplayReport {
    let batches = batch_reads(reads, opts.batch_window_us);
    let mut report = ReplayReport {
        batches_total: batches.len(),
        batches_sent: 0,
        reads_sent: 0,
        aborted: None,
    };
    let client = reqwest::Client::new();
    let start = Instant::now();
    let t0 = batches.first().map(|b| b[0].timestamp_us).unwrap_or(0);
    for batch in &batches {
        if opts.time_scale > 0.0 {
            let offset_s = (batch[0].timestamp_us - t0) as f64 * 1e-6 * opts.time_scale;
            tokio::time::sleep_until(start + Duration::from_secs_f64(offset_s)).await;
        }
        let body = serde_json::to_vec(batch).expect("reads always serialize");
        match post_with_retries(&client, &opts.endpoint, body, opts).await {
            Ok(()) => {
                report.batches_sent += 1;
                report.reads_sent += batch.len();
            }
            Err(e) => {
                tracing::error!(error = %e, sent = report.batches_sent, "replay aborted");
                report.aborted = Some(e);
                break;
            }
        }
    }
    report
}

async fn post_with_retries(
    client: &reqwest::Client,
    endpoint: &str,
    body: Vec<u8>,
    opts: &ReplayOptions,
) -> Result<(), String> {
    let mut last = String::new();
    for attempt in 0..=opts.retries {
        if attempt > 0 {
            tokio::time::sleep(opts.retry_delay).await;
        }
        let sent = client
            .post(endpoint)
            .header("content-type", "application/json")
            .body(body.clone())
            .send()
            .await;
        match sent {
            Ok(resp) if resp.status().is_success() => return Ok(()),
            // The server understood and refused the batch; retrying will not help.
            Ok(resp) if resp.status().is_client_error() => {
                return Err(format!("endpoint rejected batch with {}", resp.status()));
            }
            Ok(resp) => last = format!("endpoint returned {}", resp.status()),
            Err(e) => last = e.to_string(),
        }
        tracing::warn!(attempt = attempt + 1, error = %last, "batch post failed");
    }
    Err(format!("giving up after {} retries: {last}", opts.retries))
}
