use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use crate::session::{ResultSink, TrialLog, TrialResult};

pub const RESULT_MESSAGE_TYPE: &str = "gait_speed";

/// Push-channel envelope around a trial result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMessage {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(flatten)]
    pub result: TrialResult,
}

impl ResultMessage {
    pub fn new(result: TrialResult) -> Self {
        Self {
            kind: RESULT_MESSAGE_TYPE.to_string(),
            result,
        }
    }
}

struct Subscriber {
    id: u64,
    tx: mpsc::Sender<Arc<str>>,
}

/// Receiving side of one subscription. When the broadcaster drops the
/// subscriber, `rx` yields `None`.
pub struct Subscription {
    pub id: u64,
    pub rx: mpsc::Receiver<Arc<str>>,
}

/// Fan-out with an independent bounded queue per subscriber. A subscriber
/// whose queue is full is disconnected instead of slowing the sender.
pub struct Broadcaster {
    subscribers: Mutex<Vec<Subscriber>>,
    queue: usize,
    next_id: AtomicU64,
}

impl Broadcaster {
    pub fn new(queue: usize) -> Self {
        Self {
            subscribers: Mutex::new(Vec::new()),
            queue: queue.max(1),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn subscribe(&self) -> Subscription {
        let (tx, rx) = mpsc::channel(self.queue);
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        self.lock().push(Subscriber { id, tx });
        Subscription { id, rx }
    }

    pub fn unsubscribe(&self, id: u64) {
        self.lock().retain(|s| s.id != id);
    }

    pub fn subscriber_count(&self) -> usize {
        self.lock().len()
    }

    /// Queues the message for every subscriber and returns how many took it.
    pub fn broadcast(&self, result: &TrialResult) -> usize {
        let text: Arc<str> = serde_json::to_string(&ResultMessage::new(result.clone()))
            .expect("results always serialize")
            .into();
        self.broadcast_text(text)
    }

    pub fn broadcast_text(&self, text: Arc<str>) -> usize {
        let mut delivered = 0;
        self.lock().retain(|s| match s.tx.try_send(text.clone()) {
            Ok(()) => {
                delivered += 1;
                true
            }
            Err(mpsc::error::TrySendError::Full(_)) => {
                tracing::warn!(subscriber = s.id, "subscriber queue full; disconnecting");
                false
            }
            Err(mpsc::error::TrySendError::Closed(_)) => false,
        });
        delivered
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Vec<Subscriber>> {
        self.subscribers.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Where completed trials go: the trial log, a bounded in-memory history
/// and the push channel.
pub struct ResultHub {
    pub log: Option<TrialLog>,
    pub broadcaster: Broadcaster,
    recent: Mutex<VecDeque<TrialResult>>,
    recent_cap: usize,
}

impl ResultHub {
    pub fn new(log: Option<TrialLog>, subscriber_queue: usize) -> Self {
        Self {
            log,
            broadcaster: Broadcaster::new(subscriber_queue),
            recent: Mutex::new(VecDeque::new()),
            recent_cap: 10_000,
        }
    }

    /// Results held in memory, oldest first.
    pub fn recent(&self) -> Vec<TrialResult> {
        self.recent
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .cloned()
            .collect()
    }
}

impl ResultSink for ResultHub {
    fn publish(&self, result: &TrialResult) {
        if let Some(log) = &self.log {
            if let Err(e) = log.persist(result) {
                tracing::error!(error = %e, "failed to persist trial");
            }
        }
        {
            let mut recent = self.recent.lock().unwrap_or_else(|e| e.into_inner());
            recent.push_back(result.clone());
            if recent.len() > self.recent_cap {
                recent.pop_front();
            }
        }
        let n = self.broadcaster.broadcast(result);
        tracing::info!(
            label = %result.tag.label,
            speed = result.speed_mps,
            classification = result.classification.as_str(),
            subscribers = n,
            "trial completed"
        );
    }
}
