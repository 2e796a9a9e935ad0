use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::Serialize;
use tokio::sync::{mpsc, oneshot, watch, Notify};

use super::config::{ConfigError, ServiceConfig};
use super::read::{AntennaMap, AntennaRole, TagRead};
use super::result::TrialResult;
use super::state::{SessionSettings, TagSession};
use super::tag::{normalize_epc, RegistryError, TagIdentity, TagRegistry};
use crate::detect::{DetectionParams, ParamsError, RssiSample};

/// Receives every completed trial, in completion order per tag. Called from
/// the tag's own task, so implementations must not block for long.
pub trait ResultSink: Send + Sync + 'static {
    fn publish(&self, result: &TrialResult);
}

impl<F> ResultSink for F
where
    F: Fn(&TrialResult) + Send + Sync + 'static,
{
    fn publish(&self, result: &TrialResult) {
        self(result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum RouteOutcome {
    Accepted,
    UnknownEpc,
    IgnoredPort,
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TagStats {
    pub label: String,
    pub epc: String,
    pub accepted: u64,
    pub overflow: u64,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EngineStats {
    pub submitted: u64,
    pub accepted: u64,
    pub ignored_unknown_epc: u64,
    pub ignored_port: u64,
    pub overflow: u64,
    pub tags: Vec<TagStats>,
}

impl EngineStats {
    pub fn ignored(&self) -> u64 {
        self.ignored_unknown_epc + self.ignored_port
    }
}

/// Parameters applied to trials that start after the latest update.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeConfig {
    pub params: DetectionParams,
    pub antennas: AntennaMap,
}

enum Msg {
    Read(AntennaRole, RssiSample),
    Flush(oneshot::Sender<()>),
}

struct TagHandle {
    identity: TagIdentity,
    tx: mpsc::Sender<Msg>,
    accepted: AtomicU64,
    overflow: AtomicU64,
    stall: Arc<Stall>,
}

#[derive(Default)]
struct Stall {
    active: AtomicBool,
    released: Notify,
}

impl Stall {
    async fn wait(&self) {
        while self.active.load(Ordering::Acquire) {
            let notified = self.released.notified();
            if !self.active.load(Ordering::Acquire) {
                break;
            }
            notified.await;
        }
    }

    fn release(&self) {
        self.active.store(false, Ordering::Release);
        self.released.notify_waiters();
    }
}

#[derive(Default)]
struct Tags {
    registry: TagRegistry,
    handles: HashMap<String, Arc<TagHandle>>,
}

#[derive(Default)]
struct Counters {
    submitted: AtomicU64,
    accepted: AtomicU64,
    unknown: AtomicU64,
    ignored_port: AtomicU64,
    overflow: AtomicU64,
}

struct Inner {
    tags: RwLock<Tags>,
    config: watch::Sender<RuntimeConfig>,
    counters: Counters,
    sink: Arc<dyn ResultSink>,
    settings: SessionSettings,
    inbox_capacity: usize,
}

/// Routes reads to one task per registered tag. Cheap to clone.
#[derive(Clone)]
pub struct Engine {
    inner: Arc<Inner>,
}

impl Engine {
    /// Builds the engine and starts a task for every configured tag. Must be
    /// called inside a tokio runtime.
    pub fn new(config: &ServiceConfig, sink: Arc<dyn ResultSink>) -> Result<Self, ConfigError> {
        config.validate()?;
        let runtime = RuntimeConfig {
            params: config.detection,
            antennas: config.antenna_map()?,
        };
        let engine = Self {
            inner: Arc::new(Inner {
                tags: RwLock::new(Tags::default()),
                config: watch::Sender::new(runtime),
                counters: Counters::default(),
                sink,
                settings: config.session.settings(),
                inbox_capacity: config.session.inbox_capacity,
            }),
        };
        for (label, epc) in &config.tags {
            engine
                .register_tag(label, epc)
                .map_err(|source| ConfigError::Tag {
                    label: label.clone(),
                    source,
                })?;
        }
        Ok(engine)
    }

    pub fn register_tag(&self, label: &str, epc: &str) -> Result<TagIdentity, RegistryError> {
        let mut tags = self.inner.tags.write().unwrap_or_else(|e| e.into_inner());
        let identity = tags.registry.register(label, epc)?;
        let (tx, rx) = mpsc::channel(self.inner.inbox_capacity);
        let stall = Arc::new(Stall::default());
        let session = TagSession::new(identity.clone(), self.inner.settings);
        tokio::spawn(run_tag(
            session,
            rx,
            self.inner.config.subscribe(),
            self.inner.sink.clone(),
            stall.clone(),
        ));
        tags.handles.insert(
            identity.epc.clone(),
            Arc::new(TagHandle {
                identity: identity.clone(),
                tx,
                accepted: AtomicU64::new(0),
                overflow: AtomicU64::new(0),
                stall,
            }),
        );
        tracing::info!(label = %identity.label, epc = %identity.epc, "tag registered");
        Ok(identity)
    }

    /// Removes a tag; its task finishes the reads already queued and exits.
    pub fn remove_tag(&self, label: &str) -> Result<TagIdentity, RegistryError> {
        let mut tags = self.inner.tags.write().unwrap_or_else(|e| e.into_inner());
        let identity = tags.registry.remove(label)?;
        if let Some(h) = tags.handles.remove(&identity.epc) {
            h.stall.release();
        }
        Ok(identity)
    }

    pub fn tags(&self) -> Vec<TagIdentity> {
        self.read_tags().registry.tags().to_vec()
    }

    pub fn runtime_config(&self) -> RuntimeConfig {
        self.inner.config.borrow().clone()
    }

    /// Validates and installs new parameters; running trials keep theirs.
    pub fn update_config(&self, params: DetectionParams, antennas: Option<AntennaMap>) -> Result<(), ParamsError> {
        params.validate()?;
        self.inner.config.send_modify(|c| {
            c.params = params;
            if let Some(a) = antennas {
                c.antennas = a;
            }
        });
        Ok(())
    }

    /// Hands one read to its tag's inbox without waiting.
    pub fn route_read(&self, read: &TagRead) -> RouteOutcome {
        let c = &self.inner.counters;
        c.submitted.fetch_add(1, Ordering::Relaxed);
        let handle = {
            let tags = self.read_tags();
            let key = normalize_epc(&read.epc).ok();
            key.and_then(|k| tags.handles.get(&k).cloned())
        };
        let Some(handle) = handle else {
            c.unknown.fetch_add(1, Ordering::Relaxed);
            return RouteOutcome::UnknownEpc;
        };
        let role = self.inner.config.borrow().antennas.role(read.antenna_port);
        if role == AntennaRole::Ignored {
            c.ignored_port.fetch_add(1, Ordering::Relaxed);
            return RouteOutcome::IgnoredPort;
        }
        match handle.tx.try_send(Msg::Read(role, read.sample())) {
            Ok(()) => {
                handle.accepted.fetch_add(1, Ordering::Relaxed);
                c.accepted.fetch_add(1, Ordering::Relaxed);
                RouteOutcome::Accepted
            }
            Err(_) => {
                handle.overflow.fetch_add(1, Ordering::Relaxed);
                c.overflow.fetch_add(1, Ordering::Relaxed);
                RouteOutcome::Overflow
            }
        }
    }

    pub fn stats(&self) -> EngineStats {
        let c = &self.inner.counters;
        let tags = self.read_tags();
        let per_tag = tags
            .registry
            .tags()
            .iter()
            .filter_map(|t| tags.handles.get(&t.epc))
            .map(|h| TagStats {
                label: h.identity.label.clone(),
                epc: h.identity.epc.clone(),
                accepted: h.accepted.load(Ordering::Relaxed),
                overflow: h.overflow.load(Ordering::Relaxed),
                pending: self.inner.inbox_capacity - h.tx.capacity(),
            })
            .collect();
        EngineStats {
            submitted: c.submitted.load(Ordering::Relaxed),
            accepted: c.accepted.load(Ordering::Relaxed),
            ignored_unknown_epc: c.unknown.load(Ordering::Relaxed),
            ignored_port: c.ignored_port.load(Ordering::Relaxed),
            overflow: c.overflow.load(Ordering::Relaxed),
            tags: per_tag,
        }
    }

    /// Fault injection: the tag's task stops consuming its inbox until
    /// `duration` elapses.
    pub fn stall_tag(&self, label: &str, duration: Duration) -> Result<(), RegistryError> {
        let stall = self.handle_by_label(label)?.stall.clone();
        stall.active.store(true, Ordering::Release);
        tokio::spawn(async move {
            tokio::time::sleep(duration).await;
            stall.release();
        });
        Ok(())
    }

    /// Waits until every read routed before this call has been processed.
    pub async fn flush(&self) {
        let senders: Vec<_> = self.read_tags().handles.values().map(|h| h.tx.clone()).collect();
        for tx in senders {
            let (done, wait) = oneshot::channel();
            if tx.send(Msg::Flush(done)).await.is_ok() {
                let _ = wait.await;
            }
        }
    }

    fn handle_by_label(&self, label: &str) -> Result<Arc<TagHandle>, RegistryError> {
        let tags = self.read_tags();
        tags.registry
            .by_label(label)
            .and_then(|t| tags.handles.get(&t.epc).cloned())
            .ok_or_else(|| RegistryError::UnknownLabel(label.to_string()))
    }

    fn read_tags(&self) -> std::sync::RwLockReadGuard<'_, Tags> {
        self.inner.tags.read().unwrap_or_else(|e| e.into_inner())
    }
}

async fn run_tag(
    mut session: TagSession,
    mut rx: mpsc::Receiver<Msg>,
    config: watch::Receiver<RuntimeConfig>,
    sink: Arc<dyn ResultSink>,
    stall: Arc<Stall>,
) {
    let idle = Duration::from_micros(session.settings().idle_timeout_us);
    loop {
        stall.wait().await;
        let msg = match tokio::time::timeout(idle, rx.recv()).await {
            Ok(Some(m)) => m,
            Ok(None) => break,
            Err(_) => {
                if let Some(r) = session.expire_idle() {
                    tracing::debug!(label = %session.tag().label, "trial abandoned after inactivity");
                    sink.publish(&r);
                }
                continue;
            }
        };
        match msg {
            Msg::Read(role, sample) => {
                let params = config.borrow().params;
                for r in session.process_read(role, sample, &params) {
                    sink.publish(&r);
                }
            }
            Msg::Flush(done) => {
                let _ = done.send(());
            }
        }
    }
    tracing::debug!(label = %session.tag().label, "tag task finished");
}
