use std::collections::VecDeque;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use super::read::AntennaRole;
use super::result::{classify_result, Classification, TrialResult};
use super::tag::TagIdentity;
use crate::detect::{compute_gait_speed, detect_right_edge_reversed, DetectionParams, ForwardDetector, RssiSample};

/// Timing and buffering knobs for one tag session. Times are reader
/// microseconds except where the engine maps them onto wall-clock timers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionSettings {
    pub cooldown_us: u64,
    pub idle_timeout_us: u64,
    pub entry_buffer_capacity: usize,
    /// Exit reads weaker than this do not start exit tracking.
    pub exit_rssi_floor_dbm: Option<f64>,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            cooldown_us: 10_000_000,
            idle_timeout_us: 120_000_000,
            entry_buffer_capacity: 4096,
            exit_rssi_floor_dbm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Phase {
    Idle,
    Accumulating,
    ExitTracking,
    Cooldown,
}

/// Trial lifecycle for a single tag. Owned by exactly one consumer.
#[derive(Debug, Clone)]
pub struct TagSession {
    tag: TagIdentity,
    settings: SessionSettings,
    phase: Phase,
    entry_buffer: VecDeque<RssiSample>,
    entry_used: usize,
    exit_detector: Option<ForwardDetector>,
    exit_count: usize,
    t_start_us: Option<u64>,
    last_read_us: Option<u64>,
    cooldown_until_us: Option<u64>,
    params: Option<DetectionParams>,
    evicted: u64,
}

impl TagSession {
    pub fn new(tag: TagIdentity, settings: SessionSettings) -> Self {
        Self {
            tag,
            settings,
            phase: Phase::Idle,
            entry_buffer: VecDeque::new(),
            entry_used: 0,
            exit_detector: None,
            exit_count: 0,
            t_start_us: None,
            last_read_us: None,
            cooldown_until_us: None,
            params: None,
            evicted: 0,
        }
    }

    pub fn tag(&self) -> &TagIdentity {
        &self.tag
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn entry_len(&self) -> usize {
        self.entry_buffer.len()
    }

    pub fn t_start_us(&self) -> Option<u64> {
        self.t_start_us
    }

    pub fn cooldown_until_us(&self) -> Option<u64> {
        self.cooldown_until_us
    }

    pub fn last_read_us(&self) -> Option<u64> {
        self.last_read_us
    }

    /// Entry samples dropped because the buffer was full.
    pub fn evicted(&self) -> u64 {
        self.evicted
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn in_trial(&self) -> bool {
        matches!(self.phase, Phase::Accumulating | Phase::ExitTracking)
    }

    /// Advances the state machine by one routed read. `params` is only
    /// consulted when a trial starts; running trials keep their snapshot.
    pub fn process_read(&mut self, role: AntennaRole, sample: RssiSample, params: &DetectionParams) -> Vec<TrialResult> {
        let mut out = Vec::new();
        let ts = sample.timestamp_us;
        if self.phase == Phase::Cooldown {
            if self.cooldown_until_us.is_some_and(|until| ts < until) {
                return out;
            }
            self.phase = Phase::Idle;
            self.cooldown_until_us = None;
        }
        if self.in_trial()
            && self
                .last_read_us
                .is_some_and(|last| ts > last.saturating_add(self.settings.idle_timeout_us))
        {
            out.extend(self.abandon());
        }
        match (role, self.phase) {
            (AntennaRole::Ignored, _) => {}
            (AntennaRole::Entry, Phase::Idle | Phase::Accumulating) => {
                if self.entry_buffer.back().is_some_and(|b| ts <= b.timestamp_us) {
                    return out;
                }
                if self.phase == Phase::Idle {
                    self.params = Some(*params);
                    self.phase = Phase::Accumulating;
                }
                self.entry_buffer.push_back(sample);
                if self.entry_buffer.len() > self.settings.entry_buffer_capacity {
                    self.entry_buffer.pop_front();
                    self.evicted += 1;
                }
                self.last_read_us = Some(ts);
            }
            (AntennaRole::Entry, _) => {}
            (AntennaRole::Exit, Phase::Idle | Phase::Accumulating) => {
                if self
                    .settings
                    .exit_rssi_floor_dbm
                    .is_some_and(|floor| sample.rssi_dbm < floor)
                {
                    return out;
                }
                if self.phase == Phase::Idle {
                    self.params = Some(*params);
                }
                self.last_read_us = Some(ts);
                out.extend(self.start_exit(sample));
            }
            (AntennaRole::Exit, Phase::ExitTracking) => {
                self.last_read_us = Some(ts);
                out.extend(self.track_exit(sample));
            }
            (AntennaRole::Exit, Phase::Cooldown) => unreachable!("cooldown handled above"),
        }
        out
    }

    /// Ends a trial that stopped receiving reads; the engine calls this
    /// when its wall-clock inactivity timer expires.
    pub fn expire_idle(&mut self) -> Option<TrialResult> {
        if self.in_trial() {
            self.abandon()
        } else {
            None
        }
    }

    fn snapshot(&self) -> DetectionParams {
        self.params.unwrap_or_default()
    }

    fn start_exit(&mut self, sample: RssiSample) -> Option<TrialResult> {
        let params = self.snapshot();
        let cut = self
            .entry_buffer
            .make_contiguous()
            .partition_point(|s| s.timestamp_us < sample.timestamp_us);
        self.entry_used = cut;
        let entry = &self.entry_buffer.as_slices().0[..cut];
        let edge = detect_right_edge_reversed(entry, params.w1, params.tau1).ok().flatten();
        let detector = ForwardDetector::new(params.w2, params.tau2).ok();
        match (edge, detector) {
            (Some(edge), Some(detector)) => {
                self.t_start_us = Some(edge.edge_timestamp_us);
                self.exit_detector = Some(detector);
                self.phase = Phase::ExitTracking;
                self.entry_buffer.clear();
                self.track_exit(sample)
            }
            _ => {
                self.exit_count = 1;
                let result = TrialResult::failure(self.tag.clone(), params, cut, 1);
                self.enter_cooldown(sample.timestamp_us);
                Some(result)
            }
        }
    }

    fn track_exit(&mut self, sample: RssiSample) -> Option<TrialResult> {
        let detector = self.exit_detector.as_mut()?;
        let before = detector.samples_seen();
        let fired = detector.push(sample);
        if detector.samples_seen() > before {
            self.exit_count += 1;
        }
        let edge = fired?;
        let params = self.snapshot();
        let t_start = self.t_start_us.expect("exit tracking implies a start edge");
        let t_end = edge.edge_timestamp_us;
        let speed = compute_gait_speed(t_start, t_end, params.distance_m).unwrap_or(0.0);
        let classification = classify_result(speed).unwrap_or(Classification::SystemFailure);
        let result = TrialResult {
            tag: self.tag.clone(),
            t_start_us: Some(t_start),
            t_end_us: Some(t_end),
            speed_mps: speed,
            classification,
            entry_sample_count: self.entry_used,
            exit_sample_count: self.exit_count,
            completed_at: Utc::now(),
            params_snapshot: params,
        };
        self.enter_cooldown(sample.timestamp_us);
        Some(result)
    }

    fn abandon(&mut self) -> Option<TrialResult> {
        let (entry, exit) = match self.phase {
            Phase::Accumulating => (self.entry_buffer.len(), 0),
            _ => (self.entry_used, self.exit_count),
        };
        let mut result = TrialResult::failure(self.tag.clone(), self.snapshot(), entry, exit);
        result.t_start_us = self.t_start_us;
        self.reset();
        Some(result)
    }

    fn enter_cooldown(&mut self, now_us: u64) {
        self.reset();
        self.phase = Phase::Cooldown;
        self.cooldown_until_us = Some(now_us.saturating_add(self.settings.cooldown_us));
    }

    fn reset(&mut self) {
        self.phase = Phase::Idle;
        self.entry_buffer.clear();
        self.entry_used = 0;
        self.exit_detector = None;
        self.exit_count = 0;
        self.t_start_us = None;
        self.cooldown_until_us = None;
        self.params = None;
    }
}
