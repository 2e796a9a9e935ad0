use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use super::tag::TagIdentity;
use crate::detect::DetectionParams;

/// Lower bound of the plausible clinical walking range, m/s.
pub const MIN_CLINICAL_SPEED: f64 = 0.2;
/// Upper bound of the plausible clinical walking range, m/s.
pub const MAX_CLINICAL_SPEED: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Classification {
    Success,
    Erroneous,
    SystemFailure,
}

impl Classification {
    pub const ALL: [Classification; 3] = [Self::Success, Self::Erroneous, Self::SystemFailure];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Success => "success",
            Self::Erroneous => "erroneous",
            Self::SystemFailure => "systemFailure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("speed must be finite and non-negative, got {0}")]
pub struct InvalidSpeed(pub f64);

/// Maps a reported speed onto the outcome classes. Zero is reserved for
/// trials that produced no measurement.
pub fn classify_result(speed_mps: f64) -> Result<Classification, InvalidSpeed> {
    if !(speed_mps.is_finite() && speed_mps >= 0.0) {
        return Err(InvalidSpeed(speed_mps));
    }
    Ok(if speed_mps == 0.0 {
        Classification::SystemFailure
    } else if (MIN_CLINICAL_SPEED..=MAX_CLINICAL_SPEED).contains(&speed_mps) {
        Classification::Success
    } else {
        Classification::Erroneous
    })
}

/// One completed walking attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialResult {
    #[serde(flatten)]
    pub tag: TagIdentity,
    pub t_start_us: Option<u64>,
    pub t_end_us: Option<u64>,
    #[serde(serialize_with = "speed_with_three_decimals")]
    pub speed_mps: f64,
    pub classification: Classification,
    #[serde(rename = "entrySamples")]
    pub entry_sample_count: usize,
    #[serde(rename = "exitSamples")]
    pub exit_sample_count: usize,
    pub completed_at: DateTime<Utc>,
    #[serde(rename = "params")]
    pub params_snapshot: DetectionParams,
}

impl TrialResult {
    pub fn failure(tag: TagIdentity, params: DetectionParams, entry: usize, exit: usize) -> Self {
        Self {
            tag,
            t_start_us: None,
            t_end_us: None,
            speed_mps: 0.0,
            classification: Classification::SystemFailure,
            entry_sample_count: entry,
            exit_sample_count: exit,
            completed_at: Utc::now(),
            params_snapshot: params,
        }
    }
}

/// Shortest round-trip rendering, padded to at least three decimals.
pub fn format_speed(v: f64) -> String {
    let mut s = format!("{v}");
    if !v.is_finite() || s.contains('e') {
        return format!("{v:.3}");
    }
    let decimals = s.find('.').map(|i| s.len() - i - 1);
    match decimals {
        None => s.push_str(".000"),
        Some(d) => s.extend(std::iter::repeat_n('0', 3usize.saturating_sub(d))),
    }
    s
}

fn speed_with_three_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format_speed(*v)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_classes() {
        assert_eq!(classify_result(0.751).unwrap(), Classification::Success);
        assert_eq!(classify_result(0.0).unwrap(), Classification::SystemFailure);
        assert_eq!(classify_result(0.19).unwrap(), Classification::Erroneous);
        assert_eq!(classify_result(2.01).unwrap(), Classification::Erroneous);
        assert_eq!(classify_result(0.2).unwrap(), Classification::Success);
        assert_eq!(classify_result(2.0).unwrap(), Classification::Success);
        assert!(classify_result(-0.1).is_err());
        assert!(classify_result(f64::NAN).is_err());
    }

    #[test]
    fn speed_rendering() {
        assert_eq!(format_speed(1.0), "1.000");
        assert_eq!(format_speed(0.751), "0.751");
        assert_eq!(format_speed(0.5), "0.500");
        assert_eq!(format_speed(0.7513148009015778), "0.7513148009015778");
        assert_eq!(format_speed(0.0), "0.000");
        for v in [1.0, 0.25, 0.7513148009015778, 2.5] {
            assert_eq!(format_speed(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn wire_round_trip() {
        let r = TrialResult {
            tag: TagIdentity::new("Tag1", "300833B2DDD9014000000001").unwrap(),
            t_start_us: Some(3_086_000),
            t_end_us: Some(8_410_000),
            speed_mps: 4.0 / 5.324,
            classification: Classification::Success,
            entry_sample_count: 120,
            exit_sample_count: 40,
            completed_at: "2024-05-01T12:00:00.123456Z".parse().unwrap(),
            params_snapshot: DetectionParams::default(),
        };
        let text = serde_json::to_string(&r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "epc",
            "label",
            "tStartUs",
            "tEndUs",
            "speedMps",
            "classification",
            "entrySamples",
            "exitSamples",
            "completedAt",
            "params",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["classification"], "success");
        assert_eq!(serde_json::from_str::<TrialResult>(&text).unwrap(), r);
        let whole = TrialResult { speed_mps: 1.0, ..r };
        assert!(serde_json::to_string(&whole).unwrap().contains("\"speedMps\":1.000"));
    }
}
