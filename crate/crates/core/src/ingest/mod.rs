//! Frame ingestion: durable session store, HTTP service and client.

mod client;
mod server;
mod store;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::sensor::{AvailabilityMask, HandSide, MotionType, Quaternion, SensorFrame, Vec3};

pub use client::{Client, ClientError};
pub use server::{router, serve, ServerHandle};
pub use store::{ExportFilter, FinishSummary, SessionInfo, SessionStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String, index: Option<usize> },
    #[error("session {0} not found")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl IngestError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Invalid { field: field.into(), message: message.into(), index: None }
    }

    pub(crate) fn at(index: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::Invalid { field: field.into(), message: message.into(), index: Some(index) }
    }

    /// Short machine-readable kind used in error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::Invalid { .. } => "invalid",
            IngestError::NotFound(_) => "not_found",
            IngestError::Conflict(_) => "conflict",
            IngestError::Storage(_) => "storage",
        }
    }
}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::Storage(e.to_string())
    }
}

fn nullable<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[f64; N], D::Error> {
    let raw: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    if raw.len() != N {
        return Err(serde::de::Error::invalid_length(raw.len(), &format!("{N} components").as_str()));
    }
    Ok(std::array::from_fn(|i| raw[i].unwrap_or(f64::NAN)))
}

/// A frame as sent by capture clients. Labels are optional and default to
/// the session's; `null` components decode as NaN so validation can name
/// the offending sensor group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFrame {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub respondent: Option<String>,
    pub timestamp: f64,
    #[serde(deserialize_with = "nullable")]
    pub accelerometer: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub magnetometer: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub gyroscope: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub linear_accelerometer: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub gravity: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub euler: Vec3,
    #[serde(deserialize_with = "nullable")]
    pub quaternion: Quaternion,
    #[serde(deserialize_with = "nullable")]
    pub inverse_quaternion: Quaternion,
    #[serde(deserialize_with = "nullable")]
    pub relative_orientation: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion_type: Option<MotionType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<HandSide>,
    #[serde(default)]
    pub availability_mask: AvailabilityMask,
}

impl From<&SensorFrame> for WireFrame {
    fn from(f: &SensorFrame) -> Self {
        WireFrame {
            respondent: Some(f.respondent.clone()),
            timestamp: f.timestamp,
            accelerometer: f.accelerometer,
            magnetometer: f.magnetometer,
            gyroscope: f.gyroscope,
            linear_accelerometer: f.linear_accelerometer,
            gravity: f.gravity,
            euler: f.euler,
            quaternion: f.quaternion,
            inverse_quaternion: f.inverse_quaternion,
            relative_orientation: f.relative_orientation,
            motion_type: Some(f.motion_type),
            side: Some(f.side),
            availability_mask: f.availability_mask,
        }
    }
}

impl WireFrame {
    /// Fills in session labels, rejecting labels that disagree with them.
    pub(crate) fn into_frame(
        self,
        index: usize,
        respondent: &str,
        motion: MotionType,
        side: HandSide,
    ) -> Result<SensorFrame, IngestError> {
        let mismatch = |field: &str, found: &dyn std::fmt::Display, expected: &dyn std::fmt::Display| {
            IngestError::at(index, format!("frames[{index}].{field}"), format!("{found} does not match session {expected}"))
        };
        if let Some(r) = &self.respondent {
            if r != respondent {
                return Err(mismatch("respondent", r, &respondent));
            }
        }
        if let Some(m) = self.motion_type {
            if m != motion {
                return Err(mismatch("motion_type", &m, &motion));
            }
        }
        if let Some(s) = self.side {
            if s != side {
                return Err(mismatch("side", &s, &side));
            }
        }
        Ok(SensorFrame {
            respondent: respondent.to_string(),
            timestamp: self.timestamp,
            accelerometer: self.accelerometer,
            magnetometer: self.magnetometer,
            gyroscope: self.gyroscope,
            linear_accelerometer: self.linear_accelerometer,
            gravity: self.gravity,
            euler: self.euler,
            quaternion: self.quaternion,
            inverse_quaternion: self.inverse_quaternion,
            relative_orientation: self.relative_orientation,
            motion_type: motion,
            side,
            availability_mask: self.availability_mask,
        })
    }
}

/// Rejects respondent codes that cannot be stored or exported verbatim.
pub fn check_respondent(code: &str) -> Result<(), IngestError> {
    if code.trim().is_empty() {
        return Err(IngestError::invalid("respondent", "must not be empty"));
    }
    if code.contains([',', '"', '\n', '\r']) {
        return Err(IngestError::invalid("respondent", "must not contain commas, quotes or line breaks"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::synth_session;

    #[test]
    fn null_component_decodes_as_nan() {
        let s = synth_session("S01", MotionType::BicepCurls, HandSide::Left, 1);
        let mut v = serde_json::to_value(WireFrame::from(&s.frames[0])).unwrap();
        v["gyroscope"][1] = serde_json::Value::Null;
        let w: WireFrame = serde_json::from_value(v).unwrap();
        assert!(w.gyroscope[1].is_nan());
    }

    #[test]
    fn labels_default_to_session() {
        let s = synth_session("S01", MotionType::BicepCurls, HandSide::Left, 1);
        let mut w = WireFrame::from(&s.frames[0]);
        w.respondent = None;
        w.motion_type = None;
        w.side = None;
        let f = w.into_frame(0, "S01", MotionType::BicepCurls, HandSide::Left).unwrap();
        assert_eq!(f, s.frames[0]);
    }

    #[test]
    fn mismatched_label_names_the_field() {
        let s = synth_session("S01", MotionType::BicepCurls, HandSide::Left, 1);
        let err = WireFrame::from(&s.frames[0]).into_frame(4, "S01", MotionType::BicepCurls, HandSide::Right).unwrap_err();
        assert!(matches!(err, IngestError::Invalid { ref field, index: Some(4), .. } if field == "frames[4].side"));
    }

    #[test]
    fn respondent_rules() {
        assert!(check_respondent("S01").is_ok());
        assert!(matches!(check_respondent(""), Err(IngestError::Invalid { ref field, .. }) if field == "respondent"));
        assert!(check_respondent("  ").is_err());
        assert!(check_respondent("a,b").is_err());
    }
}
