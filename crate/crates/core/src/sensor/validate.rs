use serde::Serialize;

use super::{SensorFrame, SensorGroup};

/// One failed frame invariant, named by the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl Violation {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Violation { field, reason: reason.into() }
    }
}

/// Checks every frame invariant. Violations come back in field order, so the
/// first entry is the first violated field.
pub fn validate_frame(frame: &SensorFrame) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    if frame.respondent.is_empty() {
        violations.push(Violation::new("respondent", "empty respondent code"));
    } else if frame.respondent.contains([',', '"', '\n', '\r']) {
        violations.push(Violation::new("respondent", "respondent code contains a CSV delimiter"));
    }
    if !frame.timestamp.is_finite() || frame.timestamp <= 0.0 {
        violations.push(Violation::new("timestamp", format!("timestamp must be positive, got {}", frame.timestamp)));
    }
    for group in SensorGroup::ALL {
        let values = frame.group(group);
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            violations.push(Violation::new(group.name(), format!("component {k} is not finite")));
        } else if group == SensorGroup::Quaternion
            && frame.availability_mask.contains(group)
            && values.iter().all(|v| *v == 0.0)
        {
            violations.push(Violation::new(group.name(), "zero quaternion marked as measured"));
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::{AvailabilityMask, HandSide, MotionType};

    fn frame() -> SensorFrame {
        SensorFrame {
            respondent: "S01".into(),
            timestamp: 1_690_000_000.25,
            accelerometer: [0.1, 0.2, 9.8],
            magnetometer: [20.0, 0.0, -40.0],
            gyroscope: [0.0; 3],
            linear_accelerometer: [0.1, 0.2, 0.0],
            gravity: [0.0, 0.0, -9.80665],
            euler: [0.0; 3],
            quaternion: [0.0, 0.0, 0.0, 1.0],
            inverse_quaternion: [0.0, 0.0, 0.0, 1.0],
            relative_orientation: [0.0; 3],
            motion_type: MotionType::BicepCurls,
            side: HandSide::Left,
            availability_mask: AvailabilityMask::ALL,
        }
    }

    #[test]
    fn well_formed_frame_accepted() {
        assert_eq!(validate_frame(&frame()), Ok(()));
    }

    #[test]
    fn negative_timestamp() {
        let mut f = frame();
        f.timestamp = -1.0;
        assert_eq!(validate_frame(&f).unwrap_err()[0].field, "timestamp");
    }

    #[test]
    fn nan_accelerometer() {
        let mut f = frame();
        f.accelerometer[0] = f64::NAN;
        assert_eq!(validate_frame(&f).unwrap_err()[0].field, "accelerometer");
    }

    #[test]
    fn zero_quaternion_only_allowed_when_unavailable() {
        let mut f = frame();
        f.quaternion = [0.0; 4];
        assert_eq!(validate_frame(&f).unwrap_err()[0].field, "quaternion");
        f.availability_mask = f.availability_mask.with(SensorGroup::Quaternion, false);
        assert_eq!(validate_frame(&f), Ok(()));
    }

    #[test]
    fn reports_every_violation_in_field_order() {
        let mut f = frame();
        f.respondent.clear();
        f.gyroscope[2] = f64::INFINITY;
        let fields: Vec<_> = validate_frame(&f).unwrap_err().into_iter().map(|v| v.field).collect();
        assert_eq!(fields, ["respondent", "gyroscope"]);
    }
}
