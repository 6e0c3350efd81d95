//! Sensor frame domain types, orientation math, validation and the canonical
//! CSV layout.
//!
//! A [`SensorFrame`] carries 29 numeric channels grouped into nine sensor
//! groups. Channel order is fixed and shared by the CSV export, feature
//! selection and the classifier's feature lists.

mod csv;
mod orientation;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::csv::{csv_header, frame_to_csv_row, parse_csv, parse_csv_row, CsvError, CSV_COLUMNS};
pub use self::orientation::{
    euler_to_quaternion, gravity_from_euler, hamilton_product, quaternion_inverse,
    OrientationError, Quaternion, Vec3, IDENTITY_QUATERNION, STANDARD_GRAVITY,
};
pub use self::validate::{validate_frame, Violation};

/// Number of numeric sensor channels in a frame.
pub const CHANNEL_COUNT: usize = 29;

/// Channel names in canonical column order.
pub const CHANNEL_NAMES: [&str; CHANNEL_COUNT] = [
    "accelerometer_x",
    "accelerometer_y",
    "accelerometer_z",
    "magnetometer_x",
    "magnetometer_y",
    "magnetometer_z",
    "gyroscope_x",
    "gyroscope_y",
    "gyroscope_z",
    "linear_accelerometer_x",
    "linear_accelerometer_y",
    "linear_accelerometer_z",
    "gravity_x",
    "gravity_y",
    "gravity_z",
    "euler_x",
    "euler_y",
    "euler_z",
    "quaternion_x",
    "quaternion_y",
    "quaternion_z",
    "quaternion_w",
    "inverse_quaternion_x",
    "inverse_quaternion_y",
    "inverse_quaternion_z",
    "inverse_quaternion_w",
    "relative_orientation_x",
    "relative_orientation_y",
    "relative_orientation_z",
];

/// Index of a channel by name.
pub fn channel_index(name: &str) -> Option<usize> {
    CHANNEL_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} '{value}'")]
pub struct ParseLabelError {
    pub kind: &'static str,
    pub value: String,
}

/// The nine upper-limb strength-training motions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionType {
    OverheadPress,
    BicepCurls,
    LateralRaise,
    OverheadTriceps,
    DiagonalShoulderRaise,
    ForwardPunches,
    ReverseFly,
    SeatedRows,
    ModifiedSkullCrushers,
}

impl MotionType {
    pub const COUNT: usize = 9;

    pub const ALL: [MotionType; Self::COUNT] = [
        MotionType::OverheadPress,
        MotionType::BicepCurls,
        MotionType::LateralRaise,
        MotionType::OverheadTriceps,
        MotionType::DiagonalShoulderRaise,
        MotionType::ForwardPunches,
        MotionType::ReverseFly,
        MotionType::SeatedRows,
        MotionType::ModifiedSkullCrushers,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotionType::OverheadPress => "overhead_press",
            MotionType::BicepCurls => "bicep_curls",
            MotionType::LateralRaise => "lateral_raise",
            MotionType::OverheadTriceps => "overhead_triceps",
            MotionType::DiagonalShoulderRaise => "diagonal_shoulder_raise",
            MotionType::ForwardPunches => "forward_punches",
            MotionType::ReverseFly => "reverse_fly",
            MotionType::SeatedRows => "seated_rows",
            MotionType::ModifiedSkullCrushers => "modified_skull_crushers",
        }
    }
}

impl fmt::Display for MotionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotionType {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ParseLabelError { kind: "motion_type", value: s.to_string() })
    }
}

/// Which wrist the device was worn on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandSide {
    Left,
    Right,
}

impl HandSide {
    pub const ALL: [HandSide; 2] = [HandSide::Left, HandSide::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            HandSide::Left => "left",
            HandSide::Right => "right",
        }
    }
}

impl fmt::Display for HandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HandSide {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(HandSide::Left),
            "right" => Ok(HandSide::Right),
            _ => Err(ParseLabelError { kind: "side", value: s.to_string() }),
        }
    }
}

/// The nine numeric sensor groups of a frame, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorGroup {
    Accelerometer,
    Magnetometer,
    Gyroscope,
    LinearAccelerometer,
    Gravity,
    Euler,
    Quaternion,
    InverseQuaternion,
    RelativeOrientation,
}

impl SensorGroup {
    pub const ALL: [SensorGroup; 9] = [
        SensorGroup::Accelerometer,
        SensorGroup::Magnetometer,
        SensorGroup::Gyroscope,
        SensorGroup::LinearAccelerometer,
        SensorGroup::Gravity,
        SensorGroup::Euler,
        SensorGroup::Quaternion,
        SensorGroup::InverseQuaternion,
        SensorGroup::RelativeOrientation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorGroup::Accelerometer => "accelerometer",
            SensorGroup::Magnetometer => "magnetometer",
            SensorGroup::Gyroscope => "gyroscope",
            SensorGroup::LinearAccelerometer => "linear_accelerometer",
            SensorGroup::Gravity => "gravity",
            SensorGroup::Euler => "euler",
            SensorGroup::Quaternion => "quaternion",
            SensorGroup::InverseQuaternion => "inverse_quaternion",
            SensorGroup::RelativeOrientation => "relative_orientation",
        }
    }

    pub fn width(self) -> usize {
        match self {
            SensorGroup::Quaternion | SensorGroup::InverseQuaternion => 4,
            _ => 3,
        }
    }

    /// Offset of the group's first channel in the 29-channel vector.
    pub fn offset(self) -> usize {
        Self::ALL[..self.bit() as usize].iter().map(|g| g.width()).sum()
    }

    fn bit(self) -> u16 {
        self as u16
    }

    /// Group owning the channel at `index`.
    pub fn of_channel(index: usize) -> Option<SensorGroup> {
        Self::ALL.into_iter().find(|g| (g.offset()..g.offset() + g.width()).contains(&index))
    }
}

/// Which sensor groups were genuinely measured. Unavailable groups are
/// zero-filled in the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AvailabilityMask(u16);

impl AvailabilityMask {
    pub const ALL: AvailabilityMask = AvailabilityMask((1 << 9) - 1);
    pub const NONE: AvailabilityMask = AvailabilityMask(0);

    pub fn from_bits(bits: u16) -> Option<Self> {
        (bits & !Self::ALL.0 == 0).then_some(AvailabilityMask(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, group: SensorGroup) -> bool {
        self.0 & (1 << group.bit()) != 0
    }

    pub fn with(self, group: SensorGroup, available: bool) -> Self {
        if available {
            AvailabilityMask(self.0 | (1 << group.bit()))
        } else {
            AvailabilityMask(self.0 & !(1 << group.bit()))
        }
    }
}

impl Default for AvailabilityMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// One timestamped multi-sensor sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub respondent: String,
    /// Unix seconds (UTC) with fractional part.
    pub timestamp: f64,
    pub accelerometer: Vec3,
    pub magnetometer: Vec3,
    pub gyroscope: Vec3,
    pub linear_accelerometer: Vec3,
    pub gravity: Vec3,
    pub euler: Vec3,
    pub quaternion: Quaternion,
    pub inverse_quaternion: Quaternion,
    pub relative_orientation: Vec3,
    pub motion_type: MotionType,
    pub side: HandSide,
    #[serde(default)]
    pub availability_mask: AvailabilityMask,
}

impl SensorFrame {
    /// All 29 numeric channels in canonical order.
    pub fn channels(&self) -> [f64; CHANNEL_COUNT] {
        let mut out = [0.0; CHANNEL_COUNT];
        for group in SensorGroup::ALL {
            let off = group.offset();
            out[off..off + group.width()].copy_from_slice(self.group(group));
        }
        out
    }

    pub fn channel(&self, index: usize) -> f64 {
        let group = SensorGroup::of_channel(index).expect("channel index out of range");
        self.group(group)[index - group.offset()]
    }

    pub fn group(&self, group: SensorGroup) -> &[f64] {
        match group {
            SensorGroup::Accelerometer => &self.accelerometer,
            SensorGroup::Magnetometer => &self.magnetometer,
            SensorGroup::Gyroscope => &self.gyroscope,
            SensorGroup::LinearAccelerometer => &self.linear_accelerometer,
            SensorGroup::Gravity => &self.gravity,
            SensorGroup::Euler => &self.euler,
            SensorGroup::Quaternion => &self.quaternion,
            SensorGroup::InverseQuaternion => &self.inverse_quaternion,
            SensorGroup::RelativeOrientation => &self.relative_orientation,
        }
    }

    pub fn group_mut(&mut self, group: SensorGroup) -> &mut [f64] {
        match group {
            SensorGroup::Accelerometer => &mut self.accelerometer,
            SensorGroup::Magnetometer => &mut self.magnetometer,
            SensorGroup::Gyroscope => &mut self.gyroscope,
            SensorGroup::LinearAccelerometer => &mut self.linear_accelerometer,
            SensorGroup::Gravity => &mut self.gravity,
            SensorGroup::Euler => &mut self.euler,
            SensorGroup::Quaternion => &mut self.quaternion,
            SensorGroup::InverseQuaternion => &mut self.inverse_quaternion,
            SensorGroup::RelativeOrientation => &mut self.relative_orientation,
        }
    }

    /// Mask with every all-zero group marked unavailable. Used when frames are
    /// read back from CSV, which does not carry the mask.
    pub fn inferred_mask(&self) -> AvailabilityMask {
        SensorGroup::ALL.into_iter().fold(AvailabilityMask::ALL, |mask, g| {
            mask.with(g, self.group(g).iter().any(|v| *v != 0.0))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Finished,
    Synced,
}

/// A labeled start/stop capture for one respondent, motion and hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSession {
    pub session_id: String,
    pub respondent: String,
    pub motion_type: MotionType,
    pub side: HandSide,
    pub started_at: f64,
    pub finished_at: f64,
    pub frames: Vec<SensorFrame>,
    pub status: SessionStatus,
}

impl RecordingSession {
    /// Checks label agreement and timestamp monotonicity of the frames.
    pub fn is_consistent(&self) -> bool {
        self.frames.iter().all(|f| {
            f.respondent == self.respondent && f.motion_type == self.motion_type && f.side == self.side
        }) && self.frames.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }

    /// Seconds between the first and last frame; zero when fewer than two.
    pub fn duration_s(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.timestamp - a.timestamp,
            _ => 0.0,
        }
    }
}
