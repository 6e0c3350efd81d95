use serde::{Deserialize, Serialize};

use crate::sensor::{HandSide, MotionType, SensorFrame};

/// Consecutive frames of one recording session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionFrames {
    pub respondent: String,
    pub motion: MotionType,
    pub side: HandSide,
    pub frames: Vec<SensorFrame>,
}

/// Splits an export-ordered frame list into sessions. A new session starts
/// whenever the respondent, motion or side changes, or the timestamp goes
/// backwards.
pub fn group_sessions(frames: Vec<SensorFrame>) -> Vec<SessionFrames> {
    let mut sessions: Vec<SessionFrames> = Vec::new();
    for frame in frames {
        let continues = sessions.last().is_some_and(|s| {
            s.respondent == frame.respondent
                && s.motion == frame.motion_type
                && s.side == frame.side
                && s.frames.last().is_some_and(|f| f.timestamp <= frame.timestamp)
        });
        if continues {
            sessions.last_mut().unwrap().frames.push(frame);
        } else {
            sessions.push(SessionFrames {
                respondent: frame.respondent.clone(),
                motion: frame.motion_type,
                side: frame.side,
                frames: vec![frame],
            });
        }
    }
    sessions
}

/// A fixed-length `T × F` block of frames from a single session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceWindow {
    pub respondent: String,
    pub motion: MotionType,
    pub side: HandSide,
    /// Frame offset of the window's first step inside its session.
    pub offset: usize,
    pub steps: usize,
    pub features: usize,
    /// Row-major `steps × features`.
    pub values: Vec<f64>,
}

impl SequenceWindow {
    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.features..(t + 1) * self.features]
    }
}

/// Number of windows of length `length` at stride `stride` in `n` frames.
pub fn window_count(n: usize, length: usize, stride: usize) -> usize {
    if n < length {
        0
    } else {
        (n - length) / stride + 1
    }
}

/// Cuts every session into windows starting at offsets `0, S, 2S, …`.
/// Trailing frames that do not fill a window are dropped, and a window never
/// crosses a session boundary.
///
/// # Panics
/// If `length` or `stride` is zero, or a feature index is not a channel.
pub fn window_sessions(
    sessions: &[SessionFrames],
    feature_indices: &[usize],
    length: usize,
    stride: usize,
) -> Vec<SequenceWindow> {
    assert!(length >= 1 && stride >= 1, "window length and stride must be positive");
    let f = feature_indices.len();
    let mut out = Vec::new();
    for session in sessions {
        let rows: Vec<Vec<f64>> = session
            .frames
            .iter()
            .map(|fr| {
                let all = fr.channels();
                feature_indices.iter().map(|&i| all[i]).collect()
            })
            .collect();
        for w in 0..window_count(rows.len(), length, stride) {
            let offset = w * stride;
            let mut values = Vec::with_capacity(length * f);
            for row in &rows[offset..offset + length] {
                values.extend_from_slice(row);
            }
            out.push(SequenceWindow {
                respondent: session.respondent.clone(),
                motion: session.motion,
                side: session.side,
                offset,
                steps: length,
                features: f,
                values,
            });
        }
    }
    out
}

/// One-hot target vector for a motion class.
pub fn one_hot(motion: MotionType) -> [f64; MotionType::COUNT] {
    let mut v = [0.0; MotionType::COUNT];
    v[motion.index()] = 1.0;
    v
}
