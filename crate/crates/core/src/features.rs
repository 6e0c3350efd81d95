//! Pearson-correlation filter over the sensor channels.
//!
//! Every channel is correlated against an anchor channel (by default
//! `accelerometer_x`) separately per hand side; channels with `|r| >= θ` are
//! kept. The per-side selections are then merged into the ordered feature
//! list the classifier consumes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::{channel_index, HandSide, SensorFrame, CHANNEL_COUNT, CHANNEL_NAMES};

pub const DEFAULT_ANCHOR: &str = "accelerometer_x";
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: {0} series has zero variance")]
    ZeroVariance(&'static str),
    #[error("non-finite sample in {0} series")]
    NonFinite(&'static str),
    #[error("unknown anchor channel '{0}'")]
    UnknownAnchor(String),
    #[error("anchor channel '{0}' is constant across the frames")]
    ConstantAnchor(String),
    #[error("threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("no frames to select from")]
    NoFrames,
    #[error("reports use different anchors ('{0}' vs '{1}')")]
    AnchorMismatch(String, String),
}

/// Pearson correlation coefficient of two equally long series.
///
/// Uses a single pass of Welford-style co-moment updates, so large common
/// offsets do not cancel catastrophically. The result is clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(FeatureError::TooShort(x.len()));
    }

    let (mut mean_x, mut mean_y) = (0.0, 0.0);
    let (mut m2_x, mut m2_y, mut co) = (0.0, 0.0, 0.0);
    for (n, (&a, &b)) in x.iter().zip(y).enumerate() {
        if !a.is_finite() {
            return Err(FeatureError::NonFinite("x"));
        }
        if !b.is_finite() {
            return Err(FeatureError::NonFinite("y"));
        }
        let k = (n + 1) as f64;
        let dx = a - mean_x;
        let dy = b - mean_y;
        mean_x += dx / k;
        mean_y += dy / k;
        m2_x += dx * (a - mean_x);
        m2_y += dy * (b - mean_y);
        co += dx * (b - mean_y);
    }

    if m2_x == 0.0 {
        return Err(FeatureError::ZeroVariance("x"));
    }
    if m2_y == 0.0 {
        return Err(FeatureError::ZeroVariance("y"));
    }
    Ok((co / (m2_x.sqrt() * m2_y.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation of one channel with the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelCorrelation {
    pub channel: String,
    /// `None` when the correlation is undefined (constant channel).
    pub r: Option<f64>,
    pub selected: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub excluded_reason: Option<String>,
}

/// Per-side outcome of the filter, with every r value kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub side: HandSide,
    pub anchor: String,
    pub threshold: f64,
    pub frame_count: usize,
    pub correlations: Vec<ChannelCorrelation>,
    /// Selected channel names in canonical column order.
    pub selected: Vec<String>,
}

/// Both per-side reports plus their union; the JSON document written by the
/// `select` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub anchor: String,
    pub threshold: f64,
    pub reports: Vec<FeatureReport>,
    pub union: Vec<String>,
}

impl FeatureSelection {
    pub fn from_reports(reports: Vec<FeatureReport>) -> Result<Self, FeatureError> {
        let first = reports.first().ok_or(FeatureError::NoFrames)?;
        let (anchor, threshold) = (first.anchor.clone(), first.threshold);
        let mut union = first.selected.clone();
        for pair in reports.windows(2) {
            union = union_features_lists(&union, &pair[0], &pair[1])?;
        }
        Ok(FeatureSelection { anchor, threshold, reports, union })
    }

    pub fn report(&self, side: HandSide) -> Option<&FeatureReport> {
        self.reports.iter().find(|r| r.side == side)
    }
}

/// Runs the filter over one side's frames.
///
/// Channel `c` is selected iff `|pearson(anchor, c)| >= threshold` or `c` is
/// the anchor. Channels with undefined correlation are excluded with a reason.
pub fn select_features(
    frames: &[SensorFrame],
    side: HandSide,
    anchor: &str,
    threshold: f64,
) -> Result<FeatureReport, FeatureError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FeatureError::BadThreshold(threshold));
    }
    let anchor_idx = channel_index(anchor).ok_or_else(|| FeatureError::UnknownAnchor(anchor.into()))?;
    if frames.is_empty() {
        return Err(FeatureError::NoFrames);
    }

    let columns: Vec<Vec<f64>> = {
        let mut cols: Vec<Vec<f64>> = (0..CHANNEL_COUNT).map(|_| Vec::with_capacity(frames.len())).collect();
        for f in frames {
            for (col, v) in cols.iter_mut().zip(f.channels()) {
                col.push(v);
            }
        }
        cols
    };
    let anchor_col = &columns[anchor_idx];
    if anchor_col.iter().all(|v| *v == anchor_col[0]) {
        return Err(FeatureError::ConstantAnchor(anchor.into()));
    }

    let correlations: Vec<ChannelCorrelation> = columns
        .iter()
        .enumerate()
        .map(|(idx, col)| {
            let name = CHANNEL_NAMES[idx].to_string();
            if idx == anchor_idx {
                return ChannelCorrelation { channel: name, r: Some(1.0), selected: true, excluded_reason: None };
            }
            match pearson(anchor_col, col) {
                Ok(r) => {
                    let selected = r.abs() >= threshold;
                    let excluded_reason = (!selected).then(|| format!("|r| below threshold {threshold}"));
                    ChannelCorrelation { channel: name, r: Some(r), selected, excluded_reason }
                }
                Err(e) => {
                    log::info!("{side}: excluding {name}: {e}");
                    ChannelCorrelation { channel: name, r: None, selected: false, excluded_reason: Some(e.to_string()) }
                }
            }
        })
        .collect();

    let selected = correlations.iter().filter(|c| c.selected).map(|c| c.channel.clone()).collect();
    Ok(FeatureReport {
        side,
        anchor: anchor.to_string(),
        threshold,
        frame_count: frames.len(),
        correlations,
        selected,
    })
}

/// Ordered union: the left list, then right-only channels in right order.
pub fn union_features(left: &FeatureReport, right: &FeatureReport) -> Result<Vec<String>, FeatureError> {
    union_features_lists(&left.selected, left, right)
}

fn union_features_lists(
    base: &[String],
    left: &FeatureReport,
    right: &FeatureReport,
) -> Result<Vec<String>, FeatureError> {
    if left.anchor != right.anchor {
        return Err(FeatureError::AnchorMismatch(left.anchor.clone(), right.anchor.clone()));
    }
    let mut out = base.to_vec();
    for name in &right.selected {
        if !out.contains(name) {
            out.push(name.clone());
        }
    }
    Ok(out)
}

/// Plain-text table of one or more reports.
pub fn render_table(selection: &FeatureSelection) -> String {
    let mut out = String::new();
    let sides: Vec<_> = selection.reports.iter().map(|r| r.side).collect();
    write!(out, "{:<26}", "channel").unwrap();
    for s in &sides {
        write!(out, " {:>10}", format!("r({s})")).unwrap();
    }
    writeln!(out).unwrap();
    for (idx, name) in CHANNEL_NAMES.iter().enumerate() {
        write!(out, "{name:<26}").unwrap();
        for report in &selection.reports {
            let c = &report.correlations[idx];
            let cell = match c.r {
                Some(r) => format!("{r:+.4}{}", if c.selected { "*" } else { " " }),
                None => "n/a ".to_string(),
            };
            write!(out, " {cell:>10}").unwrap();
        }
        writeln!(out).unwrap();
    }
    writeln!(out, "anchor {} threshold {} (* = selected)", selection.anchor, selection.threshold).unwrap();
    for report in &selection.reports {
        writeln!(out, "{} ({}): {}", report.side, report.selected.len(), report.selected.join(", ")).unwrap();
    }
    writeln!(out, "union ({}): {}", selection.union.len(), selection.union.join(", ")).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(side: HandSide, anchor: &str, selected: &[&str]) -> FeatureReport {
        FeatureReport {
            side,
            anchor: anchor.into(),
            threshold: 0.5,
            frame_count: 0,
            correlations: Vec::new(),
            selected: selected.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 5.0, 2.0]), Err(FeatureError::ZeroVariance("x")));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(FeatureError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(FeatureError::TooShort(1)));
    }

    #[test]
    fn pearson_survives_large_offsets() {
        let x: Vec<f64> = (0..1000).map(|i| 1e9 + (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 5.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn union_order_rule() {
        let l = report(HandSide::Left, "a", &["a", "b", "c"]);
        let r = report(HandSide::Right, "a", &["a", "d"]);
        assert_eq!(union_features(&l, &r).unwrap(), ["a", "b", "c", "d"]);
        assert_eq!(union_features(&l, &l).unwrap(), ["a", "b", "c"]);
        let other = report(HandSide::Right, "gyroscope_x", &["gyroscope_x"]);
        assert!(matches!(union_features(&l, &other), Err(FeatureError::AnchorMismatch(..))));
    }

    #[test]
    fn published_union_of_both_sides() {
        let left = report(
            HandSide::Left,
            "accelerometer_x",
            &[
                "accelerometer_x",
                "linear_accelerometer_x",
                "gravity_x",
                "euler_x",
                "euler_z",
                "quaternion_x",
                "quaternion_z",
                "inverse_quaternion_x",
                "inverse_quaternion_z",
                "relative_orientation_z",
            ],
        );
        let right = report(
            HandSide::Right,
            "accelerometer_x",
            &[
                "accelerometer_x",
                "magnetometer_x",
                "gravity_x",
                "euler_z",
                "quaternion_z",
                "inverse_quaternion_z",
                "relative_orientation_z",
            ],
        );
        let union = union_features(&left, &right).unwrap();
        assert_eq!(union.len(), 11);
        assert_eq!(union.last().map(String::as_str), Some("magnetometer_x"));
        assert_eq!(union[..10], left.selected[..]);
    }

    #[test]
    fn bad_threshold_and_anchor() {
        assert_eq!(select_features(&[], HandSide::Left, DEFAULT_ANCHOR, 0.0), Err(FeatureError::BadThreshold(0.0)));
        assert!(matches!(select_features(&[], HandSide::Left, "nope", 0.5), Err(FeatureError::UnknownAnchor(_))));
        assert_eq!(select_features(&[], HandSide::Left, DEFAULT_ANCHOR, 0.5), Err(FeatureError::NoFrames));
    }
}
