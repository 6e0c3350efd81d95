//! Canonical export layout: 33 comma-separated columns, LF line endings,
//! mandatory header. Numbers use the shortest decimal form that parses back
//! to the identical `f64`.
//!
//! The availability mask is not part of the layout. Parsed frames get a mask
//! inferred from which groups are all zero.

use std::fmt::Write as _;

use thiserror::Error;

use super::{SensorFrame, SensorGroup, CHANNEL_NAMES};

pub const CSV_COLUMNS: usize = 33;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

pub fn csv_header() -> String {
    let mut cols = Vec::with_capacity(CSV_COLUMNS);
    cols.push("respondent_name");
    cols.push("timestamp");
    cols.extend(CHANNEL_NAMES);
    cols.push("motion_type");
    cols.push("side");
    cols.join(",")
}

/// One CSV row without the trailing newline.
pub fn frame_to_csv_row(frame: &SensorFrame) -> String {
    let mut row = String::with_capacity(512);
    row.push_str(&frame.respondent);
    write!(row, ",{}", frame.timestamp).unwrap();
    for v in frame.channels() {
        write!(row, ",{v}").unwrap();
    }
    write!(row, ",{},{}", frame.motion_type, frame.side).unwrap();
    row
}

pub fn parse_csv_row(row: &str) -> Result<SensorFrame, String> {
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != CSV_COLUMNS {
        return Err(format!("expected {CSV_COLUMNS} columns, found {}", fields.len()));
    }
    let number = |i: usize| -> Result<f64, String> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| format!("column {} is not a number: '{}'", i + 1, fields[i]))
    };

    let mut frame = SensorFrame {
        respondent: fields[0].to_string(),
        timestamp: number(1)?,
        accelerometer: [0.0; 3],
        magnetometer: [0.0; 3],
        gyroscope: [0.0; 3],
        linear_accelerometer: [0.0; 3],
        gravity: [0.0; 3],
        euler: [0.0; 3],
        quaternion: [0.0; 4],
        inverse_quaternion: [0.0; 4],
        relative_orientation: [0.0; 3],
        motion_type: fields[31].parse().map_err(|e| format!("{e}"))?,
        side: fields[32].parse().map_err(|e| format!("{e}"))?,
        availability_mask: Default::default(),
    };
    for group in SensorGroup::ALL {
        let base = 2 + group.offset();
        for (k, slot) in frame.group_mut(group).iter_mut().enumerate() {
            *slot = number(base + k)?;
        }
    }
    frame.availability_mask = frame.inferred_mask();
    Ok(frame)
}

/// Parses a whole export document. The header must match exactly.
pub fn parse_csv(text: &str) -> Result<Vec<SensorFrame>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(CsvError { line: 1, message: "missing header".into() })?;
    if header != csv_header() {
        return Err(CsvError { line: 1, message: "header does not match the export layout".into() });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_csv_row(l).map_err(|message| CsvError { line: i + 2, message }))
        .collect()
}
