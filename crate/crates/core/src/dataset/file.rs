//! Intermediate window file.
//!
//! ```text
//! har-dataset,1
//! window,<T>
//! features,<F>,<name_1>,…,<name_F>
//! seed,<seed>
//! respondent,motion,side,offset,v_0,…,v_{T·F-1}
//! S01,bicep_curls,left,0,…
//! ```
//!
//! Values are raw (unnormalized), row-major per window, written in shortest
//! round-trip decimal form.

use std::fmt::Write as _;

use super::{DatasetError, SequenceWindow};

const MAGIC: &str = "har-dataset";
const VERSION: u32 = 1;

/// Windows plus the metadata needed to rebuild a split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub window: usize,
    pub features: Vec<String>,
    pub seed: u64,
    pub windows: Vec<SequenceWindow>,
}

impl DatasetFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC},{VERSION}").unwrap();
        writeln!(out, "window,{}", self.window).unwrap();
        writeln!(out, "features,{},{}", self.features.len(), self.features.join(",")).unwrap();
        writeln!(out, "seed,{}", self.seed).unwrap();
        writeln!(out, "respondent,motion,side,offset,values").unwrap();
        for w in &self.windows {
            write!(out, "{},{},{},{}", w.respondent, w.motion, w.side, w.offset).unwrap();
            for v in &w.values {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let bad = |line: usize, msg: &str| DatasetError::Format { line, message: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(0, &format!("missing {what} line")));

        let (n, magic) = next("magic")?;
        if magic != format!("{MAGIC},{VERSION}") {
            return Err(bad(n, "not a version 1 dataset file"));
        }
        let (n, window_line) = next("window")?;
        let window = window_line
            .strip_prefix("window,")
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|w| *w > 0)
            .ok_or_else(|| bad(n, "expected 'window,<T>'"))?;
        let (n, feature_line) = next("features")?;
        let mut parts = feature_line.split(',');
        if parts.next() != Some("features") {
            return Err(bad(n, "expected 'features,<F>,…'"));
        }
        let count: usize = parts.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(n, "bad feature count"))?;
        let features: Vec<String> = parts.map(String::from).collect();
        if features.len() != count || count == 0 {
            return Err(bad(n, "feature count does not match the names"));
        }
        let (n, seed_line) = next("seed")?;
        let seed = seed_line
            .strip_prefix("seed,")
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| bad(n, "expected 'seed,<u64>'"))?;
        next("column header")?;

        let width = window * count;
        let mut windows = Vec::new();
        for (n, line) in lines.filter(|(_, l)| !l.is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 + width {
                return Err(bad(n, &format!("expected {} values, found {}", width, fields.len().saturating_sub(4))));
            }
            let values = fields[4..]
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(n, "non-numeric value"))?;
            windows.push(SequenceWindow {
                respondent: fields[0].to_string(),
                motion: fields[1].parse().map_err(|e| bad(n, &format!("{e}")))?,
                side: fields[2].parse().map_err(|e| bad(n, &format!("{e}")))?,
                offset: fields[3].parse().map_err(|_| bad(n, "bad offset"))?,
                steps: window,
                features: count,
                values,
            });
        }
        Ok(DatasetFile { window, features, seed, windows })
    }
}
