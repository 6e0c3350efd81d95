//! Stage functions shared by the command-line tool and the tests, plus run
//! manifests and the error taxonomy behind the tool's exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    group_sessions, holdout_partition, split_holdout, window_sessions, DatasetError, DatasetFile,
};
use crate::features::{select_features, FeatureError, FeatureSelection};
use crate::ingest::{ClientError, IngestError};
use crate::lstm::{evaluate, train_with_progress, EvalReport, LoadError, LstmConfig, LstmError, LstmModel, TrainingHistory};
use crate::sensor::{channel_index, csv_header, frame_to_csv_row, parse_csv, CsvError, HandSide, RecordingSession, SensorFrame};

/// Error categories, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    MissingInput,
    Format,
    Domain,
    Training,
    Network,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::MissingInput => 3,
            ErrorKind::Format => 4,
            ErrorKind::Domain => 5,
            ErrorKind::Training => 6,
            ErrorKind::Network => 7,
            ErrorKind::Io => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::MissingInput => "missing_input",
            ErrorKind::Format => "format",
            ErrorKind::Domain => "domain",
            ErrorKind::Training => "training",
            ErrorKind::Network => "network",
            ErrorKind::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        PipelineError { kind, message: message.into() }
    }

    /// Single-line JSON form written to stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind.as_str(), "code": self.kind.exit_code(), "message": self.message })
            .to_string()
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.message)
    }
}

impl std::error::Error for PipelineError {}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl From<DatasetError> for PipelineError {
    fn from(e: DatasetError) -> Self {
        let kind = match e {
            DatasetError::Domain(_) => ErrorKind::Domain,
            DatasetError::Format { .. } => ErrorKind::Format,
        };
        PipelineError::new(kind, e.to_string())
    }
}

impl From<FeatureError> for PipelineError {
    fn from(e: FeatureError) -> Self {
        PipelineError::new(ErrorKind::Domain, e.to_string())
    }
}

impl From<LstmError> for PipelineError {
    fn from(e: LstmError) -> Self {
        let kind = match e {
            LstmError::NonFiniteLoss { .. } | LstmError::Diverged { .. } => ErrorKind::Training,
            LstmError::Shape(_) | LstmError::FeatureMismatch { .. } => ErrorKind::Format,
            LstmError::Config(_) => ErrorKind::Usage,
            _ => ErrorKind::Domain,
        };
        PipelineError::new(kind, e.to_string())
    }
}

impl From<LoadError> for PipelineError {
    fn from(e: LoadError) -> Self {
        PipelineError::new(ErrorKind::Format, e.to_string())
    }
}

impl From<CsvError> for PipelineError {
    fn from(e: CsvError) -> Self {
        PipelineError::new(ErrorKind::Format, e.to_string())
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        let kind = match e {
            IngestError::Storage(_) => ErrorKind::Io,
            _ => ErrorKind::Domain,
        };
        PipelineError::new(kind, e.to_string())
    }
}

impl From<ClientError> for PipelineError {
    fn from(e: ClientError) -> Self {
        PipelineError::new(ErrorKind::Network, e.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Path plus content digest, as recorded in manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) }
    }
}

/// Reads a whole input file; a missing file gets its own error kind.
pub fn read_input(path: &Path) -> Result<(String, FileDigest)> {
    match fs::read(path) {
        Ok(bytes) => {
            let digest = FileDigest::of(path, &bytes);
            let text = String::from_utf8(bytes)
                .map_err(|_| PipelineError::new(ErrorKind::Format, format!("{}: not UTF-8 text", path.display())))?;
            Ok((text, digest))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(PipelineError::new(ErrorKind::MissingInput, format!("{}: no such file", path.display())))
        }
        Err(e) => Err(PipelineError::new(ErrorKind::Io, format!("{}: {e}", path.display()))),
    }
}

/// Writes an output file, creating parent directories.
pub fn write_output(path: &Path, contents: &str) -> Result<FileDigest> {
    let io_err = |e: std::io::Error| PipelineError::new(ErrorKind::Io, format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(path, contents).map_err(io_err)?;
    Ok(FileDigest::of(path, contents.as_bytes()))
}

/// Reproduction record for one command invocation. Contains no timestamps
/// or host details, so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub flags: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, flags: serde_json::Value) -> Self {
        Manifest {
            tool: "har".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            flags,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Frames from an export-format CSV file.
pub fn load_frames(path: &Path) -> Result<(Vec<SensorFrame>, FileDigest)> {
    let (text, digest) = read_input(path)?;
    let frames = parse_csv(&text).map_err(|e| PipelineError::new(ErrorKind::Format, format!("{}: {e}", path.display())))?;
    Ok((frames, digest))
}

/// Export-format CSV of `sessions`, ordered as the ingest service orders
/// its export: by respondent, then session start.
pub fn corpus_csv(sessions: &[RecordingSession]) -> String {
    let mut order: Vec<&RecordingSession> = sessions.iter().filter(|s| !s.frames.is_empty()).collect();
    order.sort_by(|a, b| {
        a.respondent.cmp(&b.respondent).then(a.frames[0].timestamp.total_cmp(&b.frames[0].timestamp))
    });
    let mut out = csv_header();
    out.push('\n');
    for s in order {
        for f in &s.frames {
            out.push_str(&frame_to_csv_row(f));
            out.push('\n');
        }
    }
    out
}

pub fn side_frames(frames: &[SensorFrame], side: HandSide) -> Vec<SensorFrame> {
    frames.iter().filter(|f| f.side == side).cloned().collect()
}

/// Pearson filter for every side present in `frames`, plus the union.
pub fn select_all(frames: &[SensorFrame], anchor: &str, threshold: f64) -> Result<FeatureSelection> {
    let mut reports = Vec::new();
    for side in HandSide::ALL {
        let subset = side_frames(frames, side);
        if !subset.is_empty() {
            reports.push(select_features(&subset, side, anchor, threshold)?);
        }
    }
    if reports.is_empty() {
        return Err(PipelineError::new(ErrorKind::Domain, "no frames to select features from"));
    }
    Ok(FeatureSelection::from_reports(reports)?)
}

/// Raw windows of one side over the named feature columns.
pub fn build_dataset(
    frames: &[SensorFrame],
    side: HandSide,
    features: &[String],
    window: usize,
    stride: usize,
    seed: u64,
) -> Result<DatasetFile> {
    if window == 0 || stride == 0 {
        return Err(PipelineError::new(ErrorKind::Domain, "window and stride must be positive"));
    }
    let indices: Vec<usize> = features
        .iter()
        .map(|f| channel_index(f).ok_or_else(|| PipelineError::new(ErrorKind::Format, format!("unknown channel {f}"))))
        .collect::<Result<_>>()?;
    let sessions = group_sessions(side_frames(frames, side));
    let windows = window_sessions(&sessions, &indices, window, stride);
    if windows.is_empty() {
        return Err(PipelineError::new(
            ErrorKind::Domain,
            format!("{side}: no session has {window} frames, so no windows can be cut"),
        ));
    }
    Ok(DatasetFile { window, features: features.to_vec(), seed, windows })
}

/// Splits a dataset with its stored seed and trains one model on it.
pub fn train_dataset(
    dataset: &DatasetFile,
    config: &LstmConfig,
    ratio: f64,
    on_epoch: impl FnMut(&crate::lstm::EpochRecord),
) -> Result<(LstmModel, TrainingHistory)> {
    let split = split_holdout(dataset.windows.clone(), dataset.features.clone(), ratio, dataset.seed)?;
    Ok(train_with_progress(&split, config, on_epoch)?)
}

/// Scores `model` on the held-out part of `dataset` (same split as
/// [`train_dataset`]).
pub fn evaluate_holdout(model: &LstmModel, dataset: &DatasetFile, ratio: f64) -> Result<EvalReport> {
    if dataset.features != model.features {
        return Err(LstmError::FeatureMismatch { expected: model.features.join(","), found: dataset.features.join(",") }.into());
    }
    if dataset.window != model.config.window {
        return Err(PipelineError::new(
            ErrorKind::Format,
            format!("dataset windows have {} steps, model expects {}", dataset.window, model.config.window),
        ));
    }
    let (_, test) = holdout_partition(dataset.windows.clone(), &dataset.features, ratio, dataset.seed)?;
    let normalized: Vec<_> = test.iter().map(|w| model.normalize(w)).collect();
    Ok(evaluate(model, &normalized)?)
}

/// Conventional artifact names inside an output directory.
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Layout { dir: dir.into() }
    }

    pub fn corpus(&self) -> PathBuf {
        self.dir.join("corpus.csv")
    }
    pub fn stats_text(&self) -> PathBuf {
        self.dir.join("stats.txt")
    }
    pub fn stats_json(&self) -> PathBuf {
        self.dir.join("stats.json")
    }
    pub fn features_json(&self) -> PathBuf {
        self.dir.join("features.json")
    }
    pub fn features_text(&self) -> PathBuf {
        self.dir.join("features.txt")
    }
    pub fn dataset(&self, side: HandSide) -> PathBuf {
        self.dir.join(format!("dataset-{side}.csv"))
    }
    pub fn model(&self, side: HandSide) -> PathBuf {
        self.dir.join(format!("model-{side}.json"))
    }
    pub fn history(&self, side: HandSide) -> PathBuf {
        self.dir.join(format!("history-{side}.csv"))
    }
    pub fn eval_text(&self, side: HandSide) -> PathBuf {
        self.dir.join(format!("eval-{side}.txt"))
    }
    pub fn eval_json(&self, side: HandSide) -> PathBuf {
        self.dir.join(format!("eval-{side}.json"))
    }
    pub fn manifest(&self, command: &str) -> PathBuf {
        self.dir.join(format!("{command}.manifest.json"))
    }
}
