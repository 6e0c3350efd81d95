//! The `har` command-line tool.
//!
//! Every artifact-producing command writes `<out-dir>/<command>.manifest.json`
//! recording its flags, seed and the SHA-256 of every input and output. On
//! failure a single JSON line goes to stderr and the exit code identifies the
//! error kind (see [`ErrorKind::exit_code`]).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{dataset_stats, group_sessions, window_sessions, DatasetFile};
use crate::features::{render_table, FeatureSelection, DEFAULT_ANCHOR, DEFAULT_THRESHOLD};
use crate::ingest::{Client, ExportFilter, SessionStore};
use crate::lstm::{
    model_from_json, model_to_json, EpochRecord, EvalReport, LstmConfig, LstmModel, DEFAULT_BATCH_SIZE,
    DEFAULT_CLIP_NORM, DEFAULT_EPOCHS, DEFAULT_HIDDEN, DEFAULT_LAYERS, DEFAULT_LEARNING_RATE, DEFAULT_WINDOW,
};
use crate::pipeline::{
    build_dataset, corpus_csv, evaluate_holdout, load_frames, read_input, select_all, train_dataset,
    write_output, ErrorKind, FileDigest, Layout, Manifest, PipelineError, Result,
};
use crate::sensor::{channel_index, csv_header, HandSide, MotionType};
use crate::sim::synth_corpus;

const DEFAULT_PORT: u16 = 8080;
const DEFAULT_SPLIT: f64 = crate::dataset::DEFAULT_SPLIT_RATIO;

#[derive(Parser, Debug)]
#[command(name = "har", version, about = "Strength-training activity recognition toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Seed for simulation, the hold-out split and weight initialization.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Ingest store directory.
    #[arg(long, global = true, env = "HAR_DATA_DIR", default_value = "har-data")]
    pub data_dir: PathBuf,
    /// Directory for artifacts and manifests.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Increase log detail (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the ingest HTTP service.
    Serve(ServeArgs),
    /// Generate a synthetic corpus as export CSV, optionally posting it to a server.
    Simulate(SimulateArgs),
    /// Row, time and window-length statistics per hand side.
    Stats(StatsArgs),
    /// Pearson feature filter per side and the union feature list.
    Select(SelectCmd),
    /// Window, split and train one model per side.
    Train(TrainCmd),
    /// Score trained models on their held-out windows.
    Evaluate(EvaluateArgs),
    /// Classify windows from an export CSV or a single window CSV.
    Predict(PredictArgs),
    /// Download the export CSV from a running server.
    Export(ExportArgs),
    /// simulate, stats, select, train and evaluate in one run.
    RunAll(RunAllArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Left,
    Right,
    Both,
}

impl SideArg {
    pub fn sides(self) -> Vec<HandSide> {
        match self {
            SideArg::Left => vec![HandSide::Left],
            SideArg::Right => vec![HandSide::Right],
            SideArg::Both => HandSide::ALL.to_vec(),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ServeArgs {
    /// Listen port.
    #[arg(long, env = "HAR_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Serve static capture-UI assets from this directory.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    /// Number of respondents.
    #[arg(long, default_value_t = 25)]
    pub respondents: usize,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    /// Also upload every session to the ingest service at this URL.
    #[arg(long)]
    pub post: Option<String>,
    /// Frames per uploaded batch.
    #[arg(long, default_value_t = 7)]
    pub batch_size: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StatsArgs {
    /// Export CSV [default: <out-dir>/corpus.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Student count [default: distinct respondents per side].
    #[arg(long)]
    pub students: Option<usize>,
    /// Motion count [default: distinct motions per side].
    #[arg(long)]
    pub motions: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelectArgs {
    /// Anchor channel.
    #[arg(long, default_value = DEFAULT_ANCHOR)]
    pub anchor: String,
    /// Minimum |r| for a channel to be kept.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelectCmd {
    /// Export CSV [default: <out-dir>/corpus.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub select: SelectArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    /// Window length T in frames.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Window stride [default: the window length].
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    /// LSTM units per layer.
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    pub hidden: usize,
    /// Stacked LSTM layers.
    #[arg(long, default_value_t = DEFAULT_LAYERS)]
    pub layers: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    #[arg(long, default_value_t = DEFAULT_CLIP_NORM)]
    pub clip_norm: f64,
    /// Training share of the hold-out split.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    pub split: f64,
}

impl TrainArgs {
    fn stride(&self) -> usize {
        self.stride.unwrap_or(self.window)
    }

    fn config(&self, input_features: usize, seed: u64) -> LstmConfig {
        LstmConfig {
            input_features,
            window: self.window,
            layers: self.layers,
            hidden: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
            seed,
            ..LstmConfig::default()
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainCmd {
    /// Export CSV [default: <out-dir>/corpus.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Feature selection JSON from `select` [default: <out-dir>/features.json].
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    /// Model file [default: <out-dir>/model-<side>.json]; needs a single --side.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset file written by `train` [default: <out-dir>/dataset-<side>.csv]; needs a single --side.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Training share used when the model was trained.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    pub split: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Export CSV (windowed at the model length), or a CSV whose header is the
    /// model's feature names followed by exactly one window of rows.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExportArgs {
    /// Server base URL [default: http://127.0.0.1:<port>].
    #[arg(long)]
    pub server: Option<String>,
    #[arg(long, env = "HAR_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, value_enum)]
    pub side: Option<HandSide>,
    #[arg(long)]
    pub motion: Option<MotionType>,
    #[arg(long)]
    pub respondent: Option<String>,
    /// Output file [default: <out-dir>/export.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RunAllArgs {
    #[arg(long, default_value_t = 25)]
    pub respondents: usize,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

impl ValueEnum for HandSide {
    fn value_variants<'a>() -> &'a [Self] {
        &HandSide::ALL
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let rendered = e.to_string();
                    let first = rendered.lines().next().unwrap_or("invalid arguments");
                    let message = format!("{} (see --help)", first.trim_start_matches("error: "));
                    eprintln!("{}", PipelineError::new(ErrorKind::Usage, message).to_json_line());
                    ErrorKind::Usage.exit_code()
                }
            };
        }
    };
    init_logging(cli.common.verbose);
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.kind.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .filter_module("har_core", level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

fn usage(message: impl Into<String>) -> PipelineError {
    PipelineError::new(ErrorKind::Usage, message)
}

fn flags<A: Serialize>(common: &Common, args: &A) -> serde_json::Value {
    serde_json::json!({ "common": common, "command": args })
}

fn dispatch(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Serve(a) => serve(c, a),
        Command::Simulate(a) => simulate(c, a),
        Command::Stats(a) => stats(c, a),
        Command::Select(a) => select(c, a),
        Command::Train(a) => train(c, a),
        Command::Evaluate(a) => evaluate_cmd(c, a),
        Command::Predict(a) => predict(c, a),
        Command::Export(a) => export(c, a),
        Command::RunAll(a) => run_all(c, a),
    }
}

fn finish(layout: &Layout, manifest: &Manifest) -> Result<()> {
    write_output(&layout.manifest(&manifest.command), &manifest.to_json())?;
    Ok(())
}

fn serve(c: &Common, a: &ServeArgs) -> Result<()> {
    let store = Arc::new(SessionStore::open(&c.data_dir)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| PipelineError::new(ErrorKind::Io, e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| PipelineError::new(ErrorKind::Network, format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        };
        crate::ingest::serve(listener, store, a.ui_dir.clone(), shutdown)
            .await
            .map_err(|e| PipelineError::new(ErrorKind::Network, e.to_string()))
    })
}

fn simulate(c: &Common, a: &SimulateArgs) -> Result<()> {
    if a.respondents == 0 {
        return Err(usage("--respondents must be at least 1"));
    }
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("simulate", c.seed, flags(c, a));
    let corpus = synth_corpus(a.respondents, &a.side.sides(), c.seed);
    manifest.outputs.push(write_output(&layout.corpus(), &corpus_csv(&corpus))?);
    if let Some(url) = &a.post {
        let client = Client::new(url);
        client.health()?;
        for s in &corpus {
            client.upload_session(s, a.batch_size)?;
        }
        log::info!("uploaded {} sessions to {url}", corpus.len());
    }
    finish(&layout, &manifest)?;
    let frames: usize = corpus.iter().map(|s| s.frames.len()).sum();
    println!("{} sessions, {frames} frames -> {}", corpus.len(), layout.corpus().display());
    Ok(())
}

fn input_or(path: &Option<PathBuf>, default: PathBuf) -> PathBuf {
    path.clone().unwrap_or(default)
}

fn stats(c: &Common, a: &StatsArgs) -> Result<()> {
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("stats", c.seed, flags(c, a));
    let (frames, digest) = load_frames(&input_or(&a.input, layout.corpus()))?;
    manifest.inputs.push(digest);
    let stats = dataset_stats(&frames, a.students, a.motions)?;
    let table = stats.render_table();
    manifest.outputs.push(write_output(&layout.stats_text(), &table)?);
    manifest.outputs.push(write_output(&layout.stats_json(), &pretty(&stats))?);
    finish(&layout, &manifest)?;
    print!("{table}");
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn select(c: &Common, a: &SelectCmd) -> Result<()> {
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("select", c.seed, flags(c, a));
    let (frames, digest) = load_frames(&input_or(&a.input, layout.corpus()))?;
    manifest.inputs.push(digest);
    let selection = select_all(&frames, &a.select.anchor, a.select.threshold)?;
    let table = render_table(&selection);
    manifest.outputs.push(write_output(&layout.features_json(), &pretty(&selection))?);
    manifest.outputs.push(write_output(&layout.features_text(), &table)?);
    finish(&layout, &manifest)?;
    print!("{table}");
    Ok(())
}

fn load_selection(path: &Path) -> Result<(FeatureSelection, FileDigest)> {
    let (text, digest) = read_input(path)?;
    let selection: FeatureSelection = serde_json::from_str(&text)
        .map_err(|e| PipelineError::new(ErrorKind::Format, format!("{}: {e}", path.display())))?;
    if selection.union.is_empty() {
        return Err(PipelineError::new(ErrorKind::Format, format!("{}: empty feature list", path.display())));
    }
    Ok((selection, digest))
}

fn log_epoch(side: HandSide, epochs: usize) -> impl FnMut(&EpochRecord) {
    move |r: &EpochRecord| {
        log::info!(
            "{side} epoch {}/{epochs}: train loss {:.4} acc {:.4}, test loss {:.4} acc {:.4}",
            r.epoch,
            r.train_loss,
            r.train_accuracy,
            r.test_loss.unwrap_or(f64::NAN),
            r.test_accuracy.unwrap_or(f64::NAN)
        )
    }
}

/// Windows, trains and saves one side. Returns a one-line summary.
fn train_side(
    layout: &Layout,
    manifest: &mut Manifest,
    frames: &[crate::sensor::SensorFrame],
    side: HandSide,
    features: &[String],
    t: &TrainArgs,
    seed: u64,
) -> Result<String> {
    let dataset = build_dataset(frames, side, features, t.window, t.stride(), seed)?;
    manifest.outputs.push(write_output(&layout.dataset(side), &dataset.to_text())?);
    let config = t.config(features.len(), seed);
    let (model, history) = train_dataset(&dataset, &config, t.split, log_epoch(side, t.epochs))?;
    manifest.outputs.push(write_output(&layout.model(side), &model_to_json(&model))?);
    manifest.outputs.push(write_output(&layout.history(side), &history.to_csv())?);
    let last = history.last().expect("at least one epoch");
    Ok(format!(
        "{side}: {} windows, final train acc {:.4}, test acc {:.4} -> {}",
        dataset.windows.len(),
        last.train_accuracy,
        last.test_accuracy.unwrap_or(f64::NAN),
        layout.model(side).display()
    ))
}

fn present_sides(frames: &[crate::sensor::SensorFrame], requested: SideArg) -> Result<Vec<HandSide>> {
    let mut sides = Vec::new();
    for side in requested.sides() {
        if frames.iter().any(|f| f.side == side) {
            sides.push(side);
        } else if requested != SideArg::Both {
            return Err(PipelineError::new(ErrorKind::Domain, format!("input has no {side} frames")));
        } else {
            log::warn!("input has no {side} frames; skipping that side");
        }
    }
    if sides.is_empty() {
        return Err(PipelineError::new(ErrorKind::Domain, "input has no frames"));
    }
    Ok(sides)
}

fn train(c: &Common, a: &TrainCmd) -> Result<()> {
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("train", c.seed, flags(c, a));
    let (frames, digest) = load_frames(&input_or(&a.input, layout.corpus()))?;
    manifest.inputs.push(digest);
    let (selection, digest) = load_selection(&input_or(&a.features, layout.features_json()))?;
    manifest.inputs.push(digest);
    for side in present_sides(&frames, a.side)? {
        println!("{}", train_side(&layout, &mut manifest, &frames, side, &selection.union, &a.train, c.seed)?);
    }
    finish(&layout, &manifest)
}

fn load_model_file(path: &Path) -> Result<(LstmModel, FileDigest)> {
    let (text, digest) = read_input(path)?;
    let model = model_from_json(&text).map_err(|e| PipelineError::new(ErrorKind::Format, format!("{}: {e}", path.display())))?;
    Ok((model, digest))
}

fn load_dataset_file(path: &Path) -> Result<(DatasetFile, FileDigest)> {
    let (text, digest) = read_input(path)?;
    let dataset = DatasetFile::parse(&text).map_err(|e| PipelineError::new(ErrorKind::Format, format!("{}: {e}", path.display())))?;
    Ok((dataset, digest))
}

fn evaluate_side(
    layout: &Layout,
    manifest: &mut Manifest,
    side: HandSide,
    model_path: &Path,
    dataset_path: &Path,
    split: f64,
) -> Result<EvalReport> {
    let (model, digest) = load_model_file(model_path)?;
    manifest.inputs.push(digest);
    let (dataset, digest) = load_dataset_file(dataset_path)?;
    manifest.inputs.push(digest);
    let report = evaluate_holdout(&model, &dataset, split)?;
    manifest.outputs.push(write_output(&layout.eval_text(side), &report.render())?);
    manifest.outputs.push(write_output(&layout.eval_json(side), &pretty(&report))?);
    Ok(report)
}

fn evaluate_cmd(c: &Common, a: &EvaluateArgs) -> Result<()> {
    let sides = a.side.sides();
    if sides.len() > 1 && (a.model.is_some() || a.dataset.is_some()) {
        return Err(usage("--model and --dataset need a single --side"));
    }
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("evaluate", c.seed, flags(c, a));
    for side in sides {
        let model = input_or(&a.model, layout.model(side));
        let dataset = input_or(&a.dataset, layout.dataset(side));
        let report = evaluate_side(&layout, &mut manifest, side, &model, &dataset, a.split)?;
        print!("== {side} ==\n{}", report.render());
    }
    finish(&layout, &manifest)
}

fn predict(c: &Common, a: &PredictArgs) -> Result<()> {
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("predict", c.seed, flags(c, a));
    let (model, digest) = load_model_file(&a.model)?;
    manifest.inputs.push(digest);
    let (text, digest) = read_input(&a.input)?;
    manifest.inputs.push(digest);

    let mut out = String::from("respondent,side,motion,offset,predicted,probability\n");
    let header = text.lines().next().unwrap_or_default();
    if header == csv_header() {
        let frames = crate::sensor::parse_csv(&text)?;
        let indices: Vec<usize> = model
            .features
            .iter()
            .map(|f| channel_index(f).ok_or_else(|| PipelineError::new(ErrorKind::Format, format!("model feature {f} is not a channel"))))
            .collect::<Result<_>>()?;
        let windows = window_sessions(&group_sessions(frames), &indices, model.config.window, model.config.window);
        if windows.is_empty() {
            return Err(PipelineError::new(ErrorKind::Domain, "input has no session long enough for one window"));
        }
        for w in &windows {
            let p = model.predict(&w.values, &model.features)?;
            let label = p.motion.map(|m| m.to_string()).unwrap_or_else(|| p.class.to_string());
            writeln!(out, "{},{},{},{},{label},{}", w.respondent, w.side, w.motion, w.offset, p.probability).unwrap();
        }
    } else {
        let (features, values) = parse_window_csv(&text)?;
        let p = model.predict(&values, &features)?;
        let label = p.motion.map(|m| m.to_string()).unwrap_or_else(|| p.class.to_string());
        writeln!(out, ",,,0,{label},{}", p.probability).unwrap();
    }
    let path = layout.dir.join("predictions.csv");
    manifest.outputs.push(write_output(&path, &out)?);
    finish(&layout, &manifest)?;
    print!("{out}");
    Ok(())
}

/// A window CSV: a header of feature names, then one row per time step.
fn parse_window_csv(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| PipelineError::new(ErrorKind::Format, "empty window file"))?;
    let features: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut values = Vec::new();
    for (i, line) in lines {
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != features.len() {
            return Err(PipelineError::new(
                ErrorKind::Format,
                format!("line {}: {} values, expected {}", i + 1, row.len(), features.len()),
            ));
        }
        for cell in row {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| PipelineError::new(ErrorKind::Format, format!("line {}: bad number {cell:?}", i + 1)))?;
            values.push(v);
        }
    }
    Ok((features, values))
}

fn export(c: &Common, a: &ExportArgs) -> Result<()> {
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("export", c.seed, flags(c, a));
    let url = a.server.clone().unwrap_or_else(|| format!("http://127.0.0.1:{}", a.port));
    let filter = ExportFilter { side: a.side, motion: a.motion, respondent: a.respondent.clone() };
    let csv = Client::new(&url).export_csv(&filter)?;
    let path = input_or(&a.output, layout.dir.join("export.csv"));
    manifest.outputs.push(write_output(&path, &csv)?);
    finish(&layout, &manifest)?;
    println!("{} rows -> {}", csv.lines().count().saturating_sub(1), path.display());
    Ok(())
}

fn run_all(c: &Common, a: &RunAllArgs) -> Result<()> {
    if a.respondents == 0 {
        return Err(usage("--respondents must be at least 1"));
    }
    let layout = Layout::new(&c.out_dir);
    let mut manifest = Manifest::new("run-all", c.seed, flags(c, a));
    let mut report = String::new();

    let corpus = synth_corpus(a.respondents, &a.side.sides(), c.seed);
    let csv = corpus_csv(&corpus);
    manifest.outputs.push(write_output(&layout.corpus(), &csv)?);
    let frames = crate::sensor::parse_csv(&csv)?;
    log::info!("simulated {} sessions, {} frames", corpus.len(), frames.len());

    let stats = dataset_stats(&frames, None, None)?;
    let table = stats.render_table();
    manifest.outputs.push(write_output(&layout.stats_text(), &table)?);
    manifest.outputs.push(write_output(&layout.stats_json(), &pretty(&stats))?);
    report.push_str(&table);
    report.push('\n');

    let selection = select_all(&frames, &a.select.anchor, a.select.threshold)?;
    let table = render_table(&selection);
    manifest.outputs.push(write_output(&layout.features_json(), &pretty(&selection))?);
    manifest.outputs.push(write_output(&layout.features_text(), &table)?);
    report.push_str(&table);
    report.push('\n');

    for side in a.side.sides() {
        let line = train_side(&layout, &mut manifest, &frames, side, &selection.union, &a.train, c.seed)?;
        log::info!("{line}");
        let (model, _) = load_model_file(&layout.model(side))?;
        let (dataset, _) = load_dataset_file(&layout.dataset(side))?;
        let eval = evaluate_holdout(&model, &dataset, a.train.split)?;
        manifest.outputs.push(write_output(&layout.eval_text(side), &eval.render())?);
        manifest.outputs.push(write_output(&layout.eval_json(side), &pretty(&eval))?);
        write!(report, "== {side} held-out ==\n{}\n", eval.render()).unwrap();
    }

    let report_path = layout.dir.join("report.txt");
    manifest.outputs.push(write_output(&report_path, &report)?);
    finish(&layout, &manifest)?;
    print!("{report}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["har", "train"]).unwrap();
        let Command::Train(t) = cli.command else { panic!() };
        let cfg = t.train.config(11, cli.common.seed);
        assert_eq!((cfg.window, cfg.layers, cfg.hidden, cfg.epochs, cfg.batch_size), (150, 2, 64, 50, 32));
        assert_eq!(cfg.learning_rate, 1e-3);
        assert_eq!(t.train.stride(), 150);
        assert_eq!(t.train.split, 0.8);
        let cli = Cli::try_parse_from(["har", "select"]).unwrap();
        let Command::Select(s) = cli.command else { panic!() };
        assert_eq!(s.select.threshold, 0.5);
        assert_eq!(s.select.anchor, "accelerometer_x");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["har", "stats", "--bogus"]), 2);
    }

    #[test]
    fn window_csv_parsing() {
        let (f, v) = parse_window_csv("a,b\n1,2\n3,4.5\n").unwrap();
        assert_eq!(f, ["a", "b"]);
        assert_eq!(v, [1.0, 2.0, 3.0, 4.5]);
        assert!(parse_window_csv("a,b\n1\n").is_err());
    }
}
