//! On-disk layout:
//!
//! ```text
//! <root>/index.json              session metadata, replaced atomically
//! <root>/sessions/<id>.ndjson    one line per accepted batch
//! ```
//!
//! A batch line is written and synced before it is acknowledged. On open, a
//! torn final line (crash mid-write) is truncated away; it was never
//! acknowledged.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{check_respondent, IngestError, WireFrame};
use crate::sensor::{csv_header, frame_to_csv_row, validate_frame, HandSide, MotionType, SensorFrame, SessionStatus};

const INDEX_FILE: &str = "index.json";
const SESSIONS_DIR: &str = "sessions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexEntry {
    session_id: String,
    /// Creation order; breaks ties between sessions with equal start.
    seq: u64,
    respondent: String,
    motion_type: MotionType,
    side: HandSide,
    status: SessionStatus,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct IndexDoc {
    next_seq: u64,
    sessions: Vec<IndexEntry>,
}

#[derive(Serialize, Deserialize)]
struct BatchRecord {
    batch_seq: Option<u64>,
    frames: Vec<SensorFrame>,
}

/// Public view of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub respondent: String,
    pub motion_type: MotionType,
    pub side: HandSide,
    pub status: SessionStatus,
    pub frame_count: usize,
    /// First frame timestamp, if any frame was accepted.
    pub started_at: Option<f64>,
    pub last_timestamp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinishSummary {
    pub frame_count: usize,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    pub side: Option<HandSide>,
    pub motion: Option<MotionType>,
    pub respondent: Option<String>,
}

impl ExportFilter {
    fn matches(&self, info: &SessionInfo) -> bool {
        self.side.is_none_or(|s| s == info.side)
            && self.motion.is_none_or(|m| m == info.motion_type)
            && self.respondent.as_ref().is_none_or(|r| *r == info.respondent)
    }
}

struct SessionState {
    info: SessionInfo,
    seq: u64,
    log: File,
    batches: BTreeSet<u64>,
}

/// Durable session store. Appends to one session are serialized; different
/// sessions proceed independently.
pub struct SessionStore {
    root: PathBuf,
    index: Mutex<IndexDoc>,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<SessionState>>>>,
}

fn sync_dir(dir: &Path) -> std::io::Result<()> {
    File::open(dir)?.sync_all()
}

impl SessionStore {
    /// Opens (or initializes) the store under `root`, recovering every
    /// session log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let root = root.into();
        fs::create_dir_all(root.join(SESSIONS_DIR))?;
        let index_path = root.join(INDEX_FILE);
        let index: IndexDoc = match fs::read_to_string(&index_path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| IngestError::Storage(format!("{}: {e}", index_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => IndexDoc::default(),
            Err(e) => return Err(e.into()),
        };

        let mut sessions = BTreeMap::new();
        for entry in &index.sessions {
            let state = recover_session(&root, entry)?;
            sessions.insert(entry.session_id.clone(), Arc::new(Mutex::new(state)));
        }
        log::info!("opened store at {} with {} sessions", root.display(), sessions.len());
        Ok(SessionStore { root, index: Mutex::new(index), sessions: Mutex::new(sessions) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn log_path(&self, id: &str) -> PathBuf {
        log_path(&self.root, id)
    }

    fn write_index(&self, doc: &IndexDoc) -> Result<(), IngestError> {
        let tmp = self.root.join(format!("{INDEX_FILE}.tmp"));
        let mut text = serde_json::to_string_pretty(doc).expect("index serializes");
        text.push('\n');
        let mut f = File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, self.root.join(INDEX_FILE))?;
        sync_dir(&self.root)?;
        Ok(())
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, IngestError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| IngestError::NotFound(id.to_string()))
    }

    pub fn create_session(&self, respondent: &str, motion: MotionType, side: HandSide) -> Result<String, IngestError> {
        check_respondent(respondent)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let path = self.log_path(&id);
        let log = OpenOptions::new().create_new(true).append(true).open(&path)?;
        log.sync_all()?;
        sync_dir(path.parent().unwrap())?;

        let mut index = self.index.lock().unwrap();
        let seq = index.next_seq;
        let entry = IndexEntry {
            session_id: id.clone(),
            seq,
            respondent: respondent.to_string(),
            motion_type: motion,
            side,
            status: SessionStatus::Open,
        };
        index.next_seq += 1;
        index.sessions.push(entry);
        if let Err(e) = self.write_index(&index) {
            index.sessions.pop();
            index.next_seq -= 1;
            return Err(e);
        }
        let info = SessionInfo {
            session_id: id.clone(),
            respondent: respondent.to_string(),
            motion_type: motion,
            side,
            status: SessionStatus::Open,
            frame_count: 0,
            started_at: None,
            last_timestamp: None,
        };
        let state = SessionState { info, seq, log, batches: BTreeSet::new() };
        self.sessions.lock().unwrap().insert(id.clone(), Arc::new(Mutex::new(state)));
        log::debug!("created session {id} for {respondent} {motion} {side}");
        Ok(id)
    }

    /// Appends one batch atomically. Returns the number of frames accepted:
    /// zero for a replayed `batch_seq`.
    pub fn append_frames(&self, id: &str, batch_seq: Option<u64>, frames: Vec<WireFrame>) -> Result<usize, IngestError> {
        let session = self.session(id)?;
        let mut state = session.lock().unwrap();
        if state.info.status != SessionStatus::Open {
            return Err(IngestError::Conflict(format!("session {id} is finished")));
        }
        if let Some(seq) = batch_seq {
            if state.batches.contains(&seq) {
                log::debug!("session {id}: batch {seq} replayed");
                return Ok(0);
            }
        }
        if frames.is_empty() {
            return Err(IngestError::invalid("frames", "batch is empty"));
        }

        let (respondent, motion, side) = (state.info.respondent.clone(), state.info.motion_type, state.info.side);
        let mut last = state.info.last_timestamp;
        let mut accepted = Vec::with_capacity(frames.len());
        for (i, wire) in frames.into_iter().enumerate() {
            let frame = wire.into_frame(i, &respondent, motion, side)?;
            if let Err(v) = validate_frame(&frame) {
                return Err(IngestError::at(i, format!("frames[{i}].{}", v[0].field), v[0].reason.clone()));
            }
            if let Some(prev) = last {
                if frame.timestamp < prev {
                    return Err(IngestError::at(
                        i,
                        format!("frames[{i}].timestamp"),
                        format!("{} precedes previous frame at {prev}", frame.timestamp),
                    ));
                }
            }
            last = Some(frame.timestamp);
            accepted.push(frame);
        }

        let record = BatchRecord { batch_seq, frames: accepted };
        let mut line = serde_json::to_string(&record).expect("validated frames are finite");
        line.push('\n');
        let len_before = state.log.metadata()?.len();
        let written = state.log.write_all(line.as_bytes()).and_then(|_| state.log.sync_data());
        if let Err(e) = written {
            // Leave the log as it was so the rejected batch has no trace.
            let _ = state.log.set_len(len_before);
            return Err(e.into());
        }

        let n = record.frames.len();
        let info = &mut state.info;
        info.started_at = info.started_at.or(Some(record.frames[0].timestamp));
        info.last_timestamp = last;
        info.frame_count += n;
        if let Some(seq) = batch_seq {
            state.batches.insert(seq);
        }
        Ok(n)
    }

    pub fn finish_session(&self, id: &str) -> Result<FinishSummary, IngestError> {
        let session = self.session(id)?;
        let mut state = session.lock().unwrap();
        if state.info.status != SessionStatus::Open {
            return Err(IngestError::Conflict(format!("session {id} is already finished")));
        }
        {
            let mut index = self.index.lock().unwrap();
            let pos = index.sessions.iter().position(|e| e.session_id == id).expect("indexed session");
            index.sessions[pos].status = SessionStatus::Finished;
            if let Err(e) = self.write_index(&index) {
                index.sessions[pos].status = SessionStatus::Open;
                return Err(e);
            }
        }
        state.info.status = SessionStatus::Finished;
        let info = &state.info;
        let duration_s = match (info.started_at, info.last_timestamp) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        };
        Ok(FinishSummary { frame_count: info.frame_count, duration_s })
    }

    pub fn session_info(&self, id: &str) -> Result<SessionInfo, IngestError> {
        Ok(self.session(id)?.lock().unwrap().info.clone())
    }

    /// All sessions in creation order.
    pub fn list(&self) -> Vec<SessionInfo> {
        let mut all: Vec<(u64, SessionInfo)> = self
            .sessions
            .lock()
            .unwrap()
            .values()
            .map(|s| {
                let s = s.lock().unwrap();
                (s.seq, s.info.clone())
            })
            .collect();
        all.sort_by_key(|(seq, _)| *seq);
        all.into_iter().map(|(_, info)| info).collect()
    }

    /// Frames of every finished session matching `filter`, ordered by
    /// respondent, session start, then acceptance order.
    pub fn export_frames(&self, filter: &ExportFilter) -> Result<Vec<SensorFrame>, IngestError> {
        let mut chosen: Vec<(SessionInfo, u64)> = self
            .sessions
            .lock()
            .unwrap()
            .values()
            .filter_map(|s| {
                let s = s.lock().unwrap();
                let keep = s.info.status == SessionStatus::Finished && s.info.frame_count > 0 && filter.matches(&s.info);
                keep.then(|| (s.info.clone(), s.seq))
            })
            .collect();
        chosen.sort_by(|(a, sa), (b, sb)| {
            a.respondent
                .cmp(&b.respondent)
                .then(a.started_at.unwrap().total_cmp(&b.started_at.unwrap()))
                .then(sa.cmp(sb))
        });

        let mut frames = Vec::new();
        for (info, _) in chosen {
            // Finished logs are immutable, so reading outside the lock is safe.
            for record in read_log(&self.log_path(&info.session_id))?.0 {
                frames.extend(record.frames);
            }
        }
        Ok(frames)
    }

    /// CSV export: header plus one row per frame, each line `\n`-terminated.
    pub fn export_csv(&self, filter: &ExportFilter) -> Result<String, IngestError> {
        let frames = self.export_frames(filter)?;
        let mut out = csv_header();
        out.push('\n');
        for f in &frames {
            out.push_str(&frame_to_csv_row(f));
            out.push('\n');
        }
        Ok(out)
    }
}

fn log_path(root: &Path, id: &str) -> PathBuf {
    root.join(SESSIONS_DIR).join(format!("{id}.ndjson"))
}

/// Parsed records plus the byte length of the intact prefix.
fn read_log(path: &Path) -> Result<(Vec<BatchRecord>, u64, bool), IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Storage(format!("{}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut good = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            return Ok((records, good, false));
        }
        let complete = line.ends_with('\n');
        match serde_json::from_str::<BatchRecord>(line.trim_end_matches('\n')) {
            Ok(r) if complete => {
                records.push(r);
                good += n as u64;
            }
            _ => {
                let mut rest = String::new();
                reader.read_line(&mut rest)?;
                if !rest.is_empty() {
                    return Err(IngestError::Storage(format!(
                        "{}: corrupt record after byte {good}",
                        path.display()
                    )));
                }
                return Ok((records, good, true));
            }
        }
    }
}

fn recover_session(root: &Path, entry: &IndexEntry) -> Result<SessionState, IngestError> {
    let path = log_path(root, &entry.session_id);
    if !path.exists() {
        File::create(&path)?.sync_all()?;
    }
    let (records, good, torn) = read_log(&path)?;
    let log = OpenOptions::new().append(true).open(&path)?;
    if torn {
        log::warn!("{}: dropping unacknowledged partial record", path.display());
        log.set_len(good)?;
        log.sync_all()?;
    }
    let mut info = SessionInfo {
        session_id: entry.session_id.clone(),
        respondent: entry.respondent.clone(),
        motion_type: entry.motion_type,
        side: entry.side,
        status: entry.status,
        frame_count: 0,
        started_at: None,
        last_timestamp: None,
    };
    let mut batches = BTreeSet::new();
    for r in &records {
        if let Some(seq) = r.batch_seq {
            batches.insert(seq);
        }
        if let (Some(first), Some(last)) = (r.frames.first(), r.frames.last()) {
            info.started_at = info.started_at.or(Some(first.timestamp));
            info.last_timestamp = Some(last.timestamp);
        }
        info.frame_count += r.frames.len();
    }
    Ok(SessionState { info, seq: entry.seq, log, batches })
}
