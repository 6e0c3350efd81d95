use std::time::Duration;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use thiserror::Error;
use ureq::Agent;

use super::{ExportFilter, FinishSummary, SessionInfo, WireFrame};
use crate::sensor::{HandSide, MotionType, RecordingSession, SensorFrame};

const MAX_EXPORT_BYTES: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("{url} returned {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("unexpected response from {url}: {message}")]
    Decode { url: String, message: String },
}

/// Blocking client for the ingest HTTP API.
#[derive(Clone)]
pub struct Client {
    base: String,
    agent: Agent,
}

impl Client {
    pub fn new(base_url: &str) -> Self {
        let config = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        Client { base: base_url.trim_end_matches('/').to_string(), agent: Agent::new_with_config(config) }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn finish<T: DeserializeOwned>(
        url: &str,
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
        expected: u16,
    ) -> Result<T, ClientError> {
        let mut resp = result.map_err(|e| ClientError::Transport { url: url.to_string(), message: e.to_string() })?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_EXPORT_BYTES)
            .read_to_string()
            .map_err(|e| ClientError::Transport { url: url.to_string(), message: e.to_string() })?;
        if status != expected {
            return Err(ClientError::Status { url: url.to_string(), status, body });
        }
        serde_json::from_str(&body).map_err(|e| ClientError::Decode { url: url.to_string(), message: e.to_string() })
    }

    fn post<T: DeserializeOwned>(&self, path: &str, body: &Value, expected: u16) -> Result<T, ClientError> {
        let url = format!("{}{path}", self.base);
        let result = self.agent.post(&url).header("content-type", "application/json").send(body.to_string());
        Self::finish(&url, result, expected)
    }

    pub fn health(&self) -> Result<Value, ClientError> {
        let url = format!("{}/api/v1/health", self.base);
        Self::finish(&url, self.agent.get(&url).call(), 200)
    }

    pub fn create_session(&self, respondent: &str, motion: MotionType, side: HandSide) -> Result<String, ClientError> {
        let body = json!({ "respondent": respondent, "motion_type": motion, "side": side });
        let v: Value = self.post("/api/v1/sessions", &body, 201)?;
        v["session_id"].as_str().map(str::to_string).ok_or_else(|| ClientError::Decode {
            url: format!("{}/api/v1/sessions", self.base),
            message: "missing session_id".into(),
        })
    }

    pub fn post_frames(&self, session_id: &str, batch_seq: Option<u64>, frames: &[SensorFrame]) -> Result<usize, ClientError> {
        let wire: Vec<WireFrame> = frames.iter().map(WireFrame::from).collect();
        let body = json!({ "batch_seq": batch_seq, "frames": wire });
        let v: Value = self.post(&format!("/api/v1/sessions/{session_id}/frames"), &body, 202)?;
        Ok(v["accepted"].as_u64().unwrap_or(0) as usize)
    }

    pub fn finish_session(&self, session_id: &str) -> Result<FinishSummary, ClientError> {
        self.post(&format!("/api/v1/sessions/{session_id}/finish"), &json!({}), 200)
    }

    pub fn session_info(&self, session_id: &str) -> Result<SessionInfo, ClientError> {
        let url = format!("{}/api/v1/sessions/{session_id}", self.base);
        Self::finish(&url, self.agent.get(&url).call(), 200)
    }

    /// Creates a session, syncs its frames in numbered batches of
    /// `batch_size`, and finishes it. Returns the server session id.
    pub fn upload_session(&self, session: &RecordingSession, batch_size: usize) -> Result<String, ClientError> {
        let id = self.create_session(&session.respondent, session.motion_type, session.side)?;
        for (k, chunk) in session.frames.chunks(batch_size.max(1)).enumerate() {
            self.post_frames(&id, Some(k as u64), chunk)?;
        }
        self.finish_session(&id)?;
        Ok(id)
    }

    pub fn export_csv(&self, filter: &ExportFilter) -> Result<String, ClientError> {
        let url = format!("{}/api/v1/export.csv", self.base);
        let mut req = self.agent.get(&url);
        if let Some(s) = filter.side {
            req = req.query("side", s.as_str());
        }
        if let Some(m) = filter.motion {
            req = req.query("motion", m.as_str());
        }
        if let Some(r) = &filter.respondent {
            req = req.query("respondent", r);
        }
        let mut resp = req.call().map_err(|e| ClientError::Transport { url: url.clone(), message: e.to_string() })?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_EXPORT_BYTES)
            .read_to_string()
            .map_err(|e| ClientError::Transport { url: url.clone(), message: e.to_string() })?;
        if status != 200 {
            return Err(ClientError::Status { url, status, body });
        }
        Ok(body)
    }
}
