use std::sync::Arc;

use har_core::ingest::{Client, ClientError, ExportFilter, ServerHandle, SessionStore, WireFrame};
use har_core::sensor::{csv_header, parse_csv, HandSide, MotionType, SensorFrame};
use har_core::sim::synth_session;
use serde_json::{json, Value};
use ureq::Agent;

struct Fixture {
    _dir: tempfile::TempDir,
    server: ServerHandle,
    agent: Agent,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(SessionStore::open(dir.path()).unwrap());
        let server = ServerHandle::start(store, "127.0.0.1:0".parse().unwrap()).unwrap();
        let agent = Agent::new_with_config(Agent::config_builder().http_status_as_error(false).build());
        Fixture { _dir: dir, server, agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/api/v1{path}", self.server.url())
    }

    fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut resp = self
            .agent
            .post(&self.url(path))
            .header("content-type", "application/json")
            .send(body.to_string())
            .unwrap();
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().unwrap();
        (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
    }

    fn get(&self, path: &str) -> (u16, String) {
        let mut resp = self.agent.get(&self.url(path)).call().unwrap();
        (resp.status().as_u16(), resp.body_mut().read_to_string().unwrap())
    }

    fn create(&self, respondent: &str) -> String {
        let (status, body) =
            self.post("/sessions", &json!({"respondent": respondent, "motion_type": "bicep_curls", "side": "left"}));
        assert_eq!(status, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

fn wire_frames(respondent: &str, n: usize) -> Vec<Value> {
    let s = synth_session(respondent, MotionType::BicepCurls, HandSide::Left, 3);
    s.frames[..n].iter().map(|f| serde_json::to_value(WireFrame::from(f)).unwrap()).collect()
}

#[test]
fn create_session_returns_201_and_open_status() {
    let fx = Fixture::new();
    let (status, body) =
        fx.post("/sessions", &json!({"respondent": "S01", "motion_type": "reverse_fly", "side": "right"}));
    assert_eq!(status, 201);
    assert_eq!(body["status"], "open");
    let id = body["session_id"].as_str().unwrap();
    let (status, info) = fx.get(&format!("/sessions/{id}"));
    assert_eq!(status, 200);
    let info: Value = serde_json::from_str(&info).unwrap();
    assert_eq!(info["respondent"], "S01");
    assert_eq!(info["frame_count"], 0);
}

#[test]
fn create_session_validation_names_the_field() {
    let fx = Fixture::new();
    let cases = [
        (json!({"respondent": "", "motion_type": "bicep_curls", "side": "left"}), "respondent"),
        (json!({"motion_type": "bicep_curls", "side": "left"}), "respondent"),
        (json!({"respondent": "S01", "motion_type": "jumping_jacks", "side": "left"}), "motion_type"),
        (json!({"respondent": "S01", "motion_type": "bicep_curls", "side": "both"}), "side"),
        (json!([1, 2]), "body"),
    ];
    for (body, field) in cases {
        let (status, err) = fx.post("/sessions", &body);
        assert_eq!(status, 400, "{body}");
        assert_eq!(err["field"], field, "{err}");
        assert_eq!(err["error"], "invalid");
    }
}

#[test]
fn frames_are_accepted_and_replays_are_idempotent() {
    let fx = Fixture::new();
    let id = fx.create("S02");
    let frames = wire_frames("S02", 14);
    let path = format!("/sessions/{id}/frames");
    let (status, body) = fx.post(&path, &json!({"batch_seq": 0, "frames": frames[..7]}));
    assert_eq!((status, body["accepted"].as_u64()), (202, Some(7)));
    let (status, body) = fx.post(&path, &json!({"batch_seq": 0, "frames": frames[..7]}));
    assert_eq!((status, body["accepted"].as_u64()), (202, Some(0)));
    let (status, body) = fx.post(&path, &json!({"batch_seq": 1, "frames": frames[7..]}));
    assert_eq!((status, body["accepted"].as_u64()), (202, Some(7)));

    let (_, info) = fx.get(&format!("/sessions/{id}"));
    let info: Value = serde_json::from_str(&info).unwrap();
    assert_eq!(info["frame_count"], 14);
}

#[test]
fn invalid_frame_rejects_whole_batch_with_index() {
    let fx = Fixture::new();
    let id = fx.create("S03");
    let mut frames = wire_frames("S03", 7);
    frames[4]["accelerometer"][2] = Value::Null;
    let (status, err) = fx.post(&format!("/sessions/{id}/frames"), &json!({"batch_seq": 0, "frames": frames}));
    assert_eq!(status, 400);
    assert_eq!(err["index"], 4);
    assert!(err["field"].as_str().unwrap().starts_with("frames[4].accelerometer"), "{err}");

    let (_, info) = fx.get(&format!("/sessions/{id}"));
    let info: Value = serde_json::from_str(&info).unwrap();
    assert_eq!(info["frame_count"], 0);

    // the rejected batch did not consume its sequence number
    let frames = wire_frames("S03", 7);
    let (status, body) = fx.post(&format!("/sessions/{id}/frames"), &json!({"batch_seq": 0, "frames": frames}));
    assert_eq!((status, body["accepted"].as_u64()), (202, Some(7)));
}

#[test]
fn malformed_frame_and_empty_batch() {
    let fx = Fixture::new();
    let id = fx.create("S04");
    let mut frames = wire_frames("S04", 3);
    frames[1]["gyroscope"] = json!([1.0, 2.0]);
    let (status, err) = fx.post(&format!("/sessions/{id}/frames"), &json!({"frames": frames}));
    assert_eq!(status, 400);
    assert_eq!(err["field"], "frames[1]");
    let (status, err) = fx.post(&format!("/sessions/{id}/frames"), &json!({"frames": []}));
    assert_eq!(status, 400);
    assert_eq!(err["field"], "frames");
    let (status, err) = fx.post(&format!("/sessions/{id}/frames"), &json!({"batch_seq": -1, "frames": []}));
    assert_eq!(status, 400);
    assert_eq!(err["field"], "batch_seq");
}

#[test]
fn unknown_session_is_404() {
    let fx = Fixture::new();
    let (status, err) = fx.post("/sessions/nope/frames", &json!({"frames": wire_frames("S01", 1)}));
    assert_eq!(status, 404);
    assert_eq!(err["error"], "not_found");
    assert_eq!(fx.post("/sessions/nope/finish", &json!({})).0, 404);
    assert_eq!(fx.get("/sessions/nope").0, 404);
}

#[test]
fn finish_rules() {
    let fx = Fixture::new();
    let id = fx.create("S05");
    let (status, summary) = fx.post(&format!("/sessions/{id}/finish"), &json!({}));
    assert_eq!(status, 200);
    assert_eq!(summary, json!({"frame_count": 0, "duration_s": 0.0}));
    let (status, err) = fx.post(&format!("/sessions/{id}/finish"), &json!({}));
    assert_eq!(status, 409);
    assert_eq!(err["error"], "conflict");
    let (status, _) = fx.post(&format!("/sessions/{id}/frames"), &json!({"frames": wire_frames("S05", 2)}));
    assert_eq!(status, 409);
}

#[test]
fn export_filters_and_content_type() {
    let fx = Fixture::new();
    let (status, csv) = fx.get("/export.csv");
    assert_eq!(status, 200);
    assert_eq!(csv, format!("{}\n", csv_header()));

    let client = Client::new(&fx.server.url());
    let left = synth_session("S06", MotionType::LateralRaise, HandSide::Left, 1);
    let right = synth_session("S06", MotionType::LateralRaise, HandSide::Right, 1);
    client.upload_session(&left, 7).unwrap();
    client.upload_session(&right, 50).unwrap();

    let resp = fx.agent.get(&fx.url("/export.csv?side=right")).call().unwrap();
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/csv"));
    let frames = parse_csv(&client.export_csv(&ExportFilter { side: Some(HandSide::Right), ..Default::default() }).unwrap()).unwrap();
    // CSV carries no mask; all-zero groups read back as unavailable
    let expected: Vec<_> = right
        .frames
        .iter()
        .map(|f| SensorFrame { availability_mask: f.inferred_mask(), ..f.clone() })
        .collect();
    assert_eq!(frames, expected);
    let all = parse_csv(&client.export_csv(&ExportFilter::default()).unwrap()).unwrap();
    assert_eq!(all.len(), left.frames.len() + right.frames.len());
    let none = client
        .export_csv(&ExportFilter { motion: Some(MotionType::SeatedRows), ..Default::default() })
        .unwrap();
    assert_eq!(none.lines().count(), 1);

    assert_eq!(fx.get("/export.csv?side=up").0, 400);
    assert_eq!(fx.get("/export.csv?motion=situps").0, 400);
}

#[test]
fn health_and_cors() {
    let fx = Fixture::new();
    fx.create("S07");
    let (status, body) = fx.get("/health");
    assert_eq!(status, 200);
    let body: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body, json!({"status": "ok", "sessions": 1}));

    let resp = fx.agent.get(&fx.url("/health")).header("origin", "http://localhost:5173").call().unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[test]
fn client_surfaces_status_errors() {
    let fx = Fixture::new();
    let client = Client::new(&fx.server.url());
    match client.finish_session("missing") {
        Err(ClientError::Status { status: 404, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    let dead = Client::new("http://127.0.0.1:1");
    assert!(matches!(dead.health(), Err(ClientError::Transport { .. })));
}
