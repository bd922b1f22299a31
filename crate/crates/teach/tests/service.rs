use std::net::SocketAddr;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use pacman_teach::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

async fn start(config: ServiceConfig) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(AppState::new(config))).await.unwrap();
    });
    addr
}

struct Client {
    http: reqwest::Client,
    base: String,
    addr: SocketAddr,
}

impl Client {
    async fn new(config: ServiceConfig) -> Self {
        let addr = start(config).await;
        Self {
            http: reqwest::Client::new(),
            base: format!("http://{addr}"),
            addr,
        }
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn create(&self, body: Value) -> String {
        let (code, v) = self.post("/sessions", body).await;
        assert_eq!(code, 201, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    async fn control(&self, id: &str, cmd: &str, value: Option<f64>) -> (u16, Value) {
        self.post(
            &format!("/sessions/{id}/control"),
            json!({"type": "control", "cmd": cmd, "value": value}),
        )
        .await
    }

    async fn socket(
        &self,
        id: &str,
        from: u64,
    ) -> tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>> {
        let url = format!("ws://{}/sessions/{id}/stream?from={from}", self.addr);
        tokio_tungstenite::connect_async(url).await.unwrap().0
    }
}

type Socket =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next_json(ws: &mut Socket) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("message within 10 s")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

async fn next_of(ws: &mut Socket, kind: &str) -> Value {
    loop {
        let v = next_json(ws).await;
        if v["type"] == kind {
            return v;
        }
    }
}

#[tokio::test]
async fn sessions_are_created_paused_with_distinct_ids() {
    let c = Client::new(ServiceConfig::default()).await;
    let a = c.create(json!({"domain": "fourrooms"})).await;
    let b = c.create(json!({"domain": "taxi", "agent": "ac"})).await;
    assert_ne!(a, b);
    let (code, s) = c.get(&format!("/sessions/{a}")).await;
    assert_eq!(code, 200);
    assert_eq!(s["status"], "paused");
    assert_eq!(s["steps"], 0);

    let (code, err) = c.post("/sessions", json!({"domain": "mars"})).await;
    assert_eq!(code, 400);
    assert!(err["error"].as_str().unwrap().contains("mars"));
    let (code, _) = c.post("/sessions", json!({"domain": "taxi", "agent": "qshape"})).await;
    assert_eq!(code, 400);
    let (code, _) = c.get("/sessions/nope").await;
    assert_eq!(code, 404);
}

#[tokio::test]
async fn control_lifecycle() {
    let c = Client::new(ServiceConfig::default()).await;
    let id = c.create(json!({"domain": "fourrooms", "scenario": "helpful", "speed": 50})).await;
    let (_, r) = c.control(&id, "resume", None).await;
    assert_eq!(r["status"], "running");
    tokio::time::sleep(Duration::from_millis(200)).await;
    let (_, r) = c.control(&id, "pause", None).await;
    assert_eq!(r["status"], "paused");
    tokio::time::sleep(Duration::from_millis(100)).await;
    let (_, s1) = c.get(&format!("/sessions/{id}")).await;
    tokio::time::sleep(Duration::from_millis(300)).await;
    let (_, s2) = c.get(&format!("/sessions/{id}")).await;
    assert_eq!(s1["status"], "paused");
    assert!(s1["steps"].as_u64().unwrap() > 0);
    assert_eq!(s1["steps"], s2["steps"], "paused session kept stepping");

    let (code, _) = c.control(&id, "set_speed", Some(0.0)).await;
    assert_eq!(code, 400);
    let (code, r) = c.control(&id, "stop", None).await;
    assert_eq!((code, r["status"].as_str()), (200, Some("finished")));
    let (code, _) = c.control(&id, "resume", None).await;
    assert_eq!(code, 409);
    let (_, s) = c.get(&format!("/sessions/{id}")).await;
    assert_eq!(s["status"], "finished");
}

#[tokio::test]
async fn live_feedback_round_trip() {
    let c = Client::new(ServiceConfig::default()).await;
    let id = c
        .create(json!({"domain": "fourrooms", "agent": "ac", "speed": 2, "grace_ms": 400}))
        .await;
    let mut ws = c.socket(&id, 0).await;
    c.control(&id, "resume", None).await;

    let first = next_of(&mut ws, "step").await;
    let k = first["step"].as_u64().unwrap();
    let fb = json!({"v": 1, "type": "feedback", "step": k, "sign": -1});
    ws.send(Message::Text(fb.to_string().into())).await.unwrap();
    let reply = next_of(&mut ws, "feedback_result").await;
    assert_eq!(reply["accepted"], true, "{reply}");
    ws.send(Message::Text(fb.to_string().into())).await.unwrap();
    let reply = next_of(&mut ws, "feedback_result").await;
    assert_eq!((reply["accepted"].as_bool(), reply["reason"].as_str()), (Some(false), Some("duplicate")));

    let second = next_of(&mut ws, "step").await;
    assert_eq!(second["step"].as_u64(), Some(k + 1));
    assert_eq!(second["feedback"]["step"].as_u64(), Some(k));
    assert_eq!(second["feedback"]["sign"], -1);
    assert_eq!(second["feedback"]["origin"], "live");

    // step k's update is done, so it is out of the window
    let (_, r) = c
        .post(&format!("/sessions/{id}/feedback"), json!({"step": k, "sign": 1}))
        .await;
    assert_eq!((r["accepted"].as_bool(), r["reason"].as_str()), (Some(false), Some("stale")));

    let third = next_of(&mut ws, "step").await;
    assert!(third["feedback"].is_null(), "no feedback was given for step {}", k + 1);
    c.control(&id, "stop", None).await;
}

#[tokio::test]
async fn stream_is_ordered_and_resumable() {
    let c = Client::new(ServiceConfig::default()).await;
    let id = c.create(json!({"domain": "taxi", "scenario": "helpful", "speed": 100})).await;
    let mut ws = c.socket(&id, 0).await;
    c.control(&id, "resume", None).await;
    let mut steps = Vec::new();
    while steps.len() < 10 {
        steps.push(next_of(&mut ws, "step").await);
    }
    drop(ws);
    for pair in steps.windows(2) {
        assert_eq!(pair[1]["step"].as_u64().unwrap(), pair[0]["step"].as_u64().unwrap() + 1);
        assert!(pair[1]["seq"].as_u64() > pair[0]["seq"].as_u64());
    }
    // reconnect after the fifth step event
    let resume = steps[4]["seq"].as_u64().unwrap() + 1;
    let mut ws = c.socket(&id, resume).await;
    let replayed = next_json(&mut ws).await;
    assert_eq!(replayed["seq"].as_u64(), Some(resume));
    let replayed = if replayed["type"] == "step" { replayed } else { next_of(&mut ws, "step").await };
    assert_eq!(replayed["step"], steps[5]["step"]);
    assert_eq!(replayed["action"], steps[5]["action"]);
    c.control(&id, "stop", None).await;
}

#[tokio::test]
async fn slow_readers_get_a_gap_notice() {
    let c = Client::new(ServiceConfig {
        replay_capacity: 5,
        ..Default::default()
    })
    .await;
    let id = c.create(json!({"domain": "fourrooms", "scenario": "helpful", "speed": 1000})).await;
    c.control(&id, "resume", None).await;
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        let (_, s) = c.get(&format!("/sessions/{id}")).await;
        if s["next_seq"].as_u64().unwrap() > 20 {
            break;
        }
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let (_, page) = c.get(&format!("/sessions/{id}/events?from=0")).await;
    assert_eq!(page["gap"]["type"], "gap");
    assert_eq!(page["gap"]["from"], 0);
    let first = page["events"][0]["seq"].as_u64().unwrap();
    assert_eq!(page["gap"]["to"].as_u64(), Some(first));

    let mut ws = c.socket(&id, 0).await;
    let notice = next_json(&mut ws).await;
    assert_eq!(notice["type"], "gap");
    c.control(&id, "stop", None).await;
}

#[tokio::test]
async fn speed_bounds_the_step_rate() {
    let c = Client::new(ServiceConfig::default()).await;
    let id = c.create(json!({"domain": "fourrooms", "scenario": "helpful", "speed": 100})).await;
    c.control(&id, "set_speed", Some(4.0)).await;
    let started = Instant::now();
    c.control(&id, "resume", None).await;
    tokio::time::sleep(Duration::from_millis(1500)).await;
    let (_, s) = c.get(&format!("/sessions/{id}")).await;
    let elapsed = started.elapsed().as_secs_f64();
    let steps = s["steps"].as_u64().unwrap() as f64;
    assert!(steps >= 1.0);
    assert!(steps <= 4.0 * elapsed + 1.0, "{steps} steps in {elapsed:.2}s");
    c.control(&id, "stop", None).await;
}

#[tokio::test]
async fn oracle_sessions_report_oracle_feedback_and_summaries() {
    let c = Client::new(ServiceConfig::default()).await;
    let id = c
        .create(json!({"domain": "fourrooms", "scenario": "helpful", "speed": 1000, "episodes": 2}))
        .await;
    let mut ws = c.socket(&id, 0).await;
    c.control(&id, "resume", None).await;
    let mut summaries = Vec::new();
    let mut oracle_applied = 0;
    loop {
        let v = next_json(&mut ws).await;
        match v["type"].as_str().unwrap() {
            "step" if v["feedback"]["origin"] == "oracle" => oracle_applied += 1,
            "summary" => summaries.push(v),
            "status" if v["status"] == "finished" => break,
            _ => {}
        }
    }
    assert!(oracle_applied > 0);
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[1]["episode"], 1);
    assert!(summaries[1]["variance"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn sessions_do_not_share_learners() {
    let c = Client::new(ServiceConfig::default()).await;
    let body = json!({"domain": "taxi", "agent": "ac", "scenario": "misleading", "speed": 1000, "seed": 3});
    let a = c.create(body.clone()).await;
    let b = c.create(body).await;
    let mut wa = c.socket(&a, 0).await;
    let mut wb = c.socket(&b, 0).await;
    c.control(&a, "resume", None).await;
    c.control(&b, "resume", None).await;
    for _ in 0..30 {
        let x = next_of(&mut wa, "step").await;
        let y = next_of(&mut wb, "step").await;
        for key in ["step", "action", "reward", "delta", "state"] {
            assert_eq!(x[key], y[key]);
        }
    }
    c.control(&a, "stop", None).await;
    c.control(&b, "stop", None).await;
}

#[tokio::test]
async fn event_log_is_written() {
    let dir = std::env::temp_dir().join(format!("teach-log-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let c = Client::new(ServiceConfig {
        log_dir: Some(dir.clone()),
        ..Default::default()
    })
    .await;
    let id = c
        .create(json!({"domain": "fourrooms", "scenario": "helpful", "speed": 1000, "episodes": 1}))
        .await;
    c.control(&id, "resume", None).await;
    let deadline = Instant::now() + Duration::from_secs(10);
    while c.get(&format!("/sessions/{id}")).await.1["status"] != "finished" {
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let text = std::fs::read_to_string(dir.join(format!("{id}.jsonl"))).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().any(|l| l["type"] == "step"));
    assert_eq!(lines.last().unwrap()["status"], "finished");
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["seq"].as_u64(), Some(i as u64));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
