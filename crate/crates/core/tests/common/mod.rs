#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// What the mock server sends back for one request.
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
    pub headers: Vec<(String, String)>,
}

impl Reply {
    pub fn json(status: u16, body: impl Into<String>) -> Self {
        Reply {
            status,
            body: body.into(),
            delay: Duration::ZERO,
            headers: Vec::new(),
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

/// A request as the mock server saw it.
#[derive(Debug, Clone)]
pub struct Seen {
    pub url: String,
    pub authorization: Option<String>,
    pub body: serde_json::Value,
}

pub struct MockServer {
    pub url: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
}

/// Serves requests on a background thread until the process exits.
pub fn serve<F>(handler: F) -> MockServer
where
    F: Fn(&serde_json::Value, usize) -> Reply + Send + Sync + 'static,
{
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
    let port = server.server_addr().to_ip().expect("ip listener").port();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let handler = Arc::new(handler);
    {
        let seen = Arc::clone(&seen);
        thread::spawn(move || {
            for mut request in server.incoming_requests() {
                let mut raw = String::new();
                let _ = std::io::Read::read_to_string(request.as_reader(), &mut raw);
                let body: serde_json::Value = serde_json::from_str(&raw).unwrap_or(serde_json::Value::Null);
                let authorization = request
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv("Authorization"))
                    .map(|h| h.value.to_string());
                let index = {
                    let mut seen = seen.lock().unwrap();
                    seen.push(Seen {
                        url: request.url().to_string(),
                        authorization,
                        body: body.clone(),
                    });
                    seen.len() - 1
                };
                let handler = Arc::clone(&handler);
                thread::spawn(move || {
                    let reply = handler(&body, index);
                    thread::sleep(reply.delay);
                    let mut response = tiny_http::Response::from_string(reply.body)
                        .with_status_code(reply.status)
                        .with_header(
                            "Content-Type: application/json"
                                .parse::<tiny_http::Header>()
                                .unwrap(),
                        );
                    for (k, v) in reply.headers {
                        response
                            .add_header(tiny_http::Header::from_bytes(k.as_bytes(), v.as_bytes()).unwrap());
                    }
                    let _ = request.respond(response);
                });
            }
        });
    }
    MockServer {
        url: format!("http://127.0.0.1:{port}"),
        seen,
    }
}

/// Writes `n` events and `n` tweets as JSONL source files.
pub fn write_sources(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let topics = ["sports", "technology", "politics", "science", "music"];
    let mut events = String::new();
    let mut tweets = String::new();
    for i in 0..n {
        let topic = topics[i % topics.len()];
        events.push_str(&format!(
            "{{\"id\":\"ev-{i}\",\"topic\":\"{topic}\",\"text\":\"Summary of {topic} event number {i}.\"}}\n"
        ));
        tweets.push_str(&format!(
            "{{\"id\":\"tw-{i}\",\"topic\":\"{topic}\",\"text\":\"Hot take {i} about {topic}!\"}}\n"
        ));
    }
    let e = dir.join("events.jsonl");
    let t = dir.join("tweets.jsonl");
    std::fs::write(&e, events).unwrap();
    std::fs::write(&t, tweets).unwrap();
    (e, t)
}
