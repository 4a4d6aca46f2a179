//! Query a remote detector over HTTP. A local mock server stands in for a
//! hosted fine-tuned model.
//!
//! cargo run --example remote_detector

use std::time::Duration;

use persona_probe::corpus::DocumentSet;
use persona_probe::detector::{Detector, RemoteDetector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = tiny_http::Server::http("127.0.0.1:0").map_err(|e| e.to_string())?;
    let url = format!("http://{}/predict", server.server_addr());
    std::thread::spawn(move || {
        for (i, request) in server.incoming_requests().enumerate() {
            let body = if i == 0 {
                r#"{"type":"INTP","scores":[0.1,0.8,0.7,0.3]}"#
            } else {
                r#"{"type":"XQZW","scores":[0.1,0.8,0.7,0.3]}"#
            };
            let _ = request.respond(tiny_http::Response::from_string(body));
        }
    });

    let detector = RemoteDetector::new(url, Duration::from_secs(5), 4)?;
    let docs = DocumentSet::new([
        "Why does everything have to be scheduled?",
        "Reading about compilers again.",
    ])?;
    println!("first reply:  {:?}", detector.predict(&docs)?);
    match detector.predict(&docs) {
        Ok(p) => println!("second reply: {p:?}"),
        Err(e) => println!("second reply rejected: {e}"),
    }
    Ok(())
}
