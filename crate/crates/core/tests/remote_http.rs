mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{serve, Reply};
use persona_probe::bootstrap::{assess_with_threads, BootstrapError, BootstrapPlan};
use persona_probe::corpus::DocumentSet;
use persona_probe::detector::{remote_predict, Detector, DetectorError, RemoteDetector};
use persona_probe::genpipe::{
    run_generation_with, ChatProvider, ChatRequest, GenerationConfig, GenerationTask, OpenAiProvider,
    ProviderError, RetryPolicy, Role, RunOptions, COMMENT_SYSTEM_PROMPT, COMMENT_USER_PREFIX,
};
use persona_probe::MbtiType;

fn docs() -> DocumentSet {
    DocumentSet::new(["first post", "second post"]).unwrap()
}

#[test]
fn remote_detector_round_trip() {
    let server = serve(|_, _| Reply::json(200, r#"{"type":"INFJ","scores":[0.2,0.9,0.3,0.8]}"#));
    let client = RemoteDetector::new(format!("{}/predict", server.url), Duration::from_secs(5), 2).unwrap();
    let p = client.predict(&docs()).unwrap();
    assert_eq!(p.mbti.code(), "INFJ");
    assert_eq!(p.per_dimension_scores, [0.2, 0.9, 0.3, 0.8]);
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].url, "/predict");
    assert_eq!(
        seen[0].body["documents"],
        serde_json::json!(["first post", "second post"])
    );
}

#[test]
fn remote_detector_rejects_unknown_type() {
    let server = serve(|_, _| Reply::json(200, r#"{"type":"XQZW","scores":[0.2,0.9,0.3,0.8]}"#));
    let client = RemoteDetector::new(server.url.clone(), Duration::from_secs(5), 1).unwrap();
    assert!(matches!(
        remote_predict(&client, &docs()),
        Err(DetectorError::MalformedResponse(_))
    ));
}

#[test]
fn remote_detector_rejects_non_json() {
    let server = serve(|_, _| Reply::json(200, "<html>oops</html>"));
    let client = RemoteDetector::new(server.url.clone(), Duration::from_secs(5), 1).unwrap();
    assert!(matches!(
        client.predict(&docs()),
        Err(DetectorError::MalformedResponse(_))
    ));
}

#[test]
fn remote_detector_times_out() {
    let server = serve(|_, _| {
        Reply::json(200, r#"{"type":"INFJ","scores":[0.2,0.9,0.3,0.8]}"#).delayed(Duration::from_secs(3))
    });
    let client = RemoteDetector::new(server.url.clone(), Duration::from_millis(300), 1).unwrap();
    let start = Instant::now();
    assert!(matches!(client.predict(&docs()), Err(DetectorError::Timeout)));
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn remote_detector_server_error_is_transport() {
    let server = serve(|_, _| Reply::json(503, "{}"));
    let client = RemoteDetector::new(server.url.clone(), Duration::from_secs(5), 1).unwrap();
    assert!(matches!(
        client.predict(&docs()),
        Err(DetectorError::Transport(_))
    ));
}

#[test]
fn remote_detector_bounds_in_flight_requests() {
    let active = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (a, p) = (Arc::clone(&active), Arc::clone(&peak));
    let server = serve(move |_, _| {
        let now = a.fetch_add(1, Ordering::SeqCst) + 1;
        p.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(30));
        a.fetch_sub(1, Ordering::SeqCst);
        Reply::json(200, r#"{"type":"ESTJ","scores":[0.9,0.1,0.9,0.9]}"#)
    });
    let client = RemoteDetector::new(server.url.clone(), Duration::from_secs(5), 2).unwrap();
    let pool: Vec<_> = (0..20)
        .map(|i| persona_probe::genpipe::GeneratedText {
            id: format!("g{i}"),
            role: Role::Post,
            source: "s".into(),
            model: "m".into(),
            text: format!("text {i}"),
            created_at: chrono::DateTime::UNIX_EPOCH,
        })
        .collect();
    let plan = BootstrapPlan::new(12, 5, 1).unwrap();
    let dist = assess_with_threads(&pool, &client, &plan, 8).unwrap();
    assert_eq!(dist.count("ESTJ".parse::<MbtiType>().unwrap()), 12);
    assert!(
        peak.load(Ordering::SeqCst) <= 2,
        "peak {}",
        peak.load(Ordering::SeqCst)
    );
}

#[test]
fn remote_failure_surfaces_set_index() {
    let server = serve(|_, _| Reply::json(200, r#"{"type":"XQZW","scores":[0.2,0.9,0.3,0.8]}"#));
    let client = RemoteDetector::new(server.url.clone(), Duration::from_secs(5), 1).unwrap();
    let pool = vec![persona_probe::genpipe::GeneratedText {
        id: "g".into(),
        role: Role::Comment,
        source: "s".into(),
        model: "m".into(),
        text: "hello".into(),
        created_at: chrono::DateTime::UNIX_EPOCH,
    }];
    let plan = BootstrapPlan::new(3, 2, 9).unwrap();
    let err = assess_with_threads(&pool, &client, &plan, 1).unwrap_err();
    assert!(matches!(
        err,
        BootstrapError::Detector {
            source: DetectorError::MalformedResponse(_),
            ..
        }
    ));
}

fn request() -> ChatRequest {
    ChatRequest {
        system: COMMENT_SYSTEM_PROMPT.into(),
        user: format!("{COMMENT_USER_PREFIX}nice weather"),
        temperature: 0.2,
        top_p: 0.95,
        max_tokens: 200,
    }
}

#[test]
fn openai_provider_sends_sampling_parameters() {
    let server = serve(|_, _| {
        Reply::json(
            200,
            r#"{"choices":[{"message":{"role":"assistant","content":"  Sunny again!  "}}]}"#,
        )
    });
    let provider = OpenAiProvider::new(
        &format!("{}/v1/", server.url),
        "gpt-test",
        "sk-test",
        Duration::from_secs(5),
    )
    .unwrap();
    assert_eq!(provider.complete(&request()).unwrap(), "Sunny again!");
    let seen = server.seen.lock().unwrap();
    let s = &seen[0];
    assert_eq!(s.url, "/v1/chat/completions");
    assert_eq!(s.authorization.as_deref(), Some("Bearer sk-test"));
    assert_eq!(s.body["model"], "gpt-test");
    assert_eq!(s.body["temperature"], 0.2);
    assert_eq!(s.body["top_p"], 0.95);
    assert_eq!(s.body["max_tokens"], 200);
    assert_eq!(s.body["messages"][0]["role"], "system");
    assert_eq!(s.body["messages"][0]["content"], "Generate a Twitter comment");
    assert_eq!(
        s.body["messages"][1]["content"],
        "As a user on Twitter, write a tweet to comment on this Tweet: nice weather"
    );
}

#[test]
fn openai_provider_maps_statuses() {
    let server = serve(|body, _| match body["model"].as_str() {
        Some("limited") => Reply::json(429, "{}").header("Retry-After", "2"),
        Some("broken") => Reply::json(502, "{}"),
        Some("denied") => Reply::json(401, r#"{"error":"bad key"}"#),
        _ => Reply::json(200, r#"{"choices":[{"message":{"content":""}}]}"#),
    });
    let call = |model: &str| {
        OpenAiProvider::new(&server.url, model, "k", Duration::from_secs(5))
            .unwrap()
            .complete(&request())
    };
    assert_eq!(
        call("limited"),
        Err(ProviderError::RateLimited {
            retry_after: Some(Duration::from_secs(2))
        })
    );
    assert!(matches!(call("broken"), Err(ProviderError::Transport(_))));
    assert!(matches!(
        call("denied"),
        Err(ProviderError::Rejected { status: 401, .. })
    ));
    assert_eq!(call("empty"), Err(ProviderError::EmptyCompletion));
}

#[test]
fn openai_provider_timeout() {
    let server = serve(|_, _| Reply::json(200, "{}").delayed(Duration::from_secs(3)));
    let provider = OpenAiProvider::new(&server.url, "m", "k", Duration::from_millis(300)).unwrap();
    assert_eq!(provider.complete(&request()), Err(ProviderError::Timeout));
}

#[test]
fn openai_provider_requires_key_before_any_request() {
    let server = serve(|_, _| Reply::json(200, "{}"));
    let err = OpenAiProvider::from_env(
        &server.url,
        "m",
        "PERSONA_PROBE_TEST_UNSET_KEY",
        Duration::from_secs(1),
    );
    assert!(err.is_err());
    assert!(server.seen.lock().unwrap().is_empty());
}

#[test]
fn generation_recovers_from_transient_server_errors() {
    let server = serve(|_, index| {
        if index % 2 == 0 {
            Reply::json(500, "{}")
        } else {
            Reply::json(200, r#"{"choices":[{"message":{"content":"ok"}}]}"#)
        }
    });
    let provider = OpenAiProvider::new(&server.url, "m", "k", Duration::from_secs(5)).unwrap();
    let tasks = vec![GenerationTask::new("a", Role::Post, "an event").unwrap()];
    let options = RunOptions {
        parallelism: 1,
        retry: RetryPolicy::no_delay(3),
        fixed_timestamp: None,
    };
    let outcome = run_generation_with(&tasks, &provider, &GenerationConfig::default(), &options).unwrap();
    assert!(outcome.is_complete());
    assert_eq!(outcome.texts[0].text, "ok");
    assert_eq!(server.seen.lock().unwrap().len(), 2);
}
