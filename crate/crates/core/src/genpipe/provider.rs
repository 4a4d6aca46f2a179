use std::env;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::{content_hash, GenError, Role, COMMENT_SYSTEM_PROMPT};

/// What a provider receives for one generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("request rejected ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("provider returned no text")]
    EmptyCompletion,
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Transport(_) | ProviderError::Timeout | ProviderError::RateLimited { .. }
        )
    }
}

/// A chat-completion backend. Implementations are shared across worker
/// threads.
pub trait ChatProvider: Send + Sync {
    /// Model name recorded in each generated text.
    fn model(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

type FailureHook = dyn Fn(&ChatRequest) -> Option<ProviderError> + Send + Sync;

/// Deterministic in-process provider. Replies `MOCK:<role>:<content hash>`.
pub struct MockProvider {
    model: String,
    latency: Duration,
    failure: Option<Box<FailureHook>>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    calls: AtomicUsize,
}

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider::new()
    }
}

impl MockProvider {
    pub fn new() -> Self {
        MockProvider {
            model: "mock".into(),
            latency: Duration::ZERO,
            failure: None,
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Sleeps this long inside every call.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Consulted before each reply; returning `Some` fails that call.
    pub fn fail_when<F>(mut self, hook: F) -> Self
    where
        F: Fn(&ChatRequest) -> Option<ProviderError> + Send + Sync + 'static,
    {
        self.failure = Some(Box::new(hook));
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of concurrent calls observed.
    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }

    /// The reply the mock gives for a role and task content.
    pub fn expected_reply(role: Role, content: &str) -> String {
        format!("MOCK:{}:{}", role, content_hash(content))
    }
}

impl ChatProvider for MockProvider {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.latency.is_zero() {
            thread::sleep(self.latency);
        }
        let result = match self.failure.as_ref().and_then(|hook| hook(request)) {
            Some(err) => Err(err),
            None => {
                let role = if request.system == COMMENT_SYSTEM_PROMPT {
                    Role::Comment
                } else {
                    Role::Post
                };
                let content = request
                    .user
                    .strip_prefix(role.user_prefix())
                    .unwrap_or(&request.user);
                Ok(MockProvider::expected_reply(role, content))
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn model(&self) -> &str {
        (**self).model()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
pub struct OpenAiProvider {
    endpoint: String,
    model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Deserialize)]
struct CompletionMessage {
    content: Option<String>,
}

impl OpenAiProvider {
    pub fn new(
        base_url: &str,
        model: impl Into<String>,
        api_key: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, GenError> {
        let base = base_url.trim_end_matches('/');
        if base.is_empty() {
            return Err(GenError::Config("provider base URL is empty".into()));
        }
        let model = model.into();
        if model.trim().is_empty() {
            return Err(GenError::Config("provider model name is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GenError::Config(e.to_string()))?;
        Ok(OpenAiProvider {
            endpoint: format!("{base}/chat/completions"),
            model,
            api_key: api_key.into(),
            client,
        })
    }

    /// Reads the API key from `key_var`. A missing or empty variable is a
    /// configuration error, raised before any request is made.
    pub fn from_env(
        base_url: &str,
        model: impl Into<String>,
        key_var: &str,
        timeout: Duration,
    ) -> Result<Self, GenError> {
        let key = env::var(key_var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GenError::Config(format!("environment variable {key_var} is not set")))?;
        OpenAiProvider::new(base_url, model, key, timeout)
    }
}

impl ChatProvider for OpenAiProvider {
    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_tokens,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout
                } else {
                    ProviderError::Transport(e.to_string())
                }
            })?;

        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|secs| secs.is_finite() && *secs >= 0.0)
                .map(Duration::from_secs_f64);
            return Err(ProviderError::RateLimited { retry_after });
        }
        if status.is_server_error() {
            return Err(ProviderError::Transport(format!("server returned {status}")));
        }
        if !status.is_success() {
            let message = response.text().unwrap_or_default();
            return Err(ProviderError::Rejected {
                status: status.as_u16(),
                message,
            });
        }
        let parsed: CompletionResponse = response.json().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(format!("bad response body: {e}"))
            }
        })?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .map(|text| text.trim().to_string())
            .filter(|text| !text.is_empty())
            .ok_or(ProviderError::EmptyCompletion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(role: Role, content: &str) -> ChatRequest {
        ChatRequest {
            system: role.system_prompt().into(),
            user: format!("{}{}", role.user_prefix(), content),
            temperature: 0.2,
            top_p: 0.95,
            max_tokens: 200,
        }
    }

    #[test]
    fn mock_echoes_role_and_hash() {
        let mock = MockProvider::new();
        let reply = mock.complete(&request(Role::Comment, "hello")).unwrap();
        assert_eq!(reply, format!("MOCK:comment:{}", content_hash("hello")));
        assert_eq!(mock.calls(), 1);
    }

    #[test]
    fn mock_failure_hook() {
        let mock = MockProvider::new().fail_when(|r| {
            r.user.contains("bad").then_some(ProviderError::Rejected {
                status: 400,
                message: "filtered".into(),
            })
        });
        assert!(mock.complete(&request(Role::Post, "bad")).is_err());
        assert!(mock.complete(&request(Role::Post, "good")).is_ok());
    }

    #[test]
    fn missing_api_key_is_config_error() {
        let err = OpenAiProvider::from_env(
            "http://127.0.0.1:9",
            "gpt",
            "PERSONA_PROBE_TEST_UNSET_KEY",
            Duration::from_secs(1),
        );
        assert!(matches!(err, Err(GenError::Config(_))));
    }

    #[test]
    fn retryable_classification() {
        assert!(ProviderError::Timeout.is_retryable());
        assert!(ProviderError::RateLimited { retry_after: None }.is_retryable());
        assert!(ProviderError::Transport("x".into()).is_retryable());
        assert!(!ProviderError::EmptyCompletion.is_retryable());
        assert!(!ProviderError::Rejected {
            status: 400,
            message: String::new()
        }
        .is_retryable());
    }
}
