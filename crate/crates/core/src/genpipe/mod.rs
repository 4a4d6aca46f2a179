//! Prompting pipeline: renders the post/comment templates, drives a
//! chat-completion provider and records generated texts with provenance.

use std::fmt;
use std::io;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

mod provider;
mod runner;
mod sources;

pub use provider::{ChatProvider, ChatRequest, MockProvider, OpenAiProvider, ProviderError};
pub use runner::{
    run_generation, run_generation_with, FailureKind, GenerationFailure, GenerationOutcome, RetryPolicy,
    RunOptions,
};
pub use sources::{load_content_sources, read_source_records, topic_histogram, SourceRecord};

/// Number of post tasks in a full-size run.
pub const DEFAULT_POST_TASKS: usize = 4500;
/// Number of comment tasks in a full-size run.
pub const DEFAULT_COMMENT_TASKS: usize = 5000;

pub const POST_SYSTEM_PROMPT: &str = "Generate a Twitter post";
pub const POST_USER_PREFIX: &str = "As a user on Twitter, write a tweet on the following contents: ";
pub const COMMENT_SYSTEM_PROMPT: &str = "Generate a Twitter comment";
pub const COMMENT_USER_PREFIX: &str = "As a user on Twitter, write a tweet to comment on this Tweet: ";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("task content is empty")]
    EmptyContent,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("duplicate task id {0:?}")]
    DuplicateTaskId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {cause}")]
    Schema { path: String, line: u64, cause: String },
}

/// Which kind of text the model is asked to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Post,
    Comment,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Post => "post",
            Role::Comment => "comment",
        }
    }

    pub fn system_prompt(self) -> &'static str {
        match self {
            Role::Post => POST_SYSTEM_PROMPT,
            Role::Comment => COMMENT_SYSTEM_PROMPT,
        }
    }

    pub fn user_prefix(self) -> &'static str {
        match self {
            Role::Post => POST_USER_PREFIX,
            Role::Comment => COMMENT_USER_PREFIX,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.2,
            top_p: 0.95,
            max_tokens: 200,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GenError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GenError::Config(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_tokens == 0 {
            return Err(GenError::Config("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTask {
    pub id: String,
    pub role: Role,
    /// Summarized event text for posts, the source tweet for comments.
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl GenerationTask {
    pub fn new(id: impl Into<String>, role: Role, content: impl Into<String>) -> Result<Self, GenError> {
        let content = content.into();
        if content.trim().is_empty() {
            return Err(GenError::EmptyContent);
        }
        Ok(GenerationTask {
            id: id.into(),
            role,
            content,
            topic: None,
        })
    }

    pub fn with_topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }
}

/// One generated text. This is also the line schema of pool files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedText {
    pub id: String,
    pub role: Role,
    /// Hash of the originating task content.
    pub source: String,
    pub model: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

/// Hex SHA-256 of the content, truncated to 16 characters.
pub fn content_hash(content: &str) -> String {
    let digest = Sha256::digest(content.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Returns `(system_message, user_message)` for a task. Content is appended
/// verbatim after the template prefix.
pub fn render_prompt(task: &GenerationTask) -> Result<(String, String), GenError> {
    if task.content.trim().is_empty() {
        return Err(GenError::EmptyContent);
    }
    Ok((
        task.role.system_prompt().to_string(),
        format!("{}{}", task.role.user_prefix(), task.content),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(role: Role, content: &str) -> GenerationTask {
        GenerationTask {
            id: "t".into(),
            role,
            content: content.into(),
            topic: None,
        }
    }

    #[test]
    fn post_prompt_is_byte_exact() {
        let (system, user) = render_prompt(&task(Role::Post, "X")).unwrap();
        assert_eq!(system, "Generate a Twitter post");
        assert_eq!(
            user,
            "As a user on Twitter, write a tweet on the following contents: X"
        );
    }

    #[test]
    fn comment_prompt_is_byte_exact() {
        let (system, user) = render_prompt(&task(Role::Comment, "Y")).unwrap();
        assert_eq!(system, "Generate a Twitter comment");
        assert_eq!(
            user,
            "As a user on Twitter, write a tweet to comment on this Tweet: Y"
        );
    }

    #[test]
    fn content_is_not_reformatted() {
        let (_, user) = render_prompt(&task(Role::Post, "  two\nlines  ")).unwrap();
        assert!(user.ends_with("contents:   two\nlines  "));
    }

    #[test]
    fn blank_content_is_rejected() {
        assert!(matches!(
            render_prompt(&task(Role::Post, "   ")),
            Err(GenError::EmptyContent)
        ));
        assert!(GenerationTask::new("a", Role::Comment, "\n").is_err());
    }

    #[test]
    fn default_sampling() {
        let cfg = GenerationConfig::default();
        assert_eq!((cfg.temperature, cfg.top_p, cfg.max_tokens), (0.2, 0.95, 200));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn invalid_sampling_is_config_error() {
        for cfg in [
            GenerationConfig {
                temperature: -0.1,
                ..Default::default()
            },
            GenerationConfig {
                top_p: 0.0,
                ..Default::default()
            },
            GenerationConfig {
                top_p: 1.5,
                ..Default::default()
            },
            GenerationConfig {
                max_tokens: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(GenError::Config(_))));
        }
    }

    #[test]
    fn role_serializes_lowercase() {
        assert_eq!(serde_json::to_string(&Role::Comment).unwrap(), "\"comment\"");
        assert!(serde_json::from_str::<Role>("\"reply\"").is_err());
    }
}
