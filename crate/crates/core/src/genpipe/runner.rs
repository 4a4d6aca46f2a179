use std::collections::HashSet;
use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::provider::{ChatProvider, ChatRequest, ProviderError};
use super::{content_hash, render_prompt, GenError, GeneratedText, GenerationConfig, GenerationTask, Role};

/// Exponential backoff: `base_delay * 2^retry`, capped at `max_delay`, with
/// up to 25% added jitter when enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
            max_delay: Duration::from_secs(60),
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
            jitter: false,
        }
    }

    pub fn delay_for(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry);
        let delay = self.base_delay.saturating_mul(factor).min(self.max_delay);
        if self.jitter && !delay.is_zero() {
            delay.mul_f64(1.0 + rand::thread_rng().gen_range(0.0..0.25))
        } else {
            delay
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Maximum number of requests in flight.
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Stamp every output with this time instead of the wall clock.
    pub fixed_timestamp: Option<DateTime<Utc>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            parallelism: 4,
            retry: RetryPolicy::default(),
            fixed_timestamp: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Transport,
    Timeout,
    RateLimited,
    Rejected,
    EmptyCompletion,
}

impl From<&ProviderError> for FailureKind {
    fn from(err: &ProviderError) -> Self {
        match err {
            ProviderError::Transport(_) => FailureKind::Transport,
            ProviderError::Timeout => FailureKind::Timeout,
            ProviderError::RateLimited { .. } => FailureKind::RateLimited,
            ProviderError::Rejected { .. } => FailureKind::Rejected,
            ProviderError::EmptyCompletion => FailureKind::EmptyCompletion,
        }
    }
}

/// A task that produced no text after all attempts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub id: String,
    pub role: Role,
    pub kind: FailureKind,
    pub message: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    /// Successful generations, in task order.
    pub texts: Vec<GeneratedText>,
    /// Failed tasks, in task order.
    pub failures: Vec<GenerationFailure>,
}

impl GenerationOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every task with default retries and the wall clock.
pub fn run_generation(
    tasks: &[GenerationTask],
    provider: &dyn ChatProvider,
    config: &GenerationConfig,
    parallelism: usize,
) -> Result<GenerationOutcome, GenError> {
    let options = RunOptions {
        parallelism,
        ..RunOptions::default()
    };
    run_generation_with(tasks, provider, config, &options)
}

/// Runs every task, at most `options.parallelism` at a time. Per-task
/// provider errors are recorded in the outcome; only invalid configuration
/// or task lists abort.
pub fn run_generation_with(
    tasks: &[GenerationTask],
    provider: &dyn ChatProvider,
    config: &GenerationConfig,
    options: &RunOptions,
) -> Result<GenerationOutcome, GenError> {
    config.validate()?;
    if options.parallelism == 0 {
        return Err(GenError::Config("parallelism must be positive".into()));
    }
    let mut seen = HashSet::new();
    let mut prompts = Vec::with_capacity(tasks.len());
    for task in tasks {
        if !seen.insert(task.id.as_str()) {
            return Err(GenError::DuplicateTaskId(task.id.clone()));
        }
        prompts.push(render_prompt(task)?);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| GenError::Config(e.to_string()))?;

    let results: Vec<Result<GeneratedText, GenerationFailure>> = pool.install(|| {
        tasks
            .par_iter()
            .zip(prompts.into_par_iter())
            .map(|(task, (system, user))| {
                let request = ChatRequest {
                    system,
                    user,
                    temperature: config.temperature,
                    top_p: config.top_p,
                    max_tokens: config.max_tokens,
                };
                run_one(task, &request, provider, options)
            })
            .collect()
    });

    let mut outcome = GenerationOutcome::default();
    for result in results {
        match result {
            Ok(text) => outcome.texts.push(text),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    Ok(outcome)
}

fn run_one(
    task: &GenerationTask,
    request: &ChatRequest,
    provider: &dyn ChatProvider,
    options: &RunOptions,
) -> Result<GeneratedText, GenerationFailure> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match provider.complete(request) {
            Ok(text) if !text.trim().is_empty() => {
                return Ok(GeneratedText {
                    id: task.id.clone(),
                    role: task.role,
                    source: content_hash(&task.content),
                    model: provider.model().to_string(),
                    text,
                    created_at: options.fixed_timestamp.unwrap_or_else(Utc::now),
                });
            }
            Ok(_) => return Err(failure(task, &ProviderError::EmptyCompletion, attempts)),
            Err(err) => {
                let retry = attempts - 1;
                if !err.is_retryable() || retry >= options.retry.max_retries {
                    return Err(failure(task, &err, attempts));
                }
                let delay = match &err {
                    ProviderError::RateLimited {
                        retry_after: Some(after),
                    } => (*after).min(options.retry.max_delay),
                    _ => options.retry.delay_for(retry),
                };
                if !delay.is_zero() {
                    thread::sleep(delay);
                }
            }
        }
    }
}

fn failure(task: &GenerationTask, err: &ProviderError, attempts: u32) -> GenerationFailure {
    GenerationFailure {
        id: task.id.clone(),
        role: task.role,
        kind: err.into(),
        message: err.to_string(),
        attempts,
    }
}
