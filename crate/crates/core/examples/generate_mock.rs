//! Run the generation pipeline against the deterministic mock provider,
//! including a provider that fails transiently.
//!
//! cargo run --example generate_mock

use std::sync::atomic::{AtomicUsize, Ordering};

use persona_probe::genpipe::{
    render_prompt, run_generation_with, GenerationConfig, GenerationTask, MockProvider, ProviderError,
    RetryPolicy, Role, RunOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tasks = vec![
        GenerationTask::new(
            "ev-1",
            Role::Post,
            "A city opened its first fully solar-powered library.",
        )?
        .with_topic("environment"),
        GenerationTask::new(
            "tw-1",
            Role::Comment,
            "Libraries are the best public spaces, change my mind.",
        )?,
        GenerationTask::new("tw-2", Role::Comment, "Anyone else still reading paper books?")?,
    ];
    for task in &tasks {
        let (system, user) = render_prompt(task)?;
        println!("[{}] system: {system}\n      user:   {user}", task.id);
    }

    let flaky_calls = AtomicUsize::new(0);
    let provider = MockProvider::new().fail_when(move |req| {
        // The first request about paper books times out once.
        (req.user.contains("paper books") && flaky_calls.fetch_add(1, Ordering::SeqCst) == 0)
            .then_some(ProviderError::Timeout)
    });
    let options = RunOptions {
        parallelism: 2,
        retry: RetryPolicy::no_delay(3),
        fixed_timestamp: None,
    };
    let outcome = run_generation_with(&tasks, &provider, &GenerationConfig::default(), &options)?;
    for text in &outcome.texts {
        println!("{}", serde_json::to_string(text)?);
    }
    println!(
        "{} generated, {} failed, {} provider calls",
        outcome.texts.len(),
        outcome.failures.len(),
        provider.calls()
    );
    Ok(())
}
