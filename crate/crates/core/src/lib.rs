//! Text-based personality evaluation for language models.
//!
//! Instead of handing a model a questionnaire, this crate has it write
//! free-form texts in a given role (Twitter-style posts or comments),
//! classifies bootstrap samples of those texts with an MBTI detector, and
//! checks whether the resulting type distributions agree across roles.
//!
//! The pieces, bottom-up:
//!
//! - [`mbti`]: the four trait dimensions and sixteen types.
//! - [`corpus`]: the `type,posts` labeled corpus, 81:9:10 splits, and
//!   line-delimited pools of generated text.
//! - [`detector`]: the [`detector::Detector`] trait, a TF-IDF + linear
//!   baseline with binary-per-dimension and direct 16-class modes, and an
//!   HTTP client for an externally hosted detector.
//! - [`metrics`]: per-dimension and 16-class metrics and the error
//!   accumulation between them.
//! - [`genpipe`]: prompt templates and a bounded-concurrency generation
//!   runner over any chat-completion provider.
//! - [`bootstrap`]: resampling, type distributions, the "Others" display
//!   merge and cross-role comparison.
//! - [`cli`]: the `persona-probe` command line.
//!
//! ```
//! use persona_probe::bootstrap::{assess, compare, BootstrapPlan};
//! use persona_probe::detector::ConstantDetector;
//! use persona_probe::genpipe::{run_generation, GenerationConfig, GenerationTask, MockProvider, Role};
//!
//! let tasks = vec![
//!     GenerationTask::new("p1", Role::Post, "A new stadium opens downtown")?,
//!     GenerationTask::new("c1", Role::Comment, "Can't believe the final score")?,
//! ];
//! let out = run_generation(&tasks, &MockProvider::new(), &GenerationConfig::default(), 2)?;
//! let plan = BootstrapPlan::new(10, 5, 42)?;
//! let detector = ConstantDetector("INFJ".parse()?);
//! let dist = assess(&out.texts, &detector, &plan)?;
//! let report = compare(&dist, &dist)?;
//! assert!(report.mode_match);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bootstrap;
pub mod cli;
pub mod corpus;
pub mod detector;
pub mod genpipe;
pub mod mbti;
pub mod metrics;
pub mod synthetic;

pub use mbti::{Dimension, MbtiType, Pole, TraitVector};
