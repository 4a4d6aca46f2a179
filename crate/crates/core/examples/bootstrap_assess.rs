//! Bootstrap assessment of a generated pool: 100 sets of 50 texts, one
//! prediction per set, shown with small types merged into Others.
//!
//! cargo run --release --example bootstrap_assess

use persona_probe::bootstrap::{assess, merge_others, mode_types, BootstrapPlan};
use persona_probe::detector::{train_baseline, DetectorMode, Hyperparameters};
use persona_probe::genpipe::{GeneratedText, Role};
use persona_probe::synthetic::{marker_token, separable_corpus};
use persona_probe::MbtiType;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = train_baseline(
        &separable_corpus(4, 1),
        DetectorMode::BinaryQuad,
        &Hyperparameters::default(),
    )?;

    // A pool mixing INFJ, ENTP and ISTP texts.
    let mix = [("INFJ", 40), ("ENTP", 35), ("ISTP", 25)];
    let mut pool = Vec::new();
    for (code, n) in mix {
        let t: MbtiType = code.parse()?;
        for i in 0..n {
            pool.push(GeneratedText {
                id: format!("{code}-{i}"),
                role: Role::Post,
                source: String::new(),
                model: "example".into(),
                text: format!("{} thoughts on today {i}", marker_token(t)),
                created_at: chrono::Utc::now(),
            });
        }
    }

    let plan = BootstrapPlan::standard(2024);
    let dist = assess(&pool, &model, &plan)?;
    let (mode, second) = mode_types(&dist)?;
    // Each set mixes types, so per-dimension votes can land on a blend.
    let second = second.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
    println!("mode {mode}, runner-up {second}");
    print!("{}", merge_others(&dist, 3).to_csv());
    Ok(())
}
