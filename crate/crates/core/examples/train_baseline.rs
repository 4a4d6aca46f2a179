//! Train the TF-IDF + linear baseline in both modes and report on a held-out
//! split.
//!
//! cargo run --release --example train_baseline -- [path/to/mbti_1.csv]

use std::env;

use persona_probe::corpus::{load_corpus, split_corpus};
use persona_probe::detector::{train_baseline, DetectorMode, Hyperparameters};
use persona_probe::metrics::{evaluation_report, render_dimension_table, render_summary_table};
use persona_probe::synthetic::separable_corpus;
use persona_probe::MbtiType;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = match env::args().nth(1) {
        Some(path) => load_corpus(path)?,
        None => separable_corpus(8, 3),
    };
    let split = split_corpus(&records, 7)?;
    let hp = Hyperparameters::default();

    let mut rows = Vec::new();
    for mode in [DetectorMode::BinaryQuad, DetectorMode::Direct16] {
        let model = train_baseline(&split.train, mode, &hp)?;
        let labels: Vec<MbtiType> = split.test.iter().map(|r| r.label).collect();
        let preds: Vec<MbtiType> = split.test.iter().map(|r| model.predict(&r.docs).mbti).collect();
        let report = evaluation_report(&labels, &preds)?;
        println!(
            "{mode}: {} terms, loss {:.4} -> {:.4}",
            model.vocabulary.len(),
            model.summary.initial_loss,
            model.summary.final_loss
        );
        print!("{}", render_dimension_table(&report));
        rows.push((
            mode.to_string(),
            report.headline(),
            report.overall_16.unwrap_or_default(),
        ));
    }

    let averaged: Vec<_> = rows.iter().map(|(m, h, _)| (m.as_str(), *h)).collect();
    let exact: Vec<_> = rows.iter().map(|(m, _, o)| (m.as_str(), *o)).collect();
    println!("\nAverage over dimensions\n{}", render_summary_table(&averaged));
    println!("16-class\n{}", render_summary_table(&exact));
    Ok(())
}
