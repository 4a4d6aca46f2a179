//! Load a Kaggle-style corpus (or a synthetic one) and split it 81:9:10.
//!
//! cargo run --example corpus_split -- [path/to/mbti_1.csv] [seed]

use std::env;

use persona_probe::corpus::{load_corpus, split_corpus, split_sizes};
use persona_probe::synthetic::separable_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let records = match args.next() {
        Some(path) => load_corpus(path)?,
        None => separable_corpus(10, 1),
    };
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let split = split_corpus(&records, seed)?;
    let (train, eval, test) = split.sizes();
    println!(
        "{} records -> train {train}, eval {eval}, test {test} (seed {seed})",
        records.len()
    );
    println!(
        "first train record: {} ({} posts)",
        split.train[0].label,
        split.train[0].docs.len()
    );

    // The sizes depend only on the record count.
    println!("8675 records would split as {:?}", split_sizes(8675));
    Ok(())
}
