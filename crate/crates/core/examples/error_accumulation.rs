//! How per-dimension accuracy compounds into exact 16-class accuracy.
//!
//! cargo run --example error_accumulation

use persona_probe::metrics::{expected_joint_accuracy, simulate_error_accumulation};

fn main() {
    println!("per-dim  expected  simulated  (10,000 labels)");
    for acc in [0.95, 0.9, 0.8, 0.7, 0.6] {
        let sim = simulate_error_accumulation([acc; 4], 10_000, 1);
        println!(
            "{acc:>7.2}  {:>8.4}  {:>9.4}",
            expected_joint_accuracy([acc; 4]),
            sim.sixteen_class_accuracy
        );
    }
}
