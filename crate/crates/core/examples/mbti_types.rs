//! The sixteen types, their trait vectors and label parsing.
//!
//! cargo run --example mbti_types

use persona_probe::{Dimension, MbtiType};

fn main() {
    for t in MbtiType::ALL {
        let poles: Vec<String> = Dimension::ALL
            .iter()
            .map(|d| {
                format!(
                    "{}={}",
                    d.label(),
                    if t.pole(*d).is_first() { "first" } else { "second" }
                )
            })
            .collect();
        println!("{:>2}  {}  {}", t.index(), t, poles.join(" "));
    }

    for raw in ["infp", " ESTJ ", "XQZW", "INF"] {
        match raw.parse::<MbtiType>() {
            Ok(t) => println!("{raw:?} -> {t}"),
            Err(e) => println!("{raw:?} -> error: {e}"),
        }
    }
}
