//! Compare a posts distribution with a comments distribution.
//!
//! cargo run --example compare_roles

use persona_probe::bootstrap::{compare, PersonalityDistribution};
use persona_probe::MbtiType;

fn distribution(counts: &[(&str, usize)]) -> PersonalityDistribution {
    PersonalityDistribution::from_predictions(
        counts
            .iter()
            .flat_map(|(code, n)| std::iter::repeat_n(code.parse::<MbtiType>().unwrap(), *n)),
    )
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let posts = distribution(&[("ESTJ", 58), ("ISTJ", 21), ("ENTJ", 12), ("ESFJ", 6), ("INTJ", 3)]);
    let comments = distribution(&[
        ("INFP", 47),
        ("ENFP", 25),
        ("ESTJ", 15),
        ("ISFP", 10),
        ("ISTJ", 3),
    ]);
    let similar = distribution(&[("ESTJ", 55), ("ISTJ", 25), ("ENTJ", 10), ("ESFJ", 7), ("INTJ", 3)]);

    print!("{}", compare(&posts, &comments)?.render("posts", "comments"));
    println!();
    print!("{}", compare(&posts, &similar)?.render("posts", "posts (rerun)"));
    Ok(())
}
