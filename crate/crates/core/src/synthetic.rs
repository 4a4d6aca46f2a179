//! Synthetic linearly separable corpora: every text from a given type
//! carries a marker token unique to that type, surrounded by shared filler.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DocumentSet, LabeledRecord};
use crate::mbti::MbtiType;

const FILLER: &[&str] = &[
    "today",
    "really",
    "think",
    "people",
    "going",
    "something",
    "coffee",
    "weekend",
    "music",
    "work",
    "friends",
    "game",
    "movie",
    "honestly",
    "maybe",
    "learned",
    "news",
    "morning",
];

/// The token that identifies `t`, e.g. `infpsignal`.
pub fn marker_token(t: MbtiType) -> String {
    format!("{}signal", t.code().to_lowercase())
}

/// One short text: a few filler words with the marker inserted at a random spot.
pub fn marker_text(t: MbtiType, rng: &mut impl Rng) -> String {
    let n = rng.gen_range(3..8);
    let mut words: Vec<String> = (0..n)
        .map(|_| FILLER.choose(rng).expect("filler is nonempty").to_string())
        .collect();
    let at = rng.gen_range(0..=words.len());
    words.insert(at, marker_token(t));
    words.join(" ")
}

/// Ten marker texts for `t`.
pub fn marker_document_set(t: MbtiType, seed: u64) -> DocumentSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t.index() as u64) << 32);
    DocumentSet::new((0..10).map(|_| marker_text(t, &mut rng))).expect("marker texts are nonempty")
}

/// `per_type` records for each of the sixteen types, grouped by type.
pub fn separable_corpus(per_type: usize, seed: u64) -> Vec<LabeledRecord> {
    let mut out = Vec::with_capacity(per_type * MbtiType::COUNT);
    for t in MbtiType::ALL {
        for k in 0..per_type {
            let docs = marker_document_set(t, seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            out.push(LabeledRecord::with_content_id(t, docs));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::tokenize;

    #[test]
    fn every_text_carries_its_marker() {
        for r in separable_corpus(2, 1) {
            let marker = marker_token(r.label);
            for doc in r.docs.documents() {
                assert!(tokenize(doc).contains(&marker));
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(separable_corpus(2, 5), separable_corpus(2, 5));
        assert_ne!(separable_corpus(2, 5), separable_corpus(2, 6));
    }
}
