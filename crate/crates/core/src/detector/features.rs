use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::DetectorError;
use crate::corpus::{DocumentSet, LabeledRecord};

/// Lowercases, splits on runs of non-alphanumeric characters and drops
/// tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| tok.chars().nth(1).is_some())
        .map(str::to_lowercase)
        .collect()
}

fn concatenated(docs: &DocumentSet) -> String {
    docs.documents().join("\n")
}

/// Retained terms with their document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct FeatureVocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: usize,
}

impl From<VocabularyFile> for FeatureVocabulary {
    fn from(f: VocabularyFile) -> Self {
        let index = f.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        FeatureVocabulary {
            terms: f.terms,
            doc_freq: f.doc_freq,
            n_docs: f.n_docs,
            index,
        }
    }
}

impl From<FeatureVocabulary> for VocabularyFile {
    fn from(v: FeatureVocabulary) -> Self {
        VocabularyFile {
            terms: v.terms,
            doc_freq: v.doc_freq,
            n_docs: v.n_docs,
        }
    }
}

impl FeatureVocabulary {
    /// Builds from raw training texts, one text per training document.
    /// Keeps terms with df >= `min_df`, then the `max_features` highest-df
    /// terms, ties broken alphabetically.
    pub fn from_texts<'a, I>(texts: I, min_df: u32, max_features: usize) -> Result<Self, DetectorError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        let mut n_docs = 0;
        for text in texts {
            n_docs += 1;
            let unique: HashSet<String> = tokenize(text).into_iter().collect();
            for term in unique {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(DetectorError::EmptyTrainSet);
        }
        let mut kept: Vec<(String, u32)> = df.into_iter().filter(|(_, d)| *d >= min_df).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(max_features);

        let (terms, doc_freq): (Vec<String>, Vec<u32>) = kept.into_iter().unzip();
        Ok(VocabularyFile {
            terms,
            doc_freq,
            n_docs,
        }
        .into())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    /// Smoothed inverse document frequency, `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = self.n_docs as f64;
        let df = f64::from(self.doc_freq[index]);
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }
}

/// Each training record's concatenated documents count as one document.
pub fn build_vocabulary(
    train: &[LabeledRecord],
    min_df: u32,
    max_features: usize,
) -> Result<FeatureVocabulary, DetectorError> {
    let texts: Vec<String> = train.iter().map(|r| concatenated(&r.docs)).collect();
    FeatureVocabulary::from_texts(texts.iter().map(String::as_str), min_df, max_features)
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// TF-IDF vector of a raw text, L2-normalized. Unknown terms are ignored.
pub fn featurize_text(vocab: &FeatureVocabulary, text: &str) -> SparseVector {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for token in tokenize(text) {
        if let Some(i) = vocab.index_of(&token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let mut v = SparseVector {
        indices: Vec::with_capacity(counts.len()),
        values: Vec::with_capacity(counts.len()),
    };
    for (i, tf) in counts {
        v.indices.push(i as u32);
        v.values.push(f64::from(tf) * vocab.idf(i));
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.values.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Featurizes the concatenation of a document set.
pub fn featurize(vocab: &FeatureVocabulary, docs: &DocumentSet) -> SparseVector {
    featurize_text(vocab, &concatenated(docs))
}
