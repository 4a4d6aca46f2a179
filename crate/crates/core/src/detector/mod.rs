//! Personality detectors: the common [`Detector`] interface, a TF-IDF +
//! linear baseline that trains locally, and a client for a remote model.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocumentSet;
use crate::mbti::{Dimension, MbtiType, Pole, TraitVector};

mod features;
mod linear;
mod remote;

pub use features::{build_vocabulary, featurize, featurize_text, tokenize, FeatureVocabulary, SparseVector};
pub use linear::{
    logistic_loss_and_grad, predict, softmax_loss_and_grad, train_baseline, Hyperparameters, LinearModel,
    TrainingSummary, MODEL_FORMAT, MODEL_VERSION,
};
pub use remote::{remote_predict, RemoteDetector, RemoteRequest, RemoteResponse};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("vocabulary is empty; lower min_df or add training data")]
    EmptyVocabulary,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("remote detector timed out")]
    Timeout,
    #[error("remote detector transport error: {0}")]
    Transport(String),
    #[error("malformed detector response: {0}")]
    MalformedResponse(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// How a detector arrives at a 16-class prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorMode {
    /// Four independent binary classifiers, one per dimension.
    BinaryQuad,
    /// A single classifier over all sixteen types.
    Direct16,
}

impl fmt::Display for DetectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorMode::BinaryQuad => "binary-quad",
            DetectorMode::Direct16 => "direct-16",
        })
    }
}

impl std::str::FromStr for DetectorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary-quad" | "binaryquad" | "binary" => Ok(DetectorMode::BinaryQuad),
            "direct-16" | "direct16" | "16" | "sixteen" => Ok(DetectorMode::Direct16),
            other => Err(format!("unknown detector mode {other:?}")),
        }
    }
}

/// A detector's output for one document set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mbti: MbtiType,
    /// Probability of the first pole (E, N, T, J) per dimension.
    pub per_dimension_scores: [f64; 4],
    /// Class probabilities indexed like [`MbtiType::ALL`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_scores: Option<Vec<f64>>,
}

impl Prediction {
    /// Thresholds each score at 0.5; a score of exactly 0.5 picks the first pole.
    pub fn from_dimension_scores(scores: [f64; 4]) -> Self {
        Prediction {
            mbti: threshold_type(&scores),
            per_dimension_scores: scores,
            per_class_scores: None,
        }
    }

    /// Takes the argmax class (lowest index on ties) and marginalizes the
    /// class probabilities into per-dimension scores.
    pub fn from_class_scores(probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), MbtiType::COUNT, "expected 16 class scores");
        let mut best = 0;
        for (i, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = i;
            }
        }
        Prediction {
            mbti: MbtiType::ALL[best],
            per_dimension_scores: marginalize(&probs),
            per_class_scores: Some(probs),
        }
    }
}

pub(crate) fn threshold_type(scores: &[f64; 4]) -> MbtiType {
    MbtiType::from_traits(TraitVector(scores.map(|s| {
        if s >= 0.5 {
            Pole::First
        } else {
            Pole::Second
        }
    })))
}

/// Sums class probabilities sharing each dimension's first pole.
pub fn marginalize(probs: &[f64]) -> [f64; 4] {
    Dimension::ALL.map(|d| {
        MbtiType::ALL
            .iter()
            .zip(probs)
            .filter(|(t, _)| t.pole(d).is_first())
            .map(|(_, p)| p)
            .sum()
    })
}

/// Anything that maps a document set to a personality prediction.
pub trait Detector: Send + Sync {
    fn predict(&self, docs: &DocumentSet) -> Result<Prediction, DetectorError>;
}

impl<D: Detector + ?Sized> Detector for &D {
    fn predict(&self, docs: &DocumentSet) -> Result<Prediction, DetectorError> {
        (**self).predict(docs)
    }
}

impl<D: Detector + ?Sized> Detector for Box<D> {
    fn predict(&self, docs: &DocumentSet) -> Result<Prediction, DetectorError> {
        (**self).predict(docs)
    }
}

/// Always predicts the same type. Useful as a pipeline stub.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantDetector(pub MbtiType);

impl Detector for ConstantDetector {
    fn predict(&self, _docs: &DocumentSet) -> Result<Prediction, DetectorError> {
        let scores = Dimension::ALL.map(|d| if self.0.pole(d).is_first() { 1.0 } else { 0.0 });
        Ok(Prediction::from_dimension_scores(scores))
    }
}
