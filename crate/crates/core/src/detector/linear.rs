use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{build_vocabulary, featurize, FeatureVocabulary, SparseVector};
use super::{Detector, DetectorError, DetectorMode, Prediction};
use crate::corpus::{DocumentSet, LabeledRecord};
use crate::mbti::{Dimension, MbtiType};

pub const MODEL_FORMAT: &str = "persona-probe/linear-model";
pub const MODEL_VERSION: u32 = 1;

/// Settings for the TF-IDF baseline and its gradient-descent trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    /// L2 penalty on weights (biases are not penalized).
    pub l2: f64,
    pub epochs: usize,
    pub min_df: u32,
    pub max_features: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 0.5,
            l2: 1e-4,
            epochs: 300,
            min_df: 2,
            max_features: 20_000,
        }
    }
}

impl Hyperparameters {
    fn validate(&self) -> Result<(), DetectorError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(DetectorError::InvalidHyperparameters(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(DetectorError::InvalidHyperparameters(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if self.max_features == 0 {
            return Err(DetectorError::InvalidHyperparameters(
                "max_features must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean regularized training loss before and after optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format: String,
    pub version: u32,
    pub mode: DetectorMode,
    pub vocabulary: FeatureVocabulary,
    /// One row per output: four dimensions (E, N, T, J as positive class)
    /// or sixteen classes in [`MbtiType::ALL`] order.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub training_config: Hyperparameters,
    pub summary: TrainingSummary,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn l2_term(l2: f64, w: &[f64]) -> f64 {
    0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Mean logistic loss plus `l2/2 * |w|^2`, and its gradient with respect to
/// `(w, b)`. Labels are 1.0 for the positive class and 0.0 otherwise.
pub fn logistic_loss_and_grad(
    xs: &[SparseVector],
    ys: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = x.dot(w) + b;
        // -[y ln s(z) + (1-y) ln(1 - s(z))] = softplus(z) - y z
        loss += softplus(z) - y * z;
        let r = (sigmoid(z) - y) / n;
        for (i, v) in x.iter() {
            grad_w[i] += r * v;
        }
        grad_b += r;
    }
    loss = loss / n + l2_term(l2, w);
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g += l2 * wi;
    }
    (loss, grad_w, grad_b)
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

/// Mean multinomial cross-entropy plus `l2/2 * |W|^2`, and its gradient with
/// respect to the weight rows and biases.
pub fn softmax_loss_and_grad(
    xs: &[SparseVector],
    ys: &[usize],
    w: &[Vec<f64>],
    b: &[f64],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n = xs.len() as f64;
    let k = w.len();
    let mut loss = 0.0;
    let mut grad_w: Vec<Vec<f64>> = w.iter().map(|row| vec![0.0; row.len()]).collect();
    let mut grad_b = vec![0.0; k];
    let mut logits = vec![0.0; k];
    for (x, &y) in xs.iter().zip(ys) {
        for c in 0..k {
            logits[c] = x.dot(&w[c]) + b[c];
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += log_sum - logits[y];
        softmax_in_place(&mut logits);
        for c in 0..k {
            let r = (logits[c] - if c == y { 1.0 } else { 0.0 }) / n;
            for (i, v) in x.iter() {
                grad_w[c][i] += r * v;
            }
            grad_b[c] += r;
        }
    }
    loss /= n;
    for (c, row) in w.iter().enumerate() {
        loss += l2_term(l2, row);
        for (g, wi) in grad_w[c].iter_mut().zip(row) {
            *g += l2 * wi;
        }
    }
    (loss, grad_w, grad_b)
}

fn descend(w: &mut [f64], grad: &[f64], lr: f64) {
    for (wi, gi) in w.iter_mut().zip(grad) {
        *wi -= lr * gi;
    }
}

fn check_finite(loss: f64, epoch: usize) -> Result<f64, DetectorError> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(DetectorError::NonFiniteLoss { epoch })
    }
}

/// Full-batch gradient descent from zero weights. Returns the model with
/// initial and final mean losses recorded.
pub fn train_baseline(
    train: &[LabeledRecord],
    mode: DetectorMode,
    hp: &Hyperparameters,
) -> Result<LinearModel, DetectorError> {
    hp.validate()?;
    if train.is_empty() {
        return Err(DetectorError::EmptyTrainSet);
    }
    let vocabulary = build_vocabulary(train, hp.min_df, hp.max_features)?;
    if vocabulary.is_empty() {
        return Err(DetectorError::EmptyVocabulary);
    }
    let xs: Vec<SparseVector> = train.iter().map(|r| featurize(&vocabulary, &r.docs)).collect();
    let v = vocabulary.len();

    let (weights, biases, summary) = match mode {
        DetectorMode::BinaryQuad => {
            let mut weights = Vec::with_capacity(4);
            let mut biases = Vec::with_capacity(4);
            let mut initial = 0.0;
            let mut last = 0.0;
            for dim in Dimension::ALL {
                let ys: Vec<f64> = train
                    .iter()
                    .map(|r| if r.label.pole(dim).is_first() { 1.0 } else { 0.0 })
                    .collect();
                let mut w = vec![0.0; v];
                let mut b = 0.0;
                for epoch in 0..hp.epochs {
                    let (loss, gw, gb) = logistic_loss_and_grad(&xs, &ys, &w, b, hp.l2);
                    let loss = check_finite(loss, epoch)?;
                    if epoch == 0 {
                        initial += loss / 4.0;
                    }
                    descend(&mut w, &gw, hp.learning_rate);
                    b -= hp.learning_rate * gb;
                }
                let (loss, _, _) = logistic_loss_and_grad(&xs, &ys, &w, b, hp.l2);
                let loss = check_finite(loss, hp.epochs)?;
                if hp.epochs == 0 {
                    initial += loss / 4.0;
                }
                last += loss / 4.0;
                weights.push(w);
                biases.push(b);
            }
            (
                weights,
                biases,
                TrainingSummary {
                    initial_loss: initial,
                    final_loss: last,
                    epochs: hp.epochs,
                },
            )
        }
        DetectorMode::Direct16 => {
            let ys: Vec<usize> = train.iter().map(|r| r.label.index()).collect();
            let mut w = vec![vec![0.0; v]; MbtiType::COUNT];
            let mut b = vec![0.0; MbtiType::COUNT];
            let mut initial = None;
            for epoch in 0..hp.epochs {
                let (loss, gw, gb) = softmax_loss_and_grad(&xs, &ys, &w, &b, hp.l2);
                let loss = check_finite(loss, epoch)?;
                initial.get_or_insert(loss);
                for (row, g) in w.iter_mut().zip(&gw) {
                    descend(row, g, hp.learning_rate);
                }
                descend(&mut b, &gb, hp.learning_rate);
            }
            let (loss, _, _) = softmax_loss_and_grad(&xs, &ys, &w, &b, hp.l2);
            let loss = check_finite(loss, hp.epochs)?;
            (
                w,
                b,
                TrainingSummary {
                    initial_loss: initial.unwrap_or(loss),
                    final_loss: loss,
                    epochs: hp.epochs,
                },
            )
        }
    };

    Ok(LinearModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        mode,
        vocabulary,
        weights,
        biases,
        training_config: hp.clone(),
        summary,
    })
}

/// Scores a document set with a trained model.
pub fn predict(model: &LinearModel, docs: &DocumentSet) -> Prediction {
    let x = featurize(&model.vocabulary, docs);
    let logits: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.biases)
        .map(|(w, b)| x.dot(w) + b)
        .collect();
    match model.mode {
        DetectorMode::BinaryQuad => {
            let scores = [0, 1, 2, 3].map(|d| sigmoid(logits[d]));
            Prediction::from_dimension_scores(scores)
        }
        DetectorMode::Direct16 => {
            let mut probs = logits;
            softmax_in_place(&mut probs);
            Prediction::from_class_scores(probs)
        }
    }
}

impl LinearModel {
    pub fn predict(&self, docs: &DocumentSet) -> Prediction {
        predict(self, docs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DetectorError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| DetectorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::to_writer(BufWriter::new(file), self).map_err(|e| DetectorError::ModelFile(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DetectorError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DetectorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let model: LinearModel = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| DetectorError::ModelFile(e.to_string()))?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), DetectorError> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(DetectorError::ModelFile(format!(
                "unsupported model format {:?} version {}",
                self.format, self.version
            )));
        }
        let outputs = match self.mode {
            DetectorMode::BinaryQuad => 4,
            DetectorMode::Direct16 => MbtiType::COUNT,
        };
        let v = self.vocabulary.len();
        if self.weights.len() != outputs
            || self.biases.len() != outputs
            || self.weights.iter().any(|row| row.len() != v)
        {
            return Err(DetectorError::ModelFile(
                "weight shape does not match mode and vocabulary".into(),
            ));
        }
        Ok(())
    }
}

impl Detector for LinearModel {
    fn predict(&self, docs: &DocumentSet) -> Result<Prediction, DetectorError> {
        Ok(predict(self, docs))
    }
}
