//! Classification metrics in two views: averaged over the four trait
//! dimensions, and exact-match over the sixteen types. The gap between them
//! is the error accumulation of per-dimension predictors.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mbti::{Dimension, MbtiType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("labels ({labels}) and predictions ({preds}) differ in length")]
    LengthMismatch { labels: usize, preds: usize },
    #[error("no samples to evaluate")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl BinaryConfusion {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.true_pos += 1,
            (false, true) => self.false_pos += 1,
            (true, false) => self.false_neg += 1,
            (false, false) => self.true_neg += 1,
        }
    }
}

/// The four headline numbers, as fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl Scores {
    /// Element-wise arithmetic mean.
    pub fn mean(all: &[Scores]) -> Scores {
        let n = all.len() as f64;
        let sum = all.iter().fold(Scores::default(), |acc, s| Scores {
            accuracy: acc.accuracy + s.accuracy,
            f1: acc.f1 + s.f1,
            precision: acc.precision + s.precision,
            recall: acc.recall + s.recall,
        });
        Scores {
            accuracy: sum.accuracy / n,
            f1: sum.f1 / n,
            precision: sum.precision / n,
            recall: sum.recall / n,
        }
    }
}

/// `a / b`, with `0 / 0 = 0`.
fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Accuracy, precision, recall and F1 of a binary confusion matrix. Any
/// 0/0 resolves to 0.
pub fn binary_metrics(c: &BinaryConfusion) -> Scores {
    let precision = ratio(c.true_pos, c.true_pos + c.false_pos);
    let recall = ratio(c.true_pos, c.true_pos + c.false_neg);
    Scores {
        accuracy: ratio(c.true_pos + c.true_neg, c.total()),
        f1: harmonic(precision, recall),
        precision,
        recall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionScores {
    pub dimension: Dimension,
    #[serde(flatten)]
    pub scores: Scores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<BinaryConfusion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// EI, NS, TF, JP in order.
    pub per_dimension: Vec<DimensionScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_16: Option<Scores>,
}

impl MetricReport {
    /// Headline numbers are the mean of the four dimensions.
    pub fn from_dimensions(per_dimension: [DimensionScores; 4]) -> Self {
        let headline = Scores::mean(&per_dimension.map(|d| d.scores));
        MetricReport {
            accuracy: headline.accuracy,
            f1: headline.f1,
            precision: headline.precision,
            recall: headline.recall,
            per_dimension: per_dimension.to_vec(),
            overall_16: None,
        }
    }

    pub fn headline(&self) -> Scores {
        Scores {
            accuracy: self.accuracy,
            f1: self.f1,
            precision: self.precision,
            recall: self.recall,
        }
    }
}

fn check_lengths(labels: &[MbtiType], preds: &[MbtiType]) -> Result<(), MetricsError> {
    if labels.len() != preds.len() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            preds: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(())
}

fn dimension_scores(labels: &[MbtiType], preds: &[MbtiType]) -> [DimensionScores; 4] {
    Dimension::ALL.map(|dim| {
        let mut c = BinaryConfusion::default();
        for (l, p) in labels.iter().zip(preds) {
            c.record(l.pole(dim).is_first(), p.pole(dim).is_first());
        }
        DimensionScores {
            dimension: dim,
            scores: binary_metrics(&c),
            confusion: Some(c),
        }
    })
}

/// Per-dimension metrics with the first pole (E, N, T, J) as the positive
/// class, averaged into the headline numbers.
pub fn per_dimension_report(labels: &[MbtiType], preds: &[MbtiType]) -> Result<MetricReport, MetricsError> {
    check_lengths(labels, preds)?;
    Ok(MetricReport::from_dimensions(dimension_scores(labels, preds)))
}

/// Exact-match accuracy and macro precision/recall/F1 over the types that
/// occur in either list.
pub fn sixteen_class_scores(labels: &[MbtiType], preds: &[MbtiType]) -> Result<Scores, MetricsError> {
    check_lengths(labels, preds)?;
    let correct = labels.iter().zip(preds).filter(|(l, p)| l == p).count() as u64;
    let present: BTreeSet<MbtiType> = labels.iter().chain(preds).copied().collect();
    let mut per_class = Vec::with_capacity(present.len());
    for class in present {
        let mut c = BinaryConfusion::default();
        for (l, p) in labels.iter().zip(preds) {
            c.record(*l == class, *p == class);
        }
        per_class.push(binary_metrics(&c));
    }
    let macro_avg = Scores::mean(&per_class);
    Ok(Scores {
        accuracy: ratio(correct, labels.len() as u64),
        f1: macro_avg.f1,
        precision: macro_avg.precision,
        recall: macro_avg.recall,
    })
}

/// Sixteen-class headline numbers, with the per-dimension breakdown attached.
pub fn sixteen_class_report(labels: &[MbtiType], preds: &[MbtiType]) -> Result<MetricReport, MetricsError> {
    let overall = sixteen_class_scores(labels, preds)?;
    Ok(MetricReport {
        accuracy: overall.accuracy,
        f1: overall.f1,
        precision: overall.precision,
        recall: overall.recall,
        per_dimension: dimension_scores(labels, preds).to_vec(),
        overall_16: Some(overall),
    })
}

/// Per-dimension headline with the sixteen-class scores alongside.
pub fn evaluation_report(labels: &[MbtiType], preds: &[MbtiType]) -> Result<MetricReport, MetricsError> {
    let mut report = per_dimension_report(labels, preds)?;
    report.overall_16 = Some(sixteen_class_scores(labels, preds)?);
    Ok(report)
}

/// Exact-match accuracy implied by independent per-dimension errors.
pub fn expected_joint_accuracy(per_dim_acc: [f64; 4]) -> f64 {
    per_dim_acc.iter().product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccumulationSimulation {
    pub samples: usize,
    pub per_dimension_accuracy: [f64; 4],
    pub sixteen_class_accuracy: f64,
    pub expected_sixteen_class_accuracy: f64,
    /// Binomial standard error of the sixteen-class estimate.
    pub standard_error: f64,
}

/// Draws uniform random labels and flips each dimension independently with
/// probability `1 - accuracy[d]`, then scores the corrupted predictions.
pub fn simulate_error_accumulation(accuracy: [f64; 4], samples: usize, seed: u64) -> AccumulationSimulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(samples);
    let mut preds = Vec::with_capacity(samples);
    for _ in 0..samples {
        let label = MbtiType::ALL[rng.gen_range(0..MbtiType::COUNT)];
        let mut traits = label.traits();
        for dim in Dimension::ALL {
            if !rng.gen_bool(accuracy[dim.index()]) {
                traits = traits.with_pole(dim, traits.pole(dim).flipped());
            }
        }
        labels.push(label);
        preds.push(MbtiType::from_traits(traits));
    }
    let expected = expected_joint_accuracy(accuracy);
    let (per_dimension_accuracy, sixteen) = if samples == 0 {
        ([0.0; 4], 0.0)
    } else {
        let dims = dimension_scores(&labels, &preds).map(|d| d.scores.accuracy);
        let exact = labels.iter().zip(&preds).filter(|(l, p)| l == p).count();
        (dims, exact as f64 / samples as f64)
    };
    AccumulationSimulation {
        samples,
        per_dimension_accuracy,
        sixteen_class_accuracy: sixteen,
        expected_sixteen_class_accuracy: expected,
        standard_error: (expected * (1.0 - expected) / samples.max(1) as f64).sqrt(),
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// One row per model: `Model | Accuracy | F1 | Precision | Recall`, in percent.
pub fn render_summary_table(rows: &[(&str, Scores)]) -> String {
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(5);
    let mut out = format!(
        "{:<width$} | {:>8} | {:>8} | {:>9} | {:>8}\n",
        "Model", "Accuracy", "F1", "Precision", "Recall"
    );
    out.push_str(&format!("{}\n", "-".repeat(width + 45)));
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>8} | {:>8} | {:>9} | {:>8}",
            name,
            pct(s.accuracy),
            pct(s.f1),
            pct(s.precision),
            pct(s.recall)
        );
    }
    out
}

/// One row per metric, one column per dimension plus the average, in percent.
pub fn render_dimension_table(report: &MetricReport) -> String {
    let mut out = format!("{:<10}", "Metric");
    for d in &report.per_dimension {
        let _ = write!(out, " | {:>7}", d.dimension.label());
    }
    out.push_str(" | Average\n");
    type Pick = fn(&Scores) -> f64;
    let rows: [(&str, Pick); 4] = [
        ("Accuracy", |s| s.accuracy),
        ("F1", |s| s.f1),
        ("Precision", |s| s.precision),
        ("Recall", |s| s.recall),
    ];
    for (name, pick) in rows {
        let _ = write!(out, "{name:<10}");
        for d in &report.per_dimension {
            let _ = write!(out, " | {:>7}", pct(pick(&d.scores)));
        }
        let avg = Scores::mean(&report.per_dimension.iter().map(|d| d.scores).collect::<Vec<_>>());
        let _ = writeln!(out, " | {:>7}", pct(pick(&avg)));
    }
    out
}
