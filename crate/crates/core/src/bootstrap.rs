//! Bootstrap personality assessment: resample fixed-size sets from a pool of
//! generated texts, predict one type per set, and compare the resulting
//! type distributions across roles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::corpus::{DocumentSet, MAX_DOCUMENTS};
use crate::detector::{Detector, DetectorError};
use crate::genpipe::GeneratedText;
use crate::mbti::MbtiType;

/// Types seen fewer times than this are folded into "Others" for display.
pub const DEFAULT_OTHERS_THRESHOLD: u32 = 3;

/// Smallest expected cell count the chi-square test accepts before pooling.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("text pool is empty")]
    EmptyPool,
    #[error("invalid bootstrap plan: {0}")]
    InvalidPlan(String),
    #[error("detector failed on set {set_index}: {source}")]
    Detector {
        set_index: usize,
        #[source]
        source: DetectorError,
    },
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapPlan {
    pub n_sets: usize,
    pub set_size: usize,
    pub seed: u64,
}

impl BootstrapPlan {
    pub fn new(n_sets: usize, set_size: usize, seed: u64) -> Result<Self, BootstrapError> {
        let plan = BootstrapPlan {
            n_sets,
            set_size,
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// 100 sets of 50 texts.
    pub fn standard(seed: u64) -> Self {
        BootstrapPlan {
            n_sets: 100,
            set_size: 50,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        if self.n_sets == 0 {
            return Err(BootstrapError::InvalidPlan("n_sets must be positive".into()));
        }
        if self.set_size == 0 || self.set_size > MAX_DOCUMENTS {
            return Err(BootstrapError::InvalidPlan(format!(
                "set_size must be in 1..={MAX_DOCUMENTS}, got {}",
                self.set_size
            )));
        }
        Ok(())
    }
}

/// Seed for set `k`: the first eight bytes of SHA-256 over both values.
pub fn set_seed(seed: u64, k: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((k as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn draw_set(pool: &[GeneratedText], plan: &BootstrapPlan, k: usize) -> DocumentSet {
    let mut rng = ChaCha8Rng::seed_from_u64(set_seed(plan.seed, k));
    let docs = (0..plan.set_size).map(|_| pool[rng.gen_range(0..pool.len())].text.as_str());
    DocumentSet::new(docs).expect("pool texts are nonempty and set_size is bounded")
}

/// `n_sets` sets of `set_size` texts drawn uniformly with replacement.
pub fn resample(pool: &[GeneratedText], plan: &BootstrapPlan) -> Result<Vec<DocumentSet>, BootstrapError> {
    plan.validate()?;
    check_pool(pool)?;
    Ok((0..plan.n_sets).map(|k| draw_set(pool, plan, k)).collect())
}

fn check_pool(pool: &[GeneratedText]) -> Result<(), BootstrapError> {
    if pool.is_empty() {
        return Err(BootstrapError::EmptyPool);
    }
    if pool.iter().any(|t| t.text.trim().is_empty()) {
        return Err(BootstrapError::Schema("pool contains an empty text".into()));
    }
    Ok(())
}

/// Counts of predicted types over the bootstrap sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonalityDistribution {
    pub counts: BTreeMap<MbtiType, u32>,
    pub n_sets: u32,
}

impl PersonalityDistribution {
    pub fn from_predictions<I: IntoIterator<Item = MbtiType>>(types: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut n_sets = 0;
        for t in types {
            *counts.entry(t).or_insert(0) += 1;
            n_sets += 1;
        }
        PersonalityDistribution { counts, n_sets }
    }

    pub fn count(&self, t: MbtiType) -> u32 {
        self.counts.get(&t).copied().unwrap_or(0)
    }

    pub fn fraction(&self, t: MbtiType) -> f64 {
        if self.n_sets == 0 {
            0.0
        } else {
            f64::from(self.count(t)) / f64::from(self.n_sets)
        }
    }

    /// Zero entries are dropped and counts must sum to `n_sets`.
    pub fn validate(&self) -> Result<(), BootstrapError> {
        let sum: u64 = self.counts.values().map(|&c| u64::from(c)).sum();
        if sum != u64::from(self.n_sets) {
            return Err(BootstrapError::Schema(format!(
                "counts sum to {sum} but n_sets is {}",
                self.n_sets
            )));
        }
        Ok(())
    }

    /// Types with nonzero count, most frequent first, ties alphabetical.
    pub fn ranked(&self) -> Vec<(MbtiType, u32)> {
        let mut entries: Vec<(MbtiType, u32)> = self
            .counts
            .iter()
            .filter(|(_, c)| **c > 0)
            .map(|(t, c)| (*t, *c))
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries
    }
}

/// Runs the detector on every bootstrap set, using the ambient rayon pool.
pub fn assess<D: Detector + ?Sized>(
    pool: &[GeneratedText],
    detector: &D,
    plan: &BootstrapPlan,
) -> Result<PersonalityDistribution, BootstrapError> {
    plan.validate()?;
    check_pool(pool)?;
    let predictions: Vec<Result<MbtiType, BootstrapError>> = (0..plan.n_sets)
        .into_par_iter()
        .map(|k| {
            detector
                .predict(&draw_set(pool, plan, k))
                .map(|p| p.mbti)
                .map_err(|source| BootstrapError::Detector { set_index: k, source })
        })
        .collect();
    let types = predictions.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(PersonalityDistribution::from_predictions(types))
}

/// [`assess`] on a dedicated pool of `threads` workers.
pub fn assess_with_threads<D: Detector + ?Sized>(
    pool: &[GeneratedText],
    detector: &D,
    plan: &BootstrapPlan,
    threads: usize,
) -> Result<PersonalityDistribution, BootstrapError> {
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BootstrapError::InvalidPlan(e.to_string()))?;
    workers.install(|| assess(pool, detector, plan))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayEntry {
    pub mbti: MbtiType,
    pub count: u32,
}

/// Distribution prepared for a pie chart: rare types merged into "Others".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayDistribution {
    pub threshold: u32,
    pub retained: Vec<DisplayEntry>,
    pub others: u32,
    pub total: u32,
}

impl DisplayDistribution {
    /// `type,count,fraction` rows, retained types first, then `Others`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("type,count,fraction\n");
        let frac = |c: u32| {
            if self.total == 0 {
                0.0
            } else {
                f64::from(c) / f64::from(self.total)
            }
        };
        for e in &self.retained {
            let _ = writeln!(out, "{},{},{:.4}", e.mbti, e.count, frac(e.count));
        }
        let _ = writeln!(out, "Others,{},{:.4}", self.others, frac(self.others));
        out
    }
}

/// Folds every type with count below `threshold` into "Others".
pub fn merge_others(d: &PersonalityDistribution, threshold: u32) -> DisplayDistribution {
    let mut retained = Vec::new();
    let mut others = 0;
    for (mbti, count) in d.ranked() {
        if count < threshold {
            others += count;
        } else {
            retained.push(DisplayEntry { mbti, count });
        }
    }
    DisplayDistribution {
        threshold,
        retained,
        others,
        total: d.n_sets,
    }
}

/// Most and second-most frequent types; ties go to the alphabetically
/// first code.
pub fn mode_types(d: &PersonalityDistribution) -> Result<(MbtiType, Option<MbtiType>), BootstrapError> {
    let ranked = d.ranked();
    let first = ranked.first().ok_or(BootstrapError::EmptyDistribution)?.0;
    Ok((first, ranked.get(1).map(|e| e.0)))
}

/// Half the L1 distance between the two normalized distributions.
pub fn tv_distance(a: &PersonalityDistribution, b: &PersonalityDistribution) -> f64 {
    0.5 * MbtiType::ALL
        .iter()
        .map(|t| (a.fraction(*t) - b.fraction(*t)).abs())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChiSquareOutcome {
    Test {
        statistic: f64,
        degrees_of_freedom: usize,
        p_value: f64,
        /// Category labels after pooling; a pooled bucket reads `A+B+...`.
        categories: Vec<String>,
    },
    /// Fewer than two categories survive pooling; no test is possible.
    DegenerateSupport { retained_categories: usize },
}

impl ChiSquareOutcome {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            ChiSquareOutcome::Test { p_value, .. } => Some(*p_value),
            ChiSquareOutcome::DegenerateSupport { .. } => None,
        }
    }
}

struct Category {
    label: Vec<MbtiType>,
    a: u64,
    b: u64,
}

/// Two-sample chi-square test of homogeneity. Categories whose smaller
/// expected count is below [`MIN_EXPECTED_COUNT`] are pooled, smallest first,
/// into one bucket that keeps absorbing categories until it passes too.
pub fn chi_square_homogeneity(a: &PersonalityDistribution, b: &PersonalityDistribution) -> ChiSquareOutcome {
    let na = f64::from(a.n_sets);
    let nb = f64::from(b.n_sets);
    let n = na + nb;
    let min_expected = |total: u64| (total as f64) * na.min(nb) / n;

    let mut cats: Vec<Category> = MbtiType::ALL
        .iter()
        .map(|t| Category {
            label: vec![*t],
            a: u64::from(a.count(*t)),
            b: u64::from(b.count(*t)),
        })
        .filter(|c| c.a + c.b > 0)
        .collect();
    cats.sort_by(|x, y| (x.a + x.b).cmp(&(y.a + y.b)).then_with(|| x.label.cmp(&y.label)));

    let mut kept: Vec<Category> = Vec::new();
    let mut bucket = Category {
        label: Vec::new(),
        a: 0,
        b: 0,
    };
    for cat in cats {
        let fails = min_expected(cat.a + cat.b) < MIN_EXPECTED_COUNT;
        let bucket_fails = !bucket.label.is_empty() && min_expected(bucket.a + bucket.b) < MIN_EXPECTED_COUNT;
        if fails || bucket_fails {
            bucket.label.extend(cat.label);
            bucket.a += cat.a;
            bucket.b += cat.b;
        } else {
            kept.push(cat);
        }
    }
    if !bucket.label.is_empty() {
        kept.push(bucket);
    }
    if kept.len() < 2 || n == 0.0 {
        return ChiSquareOutcome::DegenerateSupport {
            retained_categories: kept.len(),
        };
    }

    let mut statistic = 0.0;
    for cat in &kept {
        let total = (cat.a + cat.b) as f64;
        for (observed, size) in [(cat.a, na), (cat.b, nb)] {
            let expected = size * total / n;
            statistic += (observed as f64 - expected).powi(2) / expected;
        }
    }
    let df = kept.len() - 1;
    let p_value = ChiSquared::new(df as f64)
        .map(|dist| dist.sf(statistic))
        .unwrap_or(f64::NAN);
    let mut categories: Vec<String> = kept
        .iter()
        .map(|c| {
            let mut codes: Vec<String> = c.label.iter().map(|t| t.code()).collect();
            codes.sort();
            codes.join("+")
        })
        .collect();
    categories.sort();
    ChiSquareOutcome::Test {
        statistic,
        degrees_of_freedom: df,
        p_value,
        categories,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub mode_a: MbtiType,
    pub mode_b: MbtiType,
    pub second_mode_a: Option<MbtiType>,
    pub second_mode_b: Option<MbtiType>,
    pub mode_match: bool,
    pub tv_distance: f64,
    pub chi_square: ChiSquareOutcome,
}

impl ConsistencyReport {
    pub fn render(&self, label_a: &str, label_b: &str) -> String {
        let show = |mode: MbtiType, second: Option<MbtiType>| match second {
            Some(s) => format!("{mode} ({s})"),
            None => mode.to_string(),
        };
        let mut out = String::new();
        let width = label_a.len().max(label_b.len()).max(4);
        let _ = writeln!(out, "{:<width$}  most frequent (second)", "role");
        let _ = writeln!(
            out,
            "{:<width$}  {}",
            label_a,
            show(self.mode_a, self.second_mode_a)
        );
        let _ = writeln!(
            out,
            "{:<width$}  {}",
            label_b,
            show(self.mode_b, self.second_mode_b)
        );
        let _ = writeln!(
            out,
            "mode match:   {}",
            if self.mode_match { "yes" } else { "no" }
        );
        let _ = writeln!(out, "TV distance:  {:.4}", self.tv_distance);
        match &self.chi_square {
            ChiSquareOutcome::Test {
                statistic,
                degrees_of_freedom,
                p_value,
                ..
            } => {
                let _ = writeln!(
                    out,
                    "chi-square:   {statistic:.4} (df {degrees_of_freedom}), p = {p_value:.3e}"
                );
            }
            ChiSquareOutcome::DegenerateSupport { retained_categories } => {
                let _ = writeln!(
                    out,
                    "chi-square:   not computed ({retained_categories} category after pooling)"
                );
            }
        }
        out
    }
}

/// Compares two distributions: modes, TV distance and chi-square test.
pub fn compare(
    a: &PersonalityDistribution,
    b: &PersonalityDistribution,
) -> Result<ConsistencyReport, BootstrapError> {
    let (mode_a, second_mode_a) = mode_types(a)?;
    let (mode_b, second_mode_b) = mode_types(b)?;
    Ok(ConsistencyReport {
        mode_a,
        mode_b,
        second_mode_a,
        second_mode_b,
        mode_match: mode_a == mode_b,
        tv_distance: tv_distance(a, b),
        chi_square: chi_square_homogeneity(a, b),
    })
}

pub const DISTRIBUTION_FORMAT: &str = "persona-probe/distribution";

/// A distribution on disk, with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub format: String,
    pub label: String,
    pub detector: String,
    pub plan: BootstrapPlan,
    pub pool_size: usize,
    pub config_hash: String,
    pub distribution: PersonalityDistribution,
}

impl DistributionFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution serializes") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BootstrapError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| BootstrapError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads and validates; counts that do not sum to `n_sets` are a schema error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BootstrapError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| BootstrapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: DistributionFile = serde_json::from_str(&text)
            .map_err(|e| BootstrapError::Schema(format!("{}: {e}", path.display())))?;
        if file.format != DISTRIBUTION_FORMAT {
            return Err(BootstrapError::Schema(format!(
                "unexpected format {:?}",
                file.format
            )));
        }
        file.distribution.validate()?;
        if file.distribution.n_sets as usize != file.plan.n_sets {
            return Err(BootstrapError::Schema(format!(
                "n_sets {} disagrees with plan ({})",
                file.distribution.n_sets, file.plan.n_sets
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::ConstantDetector;
    use crate::genpipe::Role;
    use proptest::prelude::*;

    fn t(code: &str) -> MbtiType {
        code.parse().unwrap()
    }

    fn dist(entries: &[(&str, u32)]) -> PersonalityDistribution {
        let counts: BTreeMap<MbtiType, u32> = entries.iter().map(|(c, n)| (t(c), *n)).collect();
        let n_sets = counts.values().sum();
        PersonalityDistribution { counts, n_sets }
    }

    fn pool(texts: &[&str]) -> Vec<GeneratedText> {
        texts
            .iter()
            .enumerate()
            .map(|(i, text)| GeneratedText {
                id: format!("g{i}"),
                role: Role::Post,
                source: "src".into(),
                model: "m".into(),
                text: text.to_string(),
                created_at: "2024-01-01T00:00:00Z".parse().unwrap(),
            })
            .collect()
    }

    #[test]
    fn single_text_pool_repeats() {
        let sets = resample(&pool(&["only"]), &BootstrapPlan::new(2, 50, 9).unwrap()).unwrap();
        assert_eq!(sets.len(), 2);
        for s in &sets {
            assert_eq!(s.len(), 50);
            assert!(s.documents().iter().all(|d| d == "only"));
        }
    }

    #[test]
    fn resample_is_deterministic_and_seed_sensitive() {
        let texts: Vec<String> = (0..200).map(|i| format!("text {i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let p = pool(&refs);
        let plan = BootstrapPlan::standard(1);
        let a = resample(&p, &plan).unwrap();
        assert_eq!(a, resample(&p, &plan).unwrap());
        assert_ne!(a, resample(&p, &BootstrapPlan::standard(2)).unwrap());
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|s| s.len() == 50));
    }

    #[test]
    fn plan_and_pool_errors() {
        assert!(BootstrapPlan::new(0, 50, 0).is_err());
        assert!(BootstrapPlan::new(10, 0, 0).is_err());
        assert!(BootstrapPlan::new(10, 51, 0).is_err());
        assert!(matches!(
            resample(&[], &BootstrapPlan::standard(0)),
            Err(BootstrapError::EmptyPool)
        ));
    }

    #[test]
    fn constant_detector_gives_single_type() {
        let p = pool(&["a text", "another"]);
        let d = assess(
            &p,
            &ConstantDetector(t("INFJ")),
            &BootstrapPlan::new(17, 5, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(d, dist(&[("INFJ", 17)]));
    }

    #[test]
    fn others_merge_rule() {
        let m = merge_others(&dist(&[("INFJ", 60), ("INFP", 38), ("ESTJ", 2)]), 3);
        assert_eq!(m.retained.len(), 2);
        assert_eq!(m.others, 2);
        assert_eq!(m.total, 100);

        let m = merge_others(&dist(&[("INFJ", 97), ("ENFJ", 3)]), 3);
        assert_eq!(m.retained.iter().map(|e| e.count).collect::<Vec<_>>(), [97, 3]);
        assert_eq!(m.others, 0);

        let all: Vec<(String, u32)> = MbtiType::ALL.iter().map(|t| (t.code(), 2)).collect();
        let refs: Vec<(&str, u32)> = all.iter().map(|(c, n)| (c.as_str(), *n)).collect();
        let m = merge_others(&dist(&refs), 3);
        assert!(m.retained.is_empty());
        assert_eq!(m.others, 32);
    }

    #[test]
    fn csv_export() {
        let m = merge_others(&dist(&[("INFJ", 60), ("INFP", 38), ("ESTJ", 2)]), 3);
        assert_eq!(
            m.to_csv(),
            "type,count,fraction\nINFJ,60,0.6000\nINFP,38,0.3800\nOthers,2,0.0200\n"
        );
    }

    #[test]
    fn modes() {
        assert_eq!(
            mode_types(&dist(&[("INTJ", 55), ("INFJ", 45)])).unwrap(),
            (t("INTJ"), Some(t("INFJ")))
        );
        assert_eq!(mode_types(&dist(&[("INFJ", 100)])).unwrap(), (t("INFJ"), None));
        assert_eq!(
            mode_types(&dist(&[("INFP", 50), ("INFJ", 50)])).unwrap(),
            (t("INFJ"), Some(t("INFP")))
        );
        assert!(matches!(
            mode_types(&dist(&[])),
            Err(BootstrapError::EmptyDistribution)
        ));
    }

    #[test]
    fn compare_examples() {
        let same = dist(&[("INFJ", 60), ("INFP", 40)]);
        let r = compare(&same, &same).unwrap();
        assert_eq!(r.tv_distance, 0.0);
        assert!(r.mode_match);
        assert!(r.chi_square.p_value().unwrap() > 0.99);

        let r = compare(&dist(&[("INFJ", 100)]), &dist(&[("ESTJ", 100)])).unwrap();
        assert_eq!(r.tv_distance, 1.0);
        assert!(!r.mode_match);
        // 2x2 table with expected 50 everywhere: 4 * 50^2 / 50 = 200
        match &r.chi_square {
            ChiSquareOutcome::Test {
                statistic,
                degrees_of_freedom,
                p_value,
                ..
            } => {
                assert!((statistic - 200.0).abs() < 1e-9);
                assert_eq!(*degrees_of_freedom, 1);
                assert!(*p_value < 1e-40);
            }
            other => panic!("{other:?}"),
        }

        // 0.5 * (|0.5 - 1.0| + |0.5 - 0|)
        let r = compare(&dist(&[("INFJ", 50), ("INFP", 50)]), &dist(&[("INFJ", 100)])).unwrap();
        assert!((r.tv_distance - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chi_square_matches_reference_value() {
        // scipy.stats.chi2_contingency([[30, 50, 20], [50, 30, 20]], correction=False)
        // -> statistic 10.0, dof 2, p 0.006737946999085467
        let a = dist(&[("INFJ", 30), ("INFP", 50), ("ESTJ", 20)]);
        let b = dist(&[("INFJ", 50), ("INFP", 30), ("ESTJ", 20)]);
        match chi_square_homogeneity(&a, &b) {
            ChiSquareOutcome::Test {
                statistic,
                degrees_of_freedom,
                p_value,
                ..
            } => {
                assert!((statistic - 10.0).abs() < 1e-9);
                assert_eq!(degrees_of_freedom, 2);
                assert!((p_value - 0.006737946999085467).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rare_categories_are_pooled() {
        // ESTJ and ENTP have expected counts 1.5 and 2: both pooled, bucket of
        // 7 total (expected 3.5) still fails and absorbs INFP.
        let a = dist(&[("INFJ", 60), ("INFP", 35), ("ESTJ", 3), ("ENTP", 2)]);
        let b = dist(&[("INFJ", 64), ("INFP", 34), ("ENTP", 2)]);
        match chi_square_homogeneity(&a, &b) {
            ChiSquareOutcome::Test {
                degrees_of_freedom,
                categories,
                ..
            } => {
                assert_eq!(degrees_of_freedom, 1);
                assert_eq!(categories, ["ENTP+ESTJ+INFP", "INFJ"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_category_is_degenerate() {
        let d = dist(&[("INFJ", 100)]);
        let r = compare(&d, &d).unwrap();
        assert_eq!(r.tv_distance, 0.0);
        assert_eq!(
            r.chi_square,
            ChiSquareOutcome::DegenerateSupport {
                retained_categories: 1
            }
        );
    }

    #[test]
    fn corrupted_counts_fail_validation() {
        let mut d = dist(&[("INFJ", 60), ("INFP", 40)]);
        d.n_sets = 99;
        assert!(matches!(d.validate(), Err(BootstrapError::Schema(_))));
    }

    fn arb_dist() -> impl Strategy<Value = PersonalityDistribution> {
        prop::collection::vec(0u32..20, 16)
            .prop_filter("nonempty", |v| v.iter().sum::<u32>() > 0)
            .prop_map(|v| {
                let counts: BTreeMap<MbtiType, u32> = MbtiType::ALL
                    .iter()
                    .zip(v)
                    .filter(|(_, c)| *c > 0)
                    .map(|(t, c)| (*t, c))
                    .collect();
                let n_sets = counts.values().sum();
                PersonalityDistribution { counts, n_sets }
            })
    }

    proptest! {
        #[test]
        fn merge_preserves_total_and_mode(d in arb_dist(), threshold in 0u32..6) {
            let m = merge_others(&d, threshold);
            let retained: u32 = m.retained.iter().map(|e| e.count).sum();
            prop_assert_eq!(retained + m.others, d.n_sets);
            prop_assert!(m.retained.iter().all(|e| e.count >= threshold));
            let (mode, _) = mode_types(&d).unwrap();
            if d.count(mode) >= threshold {
                prop_assert_eq!(m.retained[0].mbti, mode);
            }
        }
    }
}
