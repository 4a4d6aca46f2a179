//! Labeled corpus ingestion (Kaggle MBTI layout), deterministic 81:9:10
//! splitting, and generated-text pools.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::genpipe::GeneratedText;
use crate::mbti::{InvalidLabel, MbtiType};

/// In-field separator between posts in the Kaggle corpus.
pub const POST_DELIMITER: &str = "|||";

/// The detector consumes at most this many documents per author.
pub const MAX_DOCUMENTS: usize = 50;

/// Splits need at least this many records.
pub const MIN_SPLIT_RECORDS: usize = 10;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    InvalidLabel(#[from] InvalidLabel),
    #[error("record contains no nonempty document")]
    EmptyRecord,
    #[error("record has {0} documents, more than the limit of {MAX_DOCUMENTS}")]
    TooManyDocuments(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {cause}")]
    Parse { line: u64, cause: String },
    #[error("line {line}: {cause}")]
    Schema { line: u64, cause: String },
    #[error("need at least {MIN_SPLIT_RECORDS} records to split, got {0}")]
    TooFewRecords(usize),
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Up to fifty nonempty texts from one author.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct DocumentSet(Vec<String>);

impl DocumentSet {
    /// Trims each document and rejects sets that end up empty, contain a
    /// blank document, or exceed [`MAX_DOCUMENTS`].
    pub fn new<I, S>(docs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        for doc in docs {
            let doc: String = doc.into();
            let trimmed = doc.trim();
            if trimmed.is_empty() {
                return Err(CorpusError::EmptyRecord);
            }
            out.push(trimmed.to_string());
        }
        if out.is_empty() {
            return Err(CorpusError::EmptyRecord);
        }
        if out.len() > MAX_DOCUMENTS {
            return Err(CorpusError::TooManyDocuments(out.len()));
        }
        Ok(DocumentSet(out))
    }

    /// Splits on [`POST_DELIMITER`], dropping blank fragments. Rows longer
    /// than fifty posts keep the first fifty.
    pub fn from_delimited(text: &str) -> Result<Self, CorpusError> {
        let docs: Vec<&str> = text
            .split(POST_DELIMITER)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .take(MAX_DOCUMENTS)
            .collect();
        DocumentSet::new(docs)
    }

    pub fn documents(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_delimited(&self) -> String {
        self.0.join(POST_DELIMITER)
    }
}

impl TryFrom<Vec<String>> for DocumentSet {
    type Error = CorpusError;

    fn try_from(docs: Vec<String>) -> Result<Self, Self::Error> {
        DocumentSet::new(docs)
    }
}

impl From<DocumentSet> for Vec<String> {
    fn from(set: DocumentSet) -> Self {
        set.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub label: MbtiType,
    pub docs: DocumentSet,
    pub source_id: String,
}

impl LabeledRecord {
    /// Source id derived from content, so it survives file re-orderings.
    pub fn with_content_id(label: MbtiType, docs: DocumentSet) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(label.code().as_bytes());
        for doc in docs.documents() {
            hasher.update([0u8]);
            hasher.update(doc.as_bytes());
        }
        let digest = hasher.finalize();
        let source_id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        LabeledRecord {
            label,
            docs,
            source_id,
        }
    }
}

pub fn parse_corpus_row(label_field: &str, text_field: &str) -> Result<LabeledRecord, CorpusError> {
    let label = MbtiType::parse(label_field)?;
    let docs = DocumentSet::from_delimited(text_field)?;
    Ok(LabeledRecord::with_content_id(label, docs))
}

/// Reads a `type,posts` table. Row order is preserved.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<LabeledRecord>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_corpus(file)
}

pub fn read_corpus<R: io::Read>(reader: R) -> Result<Vec<LabeledRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CorpusError::Parse {
        line: 1,
        cause: e.to_string(),
    })?;
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["type", "posts"] {
        return Err(CorpusError::Parse {
            line: 1,
            cause: format!("expected header `type,posts`, found `{}`", names.join(",")),
        });
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CorpusError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            cause: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 2 {
            return Err(CorpusError::Parse {
                line,
                cause: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let record = parse_corpus_row(&row[0], &row[1]).map_err(|e| CorpusError::Parse {
            line,
            cause: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the same `type,posts` layout [`load_corpus`] reads.
pub fn write_corpus<W: io::Write>(writer: W, records: &[LabeledRecord]) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_writer(writer);
    wtr.write_record(["type", "posts"])?;
    for record in records {
        wtr.write_record([record.label.code(), record.docs.to_delimited()])?;
    }
    wtr.flush()
}

pub fn save_corpus(path: impl AsRef<Path>, records: &[LabeledRecord]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_corpus(io::BufWriter::new(file), records).map_err(|e| CorpusError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<LabeledRecord>,
    pub eval: Vec<LabeledRecord>,
    pub test: Vec<LabeledRecord>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.eval.len(), self.test.len())
    }
}

/// `(train, eval, test)` sizes: floor(0.81 N), floor(0.09 N), remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 81 / 100;
    let eval = n * 9 / 100;
    (train, eval, n - train - eval)
}

/// Shuffles with a seeded permutation and cuts 81:9:10.
///
/// Records are first put in a canonical order (by source id, then content),
/// so the result depends only on the multiset of records and the seed.
pub fn split_corpus(records: &[LabeledRecord], seed: u64) -> Result<CorpusSplit, CorpusError> {
    if records.len() < MIN_SPLIT_RECORDS {
        return Err(CorpusError::TooFewRecords(records.len()));
    }
    let mut ordered: Vec<&LabeledRecord> = records.iter().collect();
    ordered.sort_by(|a, b| {
        a.source_id
            .cmp(&b.source_id)
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.docs.cmp(&b.docs))
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ordered.shuffle(&mut rng);

    let (n_train, n_eval, _) = split_sizes(ordered.len());
    let mut iter = ordered.into_iter().cloned();
    let train = iter.by_ref().take(n_train).collect();
    let eval = iter.by_ref().take(n_eval).collect();
    let test = iter.collect();
    Ok(CorpusSplit {
        train,
        eval,
        test,
        seed,
    })
}

/// Reads a line-delimited JSON pool of generated texts. Blank lines are skipped.
pub fn load_text_pool(path: impl AsRef<Path>) -> Result<Vec<GeneratedText>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_text_pool(BufReader::new(file))
}

pub fn read_text_pool<R: BufRead>(reader: R) -> Result<Vec<GeneratedText>, CorpusError> {
    let mut pool = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| CorpusError::Schema {
            line: line_no,
            cause: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let text: GeneratedText = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
            line: line_no,
            cause: e.to_string(),
        })?;
        if text.text.trim().is_empty() {
            return Err(CorpusError::Schema {
                line: line_no,
                cause: "empty `text` field".into(),
            });
        }
        pool.push(text);
    }
    Ok(pool)
}

pub fn write_text_pool<W: Write>(mut writer: W, pool: &[GeneratedText]) -> io::Result<()> {
    for text in pool {
        serde_json::to_writer(&mut writer, text)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_text_pool(path: impl AsRef<Path>, pool: &[GeneratedText]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_text_pool(io::BufWriter::new(file), pool).map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splits_on_delimiter() {
        let r = parse_corpus_row("INTJ", "a|||b|||c").unwrap();
        assert_eq!(r.label.code(), "INTJ");
        assert_eq!(r.docs.documents(), ["a", "b", "c"]);
    }

    #[test]
    fn drops_blank_fragments() {
        let r = parse_corpus_row("ENTP", "x||| |||y").unwrap();
        assert_eq!(r.docs.documents(), ["x", "y"]);
    }

    #[test]
    fn all_blank_is_empty_record() {
        assert!(matches!(
            parse_corpus_row("INTJ", "||||||"),
            Err(CorpusError::EmptyRecord)
        ));
    }

    #[test]
    fn bad_label_propagates() {
        assert!(matches!(
            parse_corpus_row("ABCD", "x"),
            Err(CorpusError::InvalidLabel(_))
        ));
    }

    #[test]
    fn long_rows_keep_first_fifty() {
        let text = (0..60)
            .map(|i| format!("post {i}"))
            .collect::<Vec<_>>()
            .join("|||");
        let r = parse_corpus_row("INFP", &text).unwrap();
        assert_eq!(r.docs.len(), 50);
        assert_eq!(r.docs.documents()[49], "post 49");
    }

    #[test]
    fn document_set_rejects_blank_and_oversized() {
        assert!(DocumentSet::new(["ok", " "]).is_err());
        assert!(DocumentSet::new(Vec::<String>::new()).is_err());
        assert!(matches!(
            DocumentSet::new((0..51).map(|i| i.to_string())),
            Err(CorpusError::TooManyDocuments(51))
        ));
    }

    #[test]
    fn reads_two_row_table() {
        let data = "type,posts\n\"ENTP\",\"I am finding the lack of me in these posts very alarming|||This + Lack of Balance\"\n\"INTJ\",\"I collect shoes.|||2% still means about 1/50 people.\"\n";
        let records = read_corpus(data.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].label.code(), "ENTP");
        assert_eq!(records[1].label.code(), "INTJ");
        assert_eq!(records[0].docs.len(), 2);
    }

    #[test]
    fn reports_line_of_bad_row() {
        let data = "type,posts\nINTJ,a|||b\nXXXX,c\n";
        match read_corpus(data.as_bytes()) {
            Err(CorpusError::Parse { line, cause }) => {
                assert_eq!(line, 3);
                assert!(cause.contains("XXXX"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let data = "label,text\nINTJ,a\n";
        assert!(matches!(
            read_corpus(data.as_bytes()),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus("/nonexistent/mbti.csv"),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        assert_eq!(split_sizes(100), (81, 9, 10));
        // 0.81 * 8675 = 7026.75, 0.09 * 8675 = 780.75
        assert_eq!(split_sizes(8675), (7026, 780, 869));
        assert_eq!(split_sizes(10), (8, 0, 2));
    }

    fn records(n: usize) -> Vec<LabeledRecord> {
        (0..n)
            .map(|i| {
                let label = MbtiType::ALL[i % 16];
                parse_corpus_row(&label.code(), &format!("text {i}|||more {i}")).unwrap()
            })
            .collect()
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let recs = records(100);
        let a = split_corpus(&recs, 7).unwrap();
        let b = split_corpus(&recs, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), (81, 9, 10));
        let ids: HashSet<&str> = a
            .train
            .iter()
            .chain(&a.eval)
            .chain(&a.test)
            .map(|r| r.source_id.as_str())
            .collect();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn split_ignores_input_order() {
        let recs = records(50);
        let mut reversed = recs.clone();
        reversed.reverse();
        assert_eq!(
            split_corpus(&recs, 3).unwrap(),
            split_corpus(&reversed, 3).unwrap()
        );
        assert_ne!(
            split_corpus(&recs, 3).unwrap().train,
            split_corpus(&recs, 4).unwrap().train
        );
    }

    #[test]
    fn split_needs_ten_records() {
        assert!(matches!(
            split_corpus(&records(9), 0),
            Err(CorpusError::TooFewRecords(9))
        ));
    }

    #[test]
    fn pool_reads_valid_lines() {
        let data = concat!(
            r#"{"id":"p1","role":"post","source":"ab","model":"m","text":"hello","created_at":"2024-01-01T00:00:00Z"}"#,
            "\n",
            r#"{"id":"p2","role":"comment","source":"cd","model":"m","text":"world","created_at":"2024-01-01T00:00:00Z"}"#,
            "\n\n",
            r#"{"id":"p3","role":"post","source":"ef","model":"m","text":"again","created_at":"2024-01-01T00:00:00+02:00"}"#,
            "\n"
        );
        let pool = read_text_pool(data.as_bytes()).unwrap();
        assert_eq!(pool.len(), 3);
        assert_eq!(pool[2].id, "p3");
    }

    #[test]
    fn pool_missing_text_is_schema_error() {
        let data = concat!(
            r#"{"id":"p1","role":"post","source":"ab","model":"m","text":"hello","created_at":"2024-01-01T00:00:00Z"}"#,
            "\n",
            r#"{"id":"p2","role":"post","source":"ab","model":"m","created_at":"2024-01-01T00:00:00Z"}"#,
            "\n"
        );
        match read_text_pool(data.as_bytes()) {
            Err(CorpusError::Schema { line, cause }) => {
                assert_eq!(line, 2);
                assert!(cause.contains("text"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_pool_file_is_empty() {
        assert!(read_text_pool("".as_bytes()).unwrap().is_empty());
    }
}
