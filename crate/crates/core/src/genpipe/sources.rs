use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenError, GenerationTask, Role};

/// One line of an events or tweets file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub id: String,
    #[serde(default)]
    pub topic: Option<String>,
    pub text: String,
}

/// Reads line-delimited source records. `origin` labels errors.
pub fn read_source_records<R: BufRead>(reader: R, origin: &str) -> Result<Vec<SourceRecord>, GenError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let schema = |cause: String| GenError::Schema {
            path: origin.to_string(),
            line: line_no,
            cause,
        };
        let line = line.map_err(|e| schema(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SourceRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if record.text.trim().is_empty() {
            return Err(schema("empty `text` field".into()));
        }
        if record.id.trim().is_empty() {
            return Err(schema("empty `id` field".into()));
        }
        out.push(record);
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<SourceRecord>, GenError> {
    let file = File::open(path).map_err(|source| GenError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_source_records(BufReader::new(file), &path.display().to_string())
}

/// Post tasks from summarized events, then comment tasks from tweets, each
/// in file order. Topics are carried through unchanged.
pub fn load_content_sources(
    events_path: impl AsRef<Path>,
    tweets_path: impl AsRef<Path>,
) -> Result<Vec<GenerationTask>, GenError> {
    let events = read_file(events_path.as_ref())?;
    let tweets = read_file(tweets_path.as_ref())?;
    let to_task = |role: Role| {
        move |r: SourceRecord| GenerationTask {
            id: r.id,
            role,
            content: r.text,
            topic: r.topic,
        }
    };
    Ok(events
        .into_iter()
        .map(to_task(Role::Post))
        .chain(tweets.into_iter().map(to_task(Role::Comment)))
        .collect())
}

/// Task counts per `(role, topic)`; tasks without a topic count under "".
pub fn topic_histogram(tasks: &[GenerationTask]) -> BTreeMap<(Role, String), usize> {
    let mut hist = BTreeMap::new();
    for task in tasks {
        *hist
            .entry((task.role, task.topic.clone().unwrap_or_default()))
            .or_insert(0) += 1;
    }
    hist
}
