use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use super::records::Record;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?} (first seen on line {first_line})")]
    Duplicate { line: usize, first_line: usize, id: String },
}

impl IngestError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::Io { .. } => None,
            IngestError::Invalid { line, .. } | IngestError::Duplicate { line, .. } => Some(*line),
        }
    }
}

/// A field present on input but not part of the record kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub field: String,
}

/// Records of one kind together with their source line numbers.
#[derive(Debug, Clone)]
pub struct Corpus<T> {
    pub records: Vec<T>,
    pub lines: Vec<usize>,
    pub warnings: Vec<LoadWarning>,
}

impl<T> Corpus<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<T> {
        self.records
    }
}

/// Load and validate a `.jsonl` file of one record kind.
pub fn load_corpus<T: Record>(path: impl AsRef<Path>) -> Result<Corpus<T>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io { source, .. } => IngestError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

/// Same as [`load_corpus`] for an arbitrary reader. Blank lines are skipped
/// but still counted.
pub fn read_corpus<T: Record, R: Read>(reader: R) -> Result<Corpus<T>, IngestError> {
    let mut corpus = Corpus { records: Vec::new(), lines: Vec::new(), warnings: Vec::new() };
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |message: String| IngestError::Invalid { line: line_no, message };

        let value: Value = serde_json::from_str(&line).map_err(|e| invalid(format!("malformed JSON: {e}")))?;
        let Value::Object(mut obj) = value else {
            return Err(invalid("expected a JSON object".into()));
        };
        for field in T::REQUIRED {
            if obj.get(*field).is_none_or(Value::is_null) {
                return Err(invalid(format!("{field} required")));
            }
        }
        let unknown: Vec<String> = obj.keys().filter(|k| !T::FIELDS.contains(&k.as_str())).cloned().collect();
        for field in unknown {
            log::warn!("{} line {line_no}: unknown field {field:?} ignored", T::KIND);
            obj.remove(&field);
            corpus.warnings.push(LoadWarning { line: line_no, field });
        }

        let record: T = serde_json::from_value(Value::Object(obj)).map_err(|e| invalid(e.to_string()))?;
        record.validate().map_err(invalid)?;

        if let Some(key) = record.key() {
            if let Some(&first_line) = seen.get(&key) {
                return Err(IngestError::Duplicate { line: line_no, first_line, id: key });
            }
            seen.insert(key, line_no);
        }
        corpus.records.push(record);
        corpus.lines.push(line_no);
    }
    Ok(corpus)
}

/// Write records back out, one compact JSON object per line.
pub fn write_corpus<T: Record, W: Write>(records: &[T], writer: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(writer);
    for r in records {
        let mut value = serde_json::to_value(r).map_err(std::io::Error::other)?;
        if let Value::Object(obj) = &mut value {
            // drop nulls so optional fields stay absent, as on input
            let kept: Map<String, Value> = std::mem::take(obj).into_iter().filter(|(_, v)| !v.is_null()).collect();
            *obj = kept;
        }
        serde_json::to_writer(&mut out, &value).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
