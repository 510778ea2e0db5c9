//! Passage collection: ingestion from JSONL/TSV, id lookup, and snapshots.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: duplicate passage id {id:?}")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: passage text is empty")]
    EmptyText { line: usize },
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("passage not found: {0:?}")]
    NotFound(String),
    #[error("unknown corpus format {0:?} (expected jsonl or tsv)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single retrievable text unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<String>,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            text: text.into(),
            entity: None,
        }
    }

    pub fn with_entity(mut self, entity: impl Into<String>) -> Self {
        self.entity = Some(entity.into());
        self
    }

    /// `"title: text"`, or just the text for untitled passages. This is the
    /// form used both for indexing and for prompts.
    pub fn rendered(&self) -> String {
        if self.title.trim().is_empty() {
            self.text.clone()
        } else {
            format!("{}: {}", self.title, self.text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(Self::Jsonl),
            "tsv" => Ok(Self::Tsv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Jsonl => f.write_str("jsonl"),
            Self::Tsv => f.write_str("tsv"),
        }
    }
}

/// Immutable, insertion-ordered passage store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a corpus from already-constructed passages, applying the same
    /// validation as [`Corpus::ingest`]. Line numbers in errors are 1-based
    /// positions in `passages`.
    pub fn from_passages(passages: impl IntoIterator<Item = Passage>) -> Result<Self, CorpusError> {
        let mut corpus = Self::new();
        for (i, p) in passages.into_iter().enumerate() {
            corpus.push(p, i + 1)?;
        }
        Ok(corpus)
    }

    /// Reads one passage per non-blank line. Input order is preserved.
    pub fn ingest<R: BufRead>(reader: R, format: CorpusFormat) -> Result<Self, CorpusError> {
        let mut corpus = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let passage = match format {
                CorpusFormat::Jsonl => parse_jsonl_record(&line, line_no)?,
                CorpusFormat::Tsv => parse_tsv_record(&line, line_no)?,
            };
            corpus.push(passage, line_no)?;
        }
        Ok(corpus)
    }

    pub fn load(path: &Path, format: CorpusFormat) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        Self::ingest(std::io::BufReader::new(file), format)
    }

    /// Writes the corpus as JSONL; reloading it with `CorpusFormat::Jsonl`
    /// yields an identical corpus.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), CorpusError> {
        for p in &self.passages {
            let line = serde_json::to_string(p).expect("passage serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), CorpusError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_snapshot(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn push(&mut self, passage: Passage, line: usize) -> Result<(), CorpusError> {
        if passage.text.trim().is_empty() {
            return Err(CorpusError::EmptyText { line });
        }
        if passage.id.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                reason: "empty id".into(),
            });
        }
        if self.by_id.contains_key(&passage.id) {
            return Err(CorpusError::DuplicateId { id: passage.id, line });
        }
        self.by_id.insert(passage.id.clone(), self.passages.len());
        self.passages.push(passage);
        Ok(())
    }

    pub fn get_passage(&self, id: &str) -> Result<&Passage, CorpusError> {
        self.by_id
            .get(id)
            .map(|&i| &self.passages[i])
            .ok_or_else(|| CorpusError::NotFound(id.to_string()))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn doc_count(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Passage> {
        self.passages.iter()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Passage;
    type IntoIter = std::slice::Iter<'a, Passage>;

    fn into_iter(self) -> Self::IntoIter {
        self.passages.iter()
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    #[serde(default)]
    title: Option<String>,
    text: Option<String>,
    #[serde(default)]
    entity: Option<String>,
}

fn parse_jsonl_record(line: &str, line_no: usize) -> Result<Passage, CorpusError> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        reason: e.to_string(),
    })?;
    // Numeric ids are common in dumped corpora; accept them as strings.
    let id = match raw.id {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: format!("id must be a string or number, got {other}"),
            })
        }
    };
    let text = raw.text.ok_or_else(|| CorpusError::Malformed {
        line: line_no,
        reason: "missing field `text`".into(),
    })?;
    Ok(Passage {
        id,
        title: raw.title.unwrap_or_default(),
        text,
        entity: raw.entity,
    })
}

fn parse_tsv_record(line: &str, line_no: usize) -> Result<Passage, CorpusError> {
    let mut fields = line.splitn(3, '\t');
    match (fields.next(), fields.next(), fields.next()) {
        (Some(id), Some(title), Some(text)) => Ok(Passage::new(id, title, text)),
        _ => Err(CorpusError::Malformed {
            line: line_no,
            reason: "expected id<TAB>title<TAB>text".into(),
        }),
    }
}
