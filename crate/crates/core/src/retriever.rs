//! Okapi BM25 over an in-memory inverted index.
//!
//! IDF uses the `ln((N - df + 0.5) / (df + 0.5) + 1)` form so scores are
//! never negative; a passage sharing no term with the query scores exactly
//! zero and is excluded from results.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Passage};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("passage not in index: {0:?}")]
    NotFound(String),
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("index snapshot does not match corpus: {0}")]
    SnapshotMismatch(String),
    #[error("index snapshot: {0}")]
    Snapshot(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub k1: f64,
    pub b: f64,
    /// Candidates fetched per retrieval (ten in the reference setup).
    pub top_k_retrieve: usize,
    /// Passages kept for the generator after filtering.
    pub top_k_context: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            top_k_retrieve: 10,
            top_k_context: 3,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k1.is_nan() || self.k1 <= 0.0 {
            return Err(RetrievalError::InvalidConfig(format!(
                "k1 must be > 0, got {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(RetrievalError::InvalidConfig(format!(
                "b must be in [0,1], got {}",
                self.b
            )));
        }
        if self.top_k_retrieve == 0 {
            return Err(RetrievalError::InvalidConfig("top_k_retrieve must be >= 1".into()));
        }
        if self.top_k_context > self.top_k_retrieve {
            return Err(RetrievalError::InvalidConfig(format!(
                "top_k_context ({}) exceeds top_k_retrieve ({})",
                self.top_k_context, self.top_k_retrieve
            )));
        }
        Ok(())
    }
}

/// Lowercases and splits on anything that is not alphanumeric. No stemming
/// or stopword removal.
/// Sums per-term contributions in sorted order, so passages whose scores
/// are equal as multisets of contributions get bit-identical totals and the
/// id tie-break applies.
fn canonical_sum(mut parts: Vec<f64>) -> f64 {
    parts.sort_by(f64::total_cmp);
    parts.into_iter().sum()
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the passage in the corpus.
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl Index {
    pub fn build(corpus: &Corpus) -> Self {
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.doc_count());
        let mut doc_lengths = Vec::with_capacity(corpus.doc_count());
        for (doc, passage) in corpus.iter().enumerate() {
            let tokens = tokenize(&passage.rendered());
            doc_ids.push(passage.id.clone());
            doc_lengths.push(tokens.len() as u32);
            let mut counts: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc: doc as u32, tf });
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = if doc_ids.is_empty() {
            0.0
        } else {
            total as f64 / doc_ids.len() as f64
        };
        Self {
            doc_ids,
            doc_lengths,
            avg_doc_length,
            postings,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, passage_id: &str) -> Option<u32> {
        self.doc_position(passage_id).map(|d| self.doc_lengths[d])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn term_freq(&self, term: &str, passage_id: &str) -> u32 {
        let Some(doc) = self.doc_position(passage_id) else {
            return 0;
        };
        self.postings
            .get(term)
            .and_then(|ps| ps.iter().find(|p| p.doc as usize == doc))
            .map_or(0, |p| p.tf)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    fn doc_position(&self, passage_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|id| id == passage_id)
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, tf: u32, doc: usize, cfg: &RetrievalConfig) -> f64 {
        let tf = tf as f64;
        let len = self.doc_lengths[doc] as f64;
        let norm = 1.0 - cfg.b + cfg.b * len / self.avg_doc_length;
        tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * norm)
    }

    /// BM25 score of one passage. Repeated query terms contribute once per
    /// occurrence.
    pub fn score(
        &self,
        query_terms: &[String],
        passage_id: &str,
        cfg: &RetrievalConfig,
    ) -> Result<f64, RetrievalError> {
        let doc = self
            .doc_position(passage_id)
            .ok_or_else(|| RetrievalError::NotFound(passage_id.to_string()))?;
        let mut parts = Vec::new();
        for term in query_terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            if let Some(p) = list.iter().find(|p| p.doc as usize == doc) {
                parts.push(self.idf(list.len()) * self.term_weight(p.tf, doc, cfg));
            }
        }
        Ok(canonical_sum(parts))
    }

    /// Top `k` (doc position, score) pairs, score descending, ties by
    /// ascending passage id. Zero scores are dropped.
    pub fn search(&self, query: &str, k: usize, cfg: &RetrievalConfig) -> Vec<(usize, f64)> {
        let terms = tokenize(query);
        let mut acc: HashMap<usize, Vec<f64>> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for p in list {
                let doc = p.doc as usize;
                acc.entry(doc).or_default().push(idf * self.term_weight(p.tf, doc, cfg));
            }
        }
        let mut hits: Vec<(usize, f64)> = acc
            .into_iter()
            .map(|(doc, parts)| (doc, canonical_sum(parts)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        hits.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.doc_ids[a.0].cmp(&self.doc_ids[b.0]))
        });
        hits.truncate(k);
        hits
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Checks that a loaded snapshot was built from `corpus`.
    pub fn check_matches(&self, corpus: &Corpus) -> Result<(), RetrievalError> {
        if self.doc_ids.len() != corpus.doc_count() {
            return Err(RetrievalError::SnapshotMismatch(format!(
                "index has {} passages, corpus has {}",
                self.doc_ids.len(),
                corpus.doc_count()
            )));
        }
        for (id, p) in self.doc_ids.iter().zip(corpus.iter()) {
            if *id != p.id {
                return Err(RetrievalError::SnapshotMismatch(format!(
                    "passage order differs at {id:?} / {:?}",
                    p.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPassage {
    pub passage: Passage,
    pub score: f64,
    pub rank: usize,
}

/// Corpus plus its index; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Retriever {
    corpus: Arc<Corpus>,
    index: Arc<Index>,
    config: RetrievalConfig,
}

impl Retriever {
    pub fn new(corpus: Arc<Corpus>, config: RetrievalConfig) -> Result<Self, RetrievalError> {
        config.validate()?;
        let index = Arc::new(Index::build(&corpus));
        Ok(Self { corpus, index, config })
    }

    pub fn with_index(corpus: Arc<Corpus>, index: Index, config: RetrievalConfig) -> Result<Self, RetrievalError> {
        config.validate()?;
        index.check_matches(&corpus)?;
        Ok(Self {
            corpus,
            index: Arc::new(index),
            config,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn config(&self) -> &RetrievalConfig {
        &self.config
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Vec<RankedPassage> {
        self.index
            .search(query, k, &self.config)
            .into_iter()
            .enumerate()
            .map(|(i, (doc, score))| RankedPassage {
                passage: self.corpus.passages()[doc].clone(),
                score,
                rank: i + 1,
            })
            .collect()
    }
}
