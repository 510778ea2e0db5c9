//! Synthesis of the compound multi-hop benchmark and of the Revelator
//! training sets.
//!
//! Benchmark construction: pick entities, ask the backend for one simple
//! question per entity passage, then combine 2-4 of an entity's questions
//! into a compound question whose gold answer is the sub-answers joined
//! with `" && "`. Each entity contributes at most one example, so splits
//! never share an entity.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Passage};
use crate::evalkit::{normalize_answer, EvalExample};
use crate::llm::templates::{self, Bindings, Slot, TemplateId};
use crate::llm::{Backend, GenParams, LlmError};
use crate::revelator::{QueryClass, Revelator, RevelatorError};

/// Longest accepted single-question answer, in normalized tokens.
pub const MAX_ANSWER_TOKENS: usize = 8;
/// Passages considered per entity.
pub const PASSAGES_PER_ENTITY: usize = 10;
pub const ANSWER_JOINER: &str = " && ";

#[derive(Debug, Error)]
pub enum BenchgenError {
    #[error("requested {requested} entities but only {available} available")]
    NotEnoughEntities { requested: usize, available: usize },
    #[error("generation rejected: {0}")]
    Rejected(Rejection),
    #[error("backend returned empty output")]
    EmptyOutput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("pool exhausted: needed {needed} examples, produced {produced} (shortfall {})", needed - produced)]
    Shortfall { needed: usize, produced: usize },
    #[error("missing source data for {task}: {what}")]
    MissingSource { task: &'static str, what: &'static str },
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Parse(String),
    AnswerNotInPassage,
    AnswerTooLong(usize),
    Uncombinable,
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::Parse(e) => write!(f, "unparseable output ({e})"),
            Rejection::AnswerNotInPassage => f.write_str("answer not found in passage"),
            Rejection::AnswerTooLong(n) => write!(f, "answer has {n} tokens"),
            Rejection::Uncombinable => f.write_str("questions cannot be combined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityQA {
    pub entity: String,
    pub passage_id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompoundExample {
    pub entity: String,
    pub sub_questions: Vec<String>,
    pub sub_answers: Vec<String>,
    pub compound_question: String,
    pub answer: String,
    pub hop_count: usize,
}

impl CompoundExample {
    pub fn to_eval_example(&self, id: String) -> EvalExample {
        EvalExample {
            id,
            question: self.compound_question.clone(),
            answers: vec![self.answer.clone()],
            hop_count: Some(self.hop_count),
            gold_class: Some(QueryClass::Compound),
        }
    }
}

/// `n` distinct entities in seeded random order, each with up to ten of its
/// passages in corpus order.
pub fn sample_entities(corpus: &Corpus, n: usize, rng_seed: u64) -> Result<Vec<(String, Vec<Passage>)>, BenchgenError> {
    if n == 0 {
        return Err(BenchgenError::InvalidInput("n must be >= 1".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Passage>> = HashMap::new();
    for p in corpus {
        let Some(entity) = p.entity.as_ref().filter(|e| !e.trim().is_empty()) else {
            continue;
        };
        let group = groups.entry(entity.clone()).or_insert_with(|| {
            order.push(entity.clone());
            Vec::new()
        });
        if group.len() < PASSAGES_PER_ENTITY {
            group.push(p.clone());
        }
    }
    if order.len() < n {
        return Err(BenchgenError::NotEnoughEntities {
            requested: n,
            available: order.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    order.shuffle(&mut rng);
    order.truncate(n);
    Ok(order
        .into_iter()
        .map(|e| {
            let ps = groups.remove(&e).unwrap_or_default();
            (e, ps)
        })
        .collect())
}

fn strip_fences(raw: &str) -> &str {
    let s = raw.trim();
    let Some(inner) = s.strip_prefix("```") else {
        return s;
    };
    let inner = inner.strip_suffix("```").unwrap_or(inner).trim_end();
    match inner.split_once('\n') {
        Some((first, rest)) if !first.trim().contains(' ') && !first.trim().is_empty() => rest.trim(),
        _ => inner.trim(),
    }
}

fn complete(backend: &dyn Backend, id: TemplateId, bindings: Bindings) -> Result<String, BenchgenError> {
    let prompt = templates::render_prompt(id, &bindings).map_err(LlmError::from)?;
    Ok(backend.complete(&prompt, &GenParams::default())?)
}

/// Asks for one simple question about `entity` answerable from `passage`.
/// The answer must be short and literally present in the passage text.
pub fn gen_single_qa(entity: &str, passage: &Passage, backend: &dyn Backend) -> Result<EntityQA, BenchgenError> {
    let bindings: Bindings = [(Slot::Title, entity.to_string()), (Slot::Doc, passage.text.clone())]
        .into_iter()
        .collect();
    let out = complete(backend, TemplateId::SingleQaGen, bindings)?;
    let reject = |r| Err(BenchgenError::Rejected(r));
    let value: serde_json::Value = match serde_json::from_str(strip_fences(&out)) {
        Ok(v) => v,
        Err(e) => return reject(Rejection::Parse(e.to_string())),
    };
    let field = |k: &str| {
        value
            .get(k)
            .or_else(|| value.get(k.to_lowercase()))
            .and_then(|v| v.as_str())
            .map(str::trim)
            .filter(|s| !s.is_empty())
    };
    let (Some(question), Some(answer)) = (field("Question"), field("Answer")) else {
        return reject(Rejection::Parse("expected non-empty Question and Answer".into()));
    };
    let norm = normalize_answer(answer);
    let tokens = norm.split_whitespace().count();
    if tokens == 0 || !normalize_answer(&passage.text).contains(&norm) {
        return reject(Rejection::AnswerNotInPassage);
    }
    if tokens > MAX_ANSWER_TOKENS {
        return reject(Rejection::AnswerTooLong(tokens));
    }
    Ok(EntityQA {
        entity: entity.to_string(),
        passage_id: passage.id.clone(),
        question: question.to_string(),
        answer: answer.to_string(),
    })
}

/// Combines 2-4 questions about one entity. A bare "no" from the backend
/// means the questions do not combine.
pub fn compose_compound(qa_list: &[EntityQA], backend: &dyn Backend) -> Result<CompoundExample, BenchgenError> {
    if !(2..=4).contains(&qa_list.len()) {
        return Err(BenchgenError::InvalidInput(format!(
            "need 2-4 questions, got {}",
            qa_list.len()
        )));
    }
    let entity = &qa_list[0].entity;
    if qa_list.iter().any(|q| &q.entity != entity) {
        return Err(BenchgenError::InvalidInput(
            "questions are about different entities".into(),
        ));
    }
    let questions: Vec<&str> = qa_list.iter().map(|q| q.question.as_str()).collect();
    let bindings: Bindings = [(Slot::SimpleQuestions, templates::render_simple_questions(&questions))]
        .into_iter()
        .collect();
    let out = complete(backend, TemplateId::CompoundCompose, bindings)?;
    let line = out.trim().strip_prefix("Compound Question:").unwrap_or(out.trim());
    let question = strip_fences(line).trim_matches('`').trim();
    if question.is_empty() {
        return Err(BenchgenError::EmptyOutput);
    }
    let bare = question
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_lowercase();
    if bare == "no" {
        return Err(BenchgenError::Rejected(Rejection::Uncombinable));
    }
    let answers: Vec<String> = qa_list.iter().map(|q| q.answer.clone()).collect();
    Ok(CompoundExample {
        entity: entity.clone(),
        sub_questions: questions.iter().map(|q| q.to_string()).collect(),
        answer: answers.join(ANSWER_JOINER),
        sub_answers: answers,
        compound_question: question.to_string(),
        hop_count: qa_list.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenStats {
    pub entities_used: usize,
    pub qa_attempts: usize,
    pub qa_rejected: usize,
    pub compose_rejected: usize,
    pub duplicate_questions: usize,
    pub entities_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub train: Vec<CompoundExample>,
    pub dev: Vec<CompoundExample>,
    pub test: Vec<CompoundExample>,
    pub stats: GenStats,
}

impl Benchmark {
    pub fn splits(&self) -> [(&'static str, &[CompoundExample]); 3] {
        [("train", &self.train), ("dev", &self.dev), ("test", &self.test)]
    }

    /// Writes `train.jsonl`, `dev.jsonl` and `test.jsonl` in the evaluation
    /// dataset schema. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchgenError> {
        let mut paths = Vec::new();
        for (name, examples) in self.splits() {
            let path = dir.join(format!("{name}.jsonl"));
            let lines = examples.iter().enumerate().map(|(i, ex)| {
                serde_json::to_string(&ex.to_eval_example(format!("{name}-{:05}", i + 1))).expect("example serializes")
            });
            write_lines(&path, lines)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), BenchgenError> {
    let io = |source| BenchgenError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Generates compound examples entity by entity until `counts` is met.
/// Single-question generation fans out in parallel; everything that touches
/// the random generator runs in a fixed order.
pub fn build_benchmark(
    corpus: &Corpus,
    counts: SplitCounts,
    rng_seed: u64,
    backend: &dyn Backend,
) -> Result<Benchmark, BenchgenError> {
    let needed = counts.total();
    if needed == 0 {
        return Err(BenchgenError::InvalidInput("all split counts are zero".into()));
    }
    let entity_count = corpus
        .iter()
        .filter_map(|p| p.entity.as_deref())
        .filter(|e| !e.trim().is_empty())
        .collect::<HashSet<_>>()
        .len();
    if entity_count == 0 {
        return Err(BenchgenError::Shortfall { needed, produced: 0 });
    }
    let entities = sample_entities(corpus, entity_count, rng_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(1));
    let mut stats = GenStats::default();
    let mut seen_questions = HashSet::new();
    let mut pool = Vec::with_capacity(needed);

    for (entity, passages) in entities {
        if pool.len() == needed {
            break;
        }
        stats.qa_attempts += passages.len();
        let generated: Vec<Result<EntityQA, BenchgenError>> = passages
            .par_iter()
            .map(|p| gen_single_qa(&entity, p, backend))
            .collect();
        let mut valid = Vec::new();
        for g in generated {
            match g {
                Ok(qa) => valid.push(qa),
                Err(BenchgenError::Rejected(r)) => {
                    log::debug!("{entity}: {r}");
                    stats.qa_rejected += 1;
                }
                Err(e) => return Err(e),
            }
        }
        if valid.len() < 2 {
            stats.entities_skipped += 1;
            continue;
        }
        let hops = rng.gen_range(2..=valid.len().min(4));
        let picked: Vec<EntityQA> = rand::seq::index::sample(&mut rng, valid.len(), hops)
            .into_iter()
            .map(|i| valid[i].clone())
            .collect();
        match compose_compound(&picked, backend) {
            Ok(example) => {
                if seen_questions.insert(normalize_answer(&example.compound_question)) {
                    stats.entities_used += 1;
                    pool.push(example);
                } else {
                    stats.duplicate_questions += 1;
                }
            }
            Err(BenchgenError::Rejected(_)) | Err(BenchgenError::EmptyOutput) => stats.compose_rejected += 1,
            Err(e) => return Err(e),
        }
    }

    if pool.len() < needed {
        return Err(BenchgenError::Shortfall {
            needed,
            produced: pool.len(),
        });
    }
    let test = pool.split_off(counts.train + counts.dev);
    let dev = pool.split_off(counts.train);
    Ok(Benchmark {
        train: pool,
        dev,
        test,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passage_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub question: String,
    pub hops: Vec<Hop>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleHopSource {
    pub question: String,
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub passage_ids: Vec<String>,
}

/// Raw material for the five training sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSources {
    pub straightforward: Vec<String>,
    pub single_hop: Vec<SingleHopSource>,
    pub chains: Vec<ReasoningChain>,
    pub compound: Vec<CompoundExample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainingRecord {
    Routing {
        question: String,
        class: QueryClass,
    },
    Decomposition {
        question: String,
        sub_questions: Vec<String>,
    },
    Refinement {
        question: String,
        thought: Vec<QaPair>,
        seed: String,
    },
    Relevance {
        question: String,
        passage_id: String,
        doc: String,
        is_rel: bool,
    },
    Ending {
        question: String,
        trace: Vec<QaPair>,
        is_ending: bool,
    },
}

impl TrainingRecord {
    pub fn task(&self) -> &'static str {
        match self {
            TrainingRecord::Routing { .. } => "routing",
            TrainingRecord::Decomposition { .. } => "decomposition",
            TrainingRecord::Refinement { .. } => "refinement",
            TrainingRecord::Relevance { .. } => "relevance",
            TrainingRecord::Ending { .. } => "ending",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingOptions {
    /// Distractor passages sampled per gold passage.
    pub negatives_per_positive: usize,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            negatives_per_positive: 1,
        }
    }
}

type TaskResult = Result<Vec<TrainingRecord>, BenchgenError>;

#[derive(Debug)]
pub struct TrainingSets {
    pub routing: TaskResult,
    pub decomposition: TaskResult,
    pub refinement: TaskResult,
    pub relevance: TaskResult,
    pub ending: TaskResult,
    /// Backend relevance labels that failed to parse and were dropped.
    pub relevance_skipped: usize,
}

impl TrainingSets {
    pub fn tasks(&self) -> [(&'static str, &TaskResult); 5] {
        [
            ("routing", &self.routing),
            ("decomposition", &self.decomposition),
            ("refinement", &self.refinement),
            ("relevance", &self.relevance),
            ("ending", &self.ending),
        ]
    }

    /// Writes `<task>.jsonl` for each task that succeeded and returns the
    /// paths written alongside the failures that were skipped.
    pub fn write(&self, dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>), BenchgenError> {
        let mut written = Vec::new();
        let mut failed = Vec::new();
        for (name, result) in self.tasks() {
            match result {
                Ok(records) => {
                    let path = dir.join(format!("{name}.jsonl"));
                    write_lines(
                        &path,
                        records
                            .iter()
                            .map(|r| serde_json::to_string(r).expect("record serializes")),
                    )?;
                    written.push(path);
                }
                Err(e) => failed.push(format!("{name}: {e}")),
            }
        }
        Ok((written, failed))
    }
}

fn pairs(hops: &[Hop]) -> Vec<QaPair> {
    hops.iter()
        .map(|h| QaPair {
            question: h.question.clone(),
            answer: h.answer.clone(),
        })
        .collect()
}

/// Builds the routing, decomposition, refinement, relevance and ending sets.
///
/// Relevance records need `corpus` for passage text and distractors. When a
/// `labeler` is given, relevance labels come from it instead of gold
/// provenance.
pub fn build_training_sets(
    sources: &TrainingSources,
    corpus: Option<&Corpus>,
    labeler: Option<&Revelator>,
    rng_seed: u64,
    options: TrainingOptions,
) -> TrainingSets {
    let routing = Ok(sources
        .straightforward
        .iter()
        .map(|q| (q, QueryClass::Straightforward))
        .chain(sources.single_hop.iter().map(|s| (&s.question, QueryClass::Single)))
        .chain(sources.chains.iter().map(|c| (&c.question, QueryClass::Complex)))
        .chain(
            sources
                .compound
                .iter()
                .map(|c| (&c.compound_question, QueryClass::Compound)),
        )
        .map(|(q, class)| TrainingRecord::Routing {
            question: q.clone(),
            class,
        })
        .collect());

    let decomposition = if sources.compound.is_empty() {
        Err(BenchgenError::MissingSource {
            task: "decomposition",
            what: "compound pool",
        })
    } else {
        Ok(sources
            .compound
            .iter()
            .map(|c| TrainingRecord::Decomposition {
                question: c.compound_question.clone(),
                sub_questions: c.sub_questions.clone(),
            })
            .collect())
    };

    let chains_missing = |task| BenchgenError::MissingSource {
        task,
        what: "reasoning chains",
    };
    let usable_chains: Vec<&ReasoningChain> = sources.chains.iter().filter(|c| !c.hops.is_empty()).collect();

    let refinement = if usable_chains.is_empty() {
        Err(chains_missing("refinement"))
    } else {
        let mut records = Vec::new();
        for chain in &usable_chains {
            for i in 0..chain.hops.len() {
                records.push(TrainingRecord::Refinement {
                    question: chain.question.clone(),
                    thought: pairs(&chain.hops[..i]),
                    seed: chain.hops[i].question.clone(),
                });
            }
        }
        // Single-step questions map to themselves.
        for s in &sources.single_hop {
            records.push(TrainingRecord::Refinement {
                question: s.question.clone(),
                thought: Vec::new(),
                seed: s.question.clone(),
            });
        }
        Ok(records)
    };

    let ending = if usable_chains.is_empty() {
        Err(chains_missing("ending"))
    } else {
        Ok(usable_chains
            .iter()
            .flat_map(|chain| {
                (1..=chain.hops.len()).map(move |i| TrainingRecord::Ending {
                    question: chain.question.clone(),
                    trace: pairs(&chain.hops[..i]),
                    is_ending: i == chain.hops.len(),
                })
            })
            .collect())
    };

    let mut relevance_skipped = 0;
    let relevance = match corpus {
        None => Err(BenchgenError::MissingSource {
            task: "relevance",
            what: "passage corpus",
        }),
        Some(corpus) => build_relevance(sources, corpus, labeler, rng_seed, options, &mut relevance_skipped),
    };

    TrainingSets {
        routing,
        decomposition,
        refinement,
        relevance,
        ending,
        relevance_skipped,
    }
}

fn build_relevance(
    sources: &TrainingSources,
    corpus: &Corpus,
    labeler: Option<&Revelator>,
    rng_seed: u64,
    options: TrainingOptions,
    skipped: &mut usize,
) -> TaskResult {
    let queries: Vec<(&str, Vec<&str>)> = sources
        .single_hop
        .iter()
        .map(|s| (s.question.as_str(), s.passage_ids.iter().map(String::as_str).collect()))
        .chain(sources.chains.iter().flat_map(|c| {
            c.hops
                .iter()
                .map(|h| (h.question.as_str(), h.passage_id.iter().map(String::as_str).collect()))
        }))
        .filter(|(_, gold): &(&str, Vec<&str>)| !gold.is_empty())
        .collect();
    if queries.is_empty() {
        return Err(BenchgenError::MissingSource {
            task: "relevance",
            what: "gold passage ids",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut records = Vec::new();
    for (question, gold) in queries {
        let gold_set: HashSet<&str> = gold.iter().copied().collect();
        let mut pairs: Vec<(&Passage, bool)> = Vec::new();
        for id in &gold {
            let passage = corpus
                .get_passage(id)
                .map_err(|e| BenchgenError::InvalidInput(e.to_string()))?;
            pairs.push((passage, true));
        }
        let distractors: Vec<&Passage> = corpus.iter().filter(|p| !gold_set.contains(p.id.as_str())).collect();
        let want = (gold.len() * options.negatives_per_positive).min(distractors.len());
        for p in distractors.choose_multiple(&mut rng, want) {
            pairs.push((p, false));
        }
        for (passage, provenance) in pairs {
            let is_rel = match labeler {
                None => provenance,
                Some(r) => match r.judge_relevance(question, passage) {
                    Ok(v) => v.is_rel,
                    Err(RevelatorError::Backend(e)) => return Err(e.into()),
                    Err(e) => {
                        log::warn!("dropping relevance label: {e}");
                        *skipped += 1;
                        continue;
                    }
                },
            };
            records.push(TrainingRecord::Relevance {
                question: question.to_string(),
                passage_id: passage.id.clone(),
                doc: passage.rendered(),
                is_rel,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{FnBackend, ScriptedOracle};

    fn entity_corpus() -> Corpus {
        Corpus::from_passages([
            Passage::new("a1", "Alpha", "Alpha was founded in 1901.").with_entity("Alpha"),
            Passage::new("b1", "Beta", "Beta is red.").with_entity("Beta"),
            Passage::new("a2", "Alpha", "Alpha is based in Rome.").with_entity("Alpha"),
            Passage::new("c1", "Gamma", "Gamma sells tea.").with_entity("Gamma"),
            Passage::new("x", "", "No entity here."),
        ])
        .unwrap()
    }

    #[test]
    fn sampling() {
        let c = entity_corpus();
        let all = sample_entities(&c, 3, 7).unwrap();
        let mut names: Vec<_> = all.iter().map(|(e, _)| e.clone()).collect();
        names.sort();
        assert_eq!(names, ["Alpha", "Beta", "Gamma"]);
        let alpha = all.iter().find(|(e, _)| e == "Alpha").unwrap();
        assert_eq!(alpha.1.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["a1", "a2"]);
        assert_eq!(sample_entities(&c, 3, 7).unwrap(), all);
        match sample_entities(&c, 5, 7) {
            Err(e @ BenchgenError::NotEnoughEntities { available: 3, .. }) => {
                assert!(e.to_string().contains("3 available"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_qa_examples() {
        let liu = Passage::new(
            "liu",
            "Liu Xiang",
            "Liu Xiang is a legendary Chinese hurdler. He was born on July 13, 1983, in Shanghai.",
        );
        let yao = Passage::new(
            "yao",
            "Yao Ming",
            "Yao Ming, born on September 12, 1980, is a retired Chinese professional basketball player.",
        );
        let corpus = Corpus::from_passages([liu.clone(), yao.clone()]).unwrap();
        let oracle = ScriptedOracle::new()
            .qa("liu", "Which year was Liu Xiang born?", "1983")
            .qa("yao", "What sports did Yao Ming play?", "basketball")
            .with_passages(&corpus);
        let qa = gen_single_qa("Liu Xiang", &liu, &oracle).unwrap();
        assert_eq!(qa.question, "Which year was Liu Xiang born?");
        assert_eq!(qa.answer, "1983");
        assert_eq!(gen_single_qa("Yao Ming", &yao, &oracle).unwrap().answer, "basketball");

        let liar = ScriptedOracle::new()
            .qa("liu", "Where did Liu Xiang retire?", "Beijing")
            .with_passages(&corpus);
        assert!(matches!(
            gen_single_qa("Liu Xiang", &liu, &liar),
            Err(BenchgenError::Rejected(Rejection::AnswerNotInPassage))
        ));
        let garbage = ScriptedOracle::new()
            .qa_raw("liu", "Q: when? A: 1983")
            .with_passages(&corpus);
        assert!(matches!(
            gen_single_qa("Liu Xiang", &liu, &garbage),
            Err(BenchgenError::Rejected(Rejection::Parse(_)))
        ));
    }

    fn qa(entity: &str, q: &str, a: &str) -> EntityQA {
        EntityQA {
            entity: entity.into(),
            passage_id: "p".into(),
            question: q.into(),
            answer: a.into(),
        }
    }

    #[test]
    fn compose_examples() {
        let arthur = [
            qa(
                "Arthur's Magazine",
                "When was Arthur's Magazine first published?",
                "1844",
            ),
            qa(
                "Arthur's Magazine",
                "What is the main focus of Arthur's Magazine content?",
                "literature",
            ),
        ];
        let kmbz = [
            qa("KMBZ-FM", "What frequency does KMBZ-FM broadcast on?", "98.1"),
            qa("KMBZ-FM", "What music did KMBZ-FM play in 1975?", "beautiful music"),
            qa(
                "KMBZ-FM",
                "What was the share of KMBZ in the Kansas City Arbitron ratings report in February 2011?",
                "3.1",
            ),
        ];
        let arthur_q = "When was Arthur's Magazine first published, and what is the main focus of its content?";
        let kmbz_q = "What is the broadcasting frequency of KMBZ-FM, what type of music did it play in 1975, and what was its share in the Kansas City Arbitron ratings report in February 2011?";
        let oracle = ScriptedOracle::new()
            .compose(
                &arthur.iter().map(|q| q.question.as_str()).collect::<Vec<_>>(),
                &format!("```{arthur_q} ```"),
            )
            .compose(&kmbz.iter().map(|q| q.question.as_str()).collect::<Vec<_>>(), kmbz_q);
        let ex = compose_compound(&arthur, &oracle).unwrap();
        assert_eq!(ex.compound_question, arthur_q);
        assert_eq!(ex.answer, "1844 && literature");
        assert_eq!(ex.hop_count, 2);
        let ex = compose_compound(&kmbz, &oracle).unwrap();
        assert_eq!(ex.compound_question, kmbz_q);
        assert_eq!(ex.hop_count, 3);
        assert_eq!(ex.answer.split(ANSWER_JOINER).count(), 3);

        let no = FnBackend(|_: &str| Ok("no".to_string()));
        assert!(matches!(
            compose_compound(&arthur, &no),
            Err(BenchgenError::Rejected(Rejection::Uncombinable))
        ));
        let empty = FnBackend(|_: &str| Ok("  ".to_string()));
        assert!(matches!(
            compose_compound(&arthur, &empty),
            Err(BenchgenError::EmptyOutput)
        ));
        assert!(matches!(
            compose_compound(&arthur[..1], &no),
            Err(BenchgenError::InvalidInput(_))
        ));
        let mixed = [arthur[0].clone(), kmbz[0].clone()];
        assert!(matches!(
            compose_compound(&mixed, &no),
            Err(BenchgenError::InvalidInput(_))
        ));
    }

    fn chain() -> ReasoningChain {
        ReasoningChain {
            question: "Who is the father-in-law of Queen Hyojeong?".into(),
            hops: vec![
                Hop {
                    question: "Who is the husband of Queen Hyojeong?".into(),
                    answer: "Heonjong of Joseon".into(),
                    passage_id: Some("h1".into()),
                },
                Hop {
                    question: "Who is the father of Heonjong of Joseon?".into(),
                    answer: "Crown Prince Hyomyeong".into(),
                    passage_id: Some("h2".into()),
                },
            ],
        }
    }

    #[test]
    fn ending_records_follow_last_hop_rule() {
        let sources = TrainingSources {
            chains: vec![chain()],
            ..Default::default()
        };
        let sets = build_training_sets(&sources, None, None, 1, TrainingOptions::default());
        let ending = sets.ending.unwrap();
        assert_eq!(ending.len(), 2);
        match (&ending[0], &ending[1]) {
            (
                TrainingRecord::Ending {
                    trace: t1,
                    is_ending: e1,
                    ..
                },
                TrainingRecord::Ending {
                    trace: t2,
                    is_ending: e2,
                    ..
                },
            ) => {
                assert_eq!((t1.len(), *e1), (1, false));
                assert_eq!((t2.len(), *e2), (2, true));
            }
            other => panic!("{other:?}"),
        }
        let refinement = sets.refinement.unwrap();
        assert_eq!(refinement.len(), 2);
        assert!(
            matches!(&refinement[1], TrainingRecord::Refinement { thought, seed, .. }
            if thought.len() == 1 && seed == "Who is the father of Heonjong of Joseon?")
        );
        assert!(sets.decomposition.is_err());
        assert!(sets.relevance.is_err());
    }

    #[test]
    fn decomposition_and_routing_counts() {
        let compound = |i: usize| CompoundExample {
            entity: format!("E{i}"),
            sub_questions: vec!["a?".into(), "b?".into(), "c?".into()],
            sub_answers: vec!["1".into(), "2".into(), "3".into()],
            compound_question: format!("compound {i}?"),
            answer: "1 && 2 && 3".into(),
            hop_count: 3,
        };
        let sources = TrainingSources {
            straightforward: (0..5).map(|i| format!("common {i}?")).collect(),
            single_hop: (0..5)
                .map(|i| SingleHopSource {
                    question: format!("single {i}?"),
                    answer: None,
                    passage_ids: vec![],
                })
                .collect(),
            chains: (0..5).map(|_| chain()).collect(),
            compound: (0..5).map(compound).collect(),
        };
        let sets = build_training_sets(&sources, None, None, 1, TrainingOptions::default());
        let routing = sets.routing.unwrap();
        assert_eq!(routing.len(), 20);
        let labels: HashSet<String> = routing
            .iter()
            .map(|r| match r {
                TrainingRecord::Routing { class, .. } => class.to_string(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(labels.len(), 4);
        let decomposition = sets.decomposition.unwrap();
        assert!(
            matches!(&decomposition[0], TrainingRecord::Decomposition { sub_questions, .. } if sub_questions.len() == 3)
        );
        // 5 chains x 2 hops, plus 5 single-step passthroughs.
        assert_eq!(sets.refinement.unwrap().len(), 15);
    }

    #[test]
    fn relevance_records() {
        let corpus = Corpus::from_passages(
            ["h1", "h2", "d1", "d2", "d3"]
                .iter()
                .map(|id| Passage::new(*id, "", format!("text of {id}"))),
        )
        .unwrap();
        let sources = TrainingSources {
            chains: vec![chain()],
            ..Default::default()
        };
        let sets = build_training_sets(&sources, Some(&corpus), None, 3, TrainingOptions::default());
        let rel = sets.relevance.unwrap();
        assert_eq!(rel.len(), 4);
        let positives = rel
            .iter()
            .filter(|r| matches!(r, TrainingRecord::Relevance { is_rel: true, .. }))
            .count();
        assert_eq!(positives, 2);
        let again = build_training_sets(&sources, Some(&corpus), None, 3, TrainingOptions::default());
        assert_eq!(again.relevance.unwrap(), rel);

        let labeler = Revelator::new(std::sync::Arc::new(FnBackend(|_: &str| Ok("false".to_string()))));
        let sets = build_training_sets(&sources, Some(&corpus), Some(&labeler), 3, TrainingOptions::default());
        assert!(sets
            .relevance
            .unwrap()
            .iter()
            .all(|r| matches!(r, TrainingRecord::Relevance { is_rel: false, .. })));
    }

    #[test]
    fn records_round_trip_through_schema() {
        let rec = TrainingRecord::Ending {
            question: "q".into(),
            trace: vec![QaPair {
                question: "a".into(),
                answer: "b".into(),
            }],
            is_ending: true,
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.starts_with(r#"{"task":"ending""#));
        assert_eq!(serde_json::from_str::<TrainingRecord>(&line).unwrap(), rec);
        assert!(serde_json::from_str::<TrainingRecord>(r#"{"task":"ending","question":"q"}"#).is_err());
        assert!(
            serde_json::from_str::<TrainingRecord>(r#"{"task":"routing","question":"q","class":"complex","x":1}"#)
                .is_err()
        );
    }
}
