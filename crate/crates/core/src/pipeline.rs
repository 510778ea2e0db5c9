//! Noise-filtered single-step retrieval and the four-way adaptive dispatch.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::llm::templates::{self, Bindings, Slot, TemplateId};
use crate::llm::{Backend, GenParams, LlmError};
use crate::retriever::{Index, RetrievalConfig, RetrievalError, Retriever};
use crate::revelator::{QueryClass, ReasoningTrace, Revelator, RevelatorError, StepRecord, SubQuery};

pub const WARN_ALL_FILTERED: &str = "all_filtered";
pub const WARN_MAX_STEPS: &str = "max_steps_exhausted";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationFlags {
    pub relevance_filter_enabled: bool,
    pub ending_check_enabled: bool,
    pub refiner_enabled: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self {
            relevance_filter_enabled: true,
            ending_check_enabled: true,
            refiner_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub retrieval: RetrievalConfig,
    pub max_steps: usize,
    pub ablation: AblationFlags,
    pub parallel_subqueries: bool,
    /// Bypasses the router. `Some(Complex)` turns the pipeline into the
    /// naive iterative baseline: every query goes through the sequential
    /// refine-retrieve loop.
    pub forced_class: Option<QueryClass>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            max_steps: 5,
            ablation: AblationFlags::default(),
            parallel_subqueries: true,
            forced_class: None,
        }
    }
}

impl PipelineConfig {
    pub fn naive_iterative() -> Self {
        Self {
            forced_class: Some(QueryClass::Complex),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_steps == 0 {
            return Err(PipelineError::config("max_steps must be >= 1"));
        }
        self.retrieval
            .validate()
            .map_err(|e| PipelineError::config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubResult {
    pub sub_query: SubQuery,
    pub answer: String,
    pub passages_used: Vec<String>,
    #[serde(default)]
    pub filtered_out: Vec<String>,
}

/// Everything one `answer` call produced; serializes as the trace export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub query: String,
    #[serde(rename = "class")]
    pub query_class: QueryClass,
    pub steps: usize,
    pub answer: String,
    pub trace: ReasoningTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_results: Option<Vec<SubResult>>,
    pub warnings: Vec<String>,
}

impl PipelineResult {
    fn new(query: &str, class: QueryClass) -> Self {
        Self {
            query: query.to_string(),
            query_class: class,
            steps: 0,
            answer: String::new(),
            trace: ReasoningTrace::new(),
            sub_results: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{source}")]
    Failed {
        #[source]
        source: RevelatorError,
        partial: Box<PipelineResult>,
    },
    #[error("pipeline configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

impl PipelineError {
    fn config(msg: impl Into<String>) -> Self {
        PipelineError::Config(msg.into())
    }

    pub fn partial(&self) -> Option<&PipelineResult> {
        match self {
            PipelineError::Failed { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Output of one noise-filtered retrieval cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct AnragOutput {
    pub answer: String,
    /// Retrieved candidate ids, in rank order.
    pub candidates: Vec<String>,
    pub passages_used: Vec<String>,
    pub filtered_out: Vec<String>,
    pub warnings: Vec<String>,
}

/// The answer-producing LLM, kept separate from the Revelator so the two
/// can run on different backends.
#[derive(Clone)]
pub struct Generator {
    backend: Arc<dyn Backend>,
    params: GenParams,
}

impl Generator {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            params: GenParams::default(),
        }
    }

    pub fn with_params(mut self, params: GenParams) -> Self {
        self.params = params;
        self
    }

    pub fn generate<S: AsRef<str>>(&self, question: &str, docs: &[S]) -> Result<String, LlmError> {
        let bindings: Bindings = [
            (Slot::Query, question.to_string()),
            (Slot::DocList, templates::render_doc_list(docs)),
        ]
        .into_iter()
        .collect();
        let prompt = templates::render_prompt(TemplateId::Generator, &bindings)?;
        Ok(self.backend.complete(&prompt, &self.params)?.trim().to_string())
    }

    /// Final answer from solved (question, answer) pairs, each rendered as
    /// one document.
    pub fn aggregate(&self, question: &str, pairs: &[(&str, &str)]) -> Result<String, LlmError> {
        let docs: Vec<String> = pairs.iter().map(|(q, a)| format!("{q} Answer: {a}")).collect();
        self.generate(question, &docs)
    }
}

#[derive(Clone)]
pub struct Hanrag {
    retriever: Retriever,
    revelator: Revelator,
    generator: Generator,
    config: PipelineConfig,
}

impl Hanrag {
    /// One backend serving both the Revelator and the generator.
    pub fn new(corpus: Arc<Corpus>, backend: Arc<dyn Backend>, config: PipelineConfig) -> Result<Self, PipelineError> {
        Self::with_parts(
            corpus,
            None,
            Revelator::new(backend.clone()),
            Generator::new(backend),
            config,
        )
    }

    pub fn with_parts(
        corpus: Arc<Corpus>,
        index: Option<Index>,
        revelator: Revelator,
        generator: Generator,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let retriever = match index {
            Some(index) => Retriever::with_index(corpus, index, config.retrieval)?,
            None => Retriever::new(corpus, config.retrieval)?,
        };
        Ok(Self {
            retriever,
            revelator,
            generator,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn retriever(&self) -> &Retriever {
        &self.retriever
    }

    /// Retrieve, drop passages judged irrelevant to `question`, answer from
    /// the best survivors.
    pub fn anrag(&self, question: &str) -> Result<AnragOutput, RevelatorError> {
        let cfg = &self.config.retrieval;
        let candidates = self.retriever.retrieve(question, cfg.top_k_retrieve);
        let mut warnings = Vec::new();
        let mut kept = Vec::new();
        let mut filtered_out = Vec::new();

        if self.config.ablation.relevance_filter_enabled {
            let verdicts: Vec<_> = candidates
                .par_iter()
                .map(|c| self.revelator.judge_relevance(question, &c.passage))
                .collect();
            for (cand, verdict) in candidates.iter().zip(verdicts) {
                match verdict {
                    Ok(v) if v.is_rel => kept.push(cand),
                    Ok(_) => filtered_out.push(cand.passage.id.clone()),
                    Err(e) if e.is_parse() => {
                        log::warn!("treating {} as irrelevant: {e}", cand.passage.id);
                        warnings.push(format!("relevance_parse_failed: {}", cand.passage.id));
                        filtered_out.push(cand.passage.id.clone());
                    }
                    Err(e) => return Err(e),
                }
            }
        } else {
            kept.extend(candidates.iter());
        }
        kept.truncate(cfg.top_k_context);
        if kept.is_empty() && !candidates.is_empty() {
            warnings.push(WARN_ALL_FILTERED.to_string());
        }

        let docs: Vec<String> = kept.iter().map(|c| c.passage.rendered()).collect();
        let answer = self.generator.generate(question, &docs)?;
        Ok(AnragOutput {
            answer,
            candidates: candidates.iter().map(|c| c.passage.id.clone()).collect(),
            passages_used: kept.iter().map(|c| c.passage.id.clone()).collect(),
            filtered_out,
            warnings,
        })
    }

    pub fn answer(&self, query: &str) -> Result<PipelineResult, PipelineError> {
        let mut warnings = Vec::new();
        let class = match self.config.forced_class {
            Some(c) => c,
            None => match self.revelator.route(query) {
                Ok(c) => c,
                Err(e) if e.is_parse() => {
                    log::warn!("routing fell back to complex: {e}");
                    warnings.push(format!("routing_parse_failed: {e}"));
                    QueryClass::Complex
                }
                Err(e) => {
                    return Err(PipelineError::Failed {
                        source: e,
                        partial: Box::new(PipelineResult::new(query, QueryClass::Complex)),
                    })
                }
            },
        };
        let mut result = PipelineResult::new(query, class);
        result.warnings = warnings;
        let outcome = match class {
            QueryClass::Straightforward => self.run_straightforward(&mut result),
            QueryClass::Single => self.run_single(&mut result),
            QueryClass::Compound => self.run_compound(&mut result),
            QueryClass::Complex => self.run_complex(&mut result),
        };
        finish(result, outcome)
    }

    pub fn answer_compound(&self, query: &str) -> Result<PipelineResult, PipelineError> {
        let mut result = PipelineResult::new(query, QueryClass::Compound);
        let outcome = self.run_compound(&mut result);
        finish(result, outcome)
    }

    pub fn answer_complex(&self, query: &str) -> Result<PipelineResult, PipelineError> {
        let mut result = PipelineResult::new(query, QueryClass::Complex);
        let outcome = self.run_complex(&mut result);
        finish(result, outcome)
    }

    fn run_straightforward(&self, r: &mut PipelineResult) -> Result<(), RevelatorError> {
        r.answer = self.generator.generate::<&str>(&r.query, &[])?;
        Ok(())
    }

    fn run_single(&self, r: &mut PipelineResult) -> Result<(), RevelatorError> {
        let seed = SubQuery {
            index: 1,
            text: r.query.clone(),
        };
        let out = self.anrag(&seed.text)?;
        r.answer = out.answer.clone();
        push_step(r, seed, out, "");
        r.steps = 1;
        Ok(())
    }

    fn run_compound(&self, r: &mut PipelineResult) -> Result<(), RevelatorError> {
        let subs = match self.revelator.decompose(&r.query) {
            Ok(subs) => subs,
            Err(e) if e.is_parse() => {
                log::warn!("decomposition failed, answering as single-step: {e}");
                r.warnings.push(format!("decomposition_parse_failed: {e}"));
                return self.run_single(r);
            }
            Err(e) => return Err(e),
        };

        let outcomes: Vec<Result<AnragOutput, RevelatorError>> = if self.config.parallel_subqueries {
            subs.par_iter().map(|s| self.anrag(&s.text)).collect()
        } else {
            subs.iter().map(|s| self.anrag(&s.text)).collect()
        };
        let mut sub_results = Vec::with_capacity(subs.len());
        for (sub, outcome) in subs.iter().zip(outcomes) {
            let out = outcome?;
            r.warnings
                .extend(out.warnings.iter().map(|w| format!("sub-query {}: {w}", sub.index)));
            sub_results.push(SubResult {
                sub_query: sub.clone(),
                answer: out.answer,
                passages_used: out.passages_used,
                filtered_out: out.filtered_out,
            });
        }
        r.steps = if self.config.parallel_subqueries { 1 } else { subs.len() };
        r.answer = if sub_results.len() == 1 {
            sub_results[0].answer.clone()
        } else {
            let pairs: Vec<(&str, &str)> = sub_results
                .iter()
                .map(|s| (s.sub_query.text.as_str(), s.answer.as_str()))
                .collect();
            self.generator.aggregate(&r.query, &pairs)?
        };
        r.sub_results = Some(sub_results);
        Ok(())
    }

    fn run_complex(&self, r: &mut PipelineResult) -> Result<(), RevelatorError> {
        let max_steps = self.config.max_steps;
        let flags = self.config.ablation;
        let mut ended = false;
        while r.trace.len() < max_steps {
            if flags.ending_check_enabled && self.is_finished(r)? {
                ended = true;
                break;
            }
            let seed = if flags.refiner_enabled {
                match self.revelator.refine(&r.query, &r.trace) {
                    Ok(s) => s,
                    Err(e) if e.is_parse() => {
                        r.warnings.push(format!("refine_failed: {e}"));
                        self.original_as_seed(r)
                    }
                    Err(e) => return Err(e),
                }
            } else {
                self.original_as_seed(r)
            };
            let out = self.anrag(&seed.text)?;
            let prefix = format!("step {}: ", seed.index);
            push_step(r, seed, out, &prefix);
            r.steps = r.trace.len();
        }
        if !ended && !(flags.ending_check_enabled && self.is_finished(r)?) {
            r.warnings.push(WARN_MAX_STEPS.to_string());
        }
        r.answer = self.generator.aggregate(&r.query, &r.trace.pairs())?;
        Ok(())
    }

    fn original_as_seed(&self, r: &PipelineResult) -> SubQuery {
        SubQuery {
            index: r.trace.len() + 1,
            text: r.query.clone(),
        }
    }

    fn is_finished(&self, r: &mut PipelineResult) -> Result<bool, RevelatorError> {
        match self.revelator.judge_ending(&r.query, &r.trace) {
            Ok(v) => Ok(v.is_ending),
            Err(e) if e.is_parse() => {
                r.warnings.push(format!("ending_parse_failed: {e}"));
                Ok(false)
            }
            Err(e) => Err(e),
        }
    }
}

fn push_step(r: &mut PipelineResult, seed: SubQuery, out: AnragOutput, warn_prefix: &str) {
    r.warnings
        .extend(out.warnings.iter().map(|w| format!("{warn_prefix}{w}")));
    r.trace.push(StepRecord {
        seed,
        answer: out.answer,
        passages_used: out.passages_used,
        filtered_out: out.filtered_out,
    });
}

fn finish(result: PipelineResult, outcome: Result<(), RevelatorError>) -> Result<PipelineResult, PipelineError> {
    match outcome {
        Ok(()) => Ok(result),
        Err(source) => Err(PipelineError::Failed {
            source,
            partial: Box::new(result),
        }),
    }
}
