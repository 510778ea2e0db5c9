//! The master agent: routing, decomposition, seed refinement, relevance and
//! ending judgments. Each capability is one prompt, one backend call and a
//! strict parse of the reply.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Passage;
use crate::llm::templates::{self, Bindings, Slot, TemplateId};
use crate::llm::{Backend, GenParams, LlmError};

#[derive(Debug, Error)]
pub enum RevelatorError {
    #[error("cannot parse routing label from {0:?}")]
    RoutingParse(String),
    #[error("cannot parse decomposition: {reason} (output {output:?})")]
    DecompositionParse { reason: String, output: String },
    #[error("refiner returned an empty seed question")]
    EmptyRefinement,
    #[error("relevance judgment is neither true nor false: {0:?}")]
    RelevanceParse(String),
    #[error("ending judgment is neither yes nor no: {0:?}")]
    EndingParse(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

impl RevelatorError {
    /// Parse failures have documented fallbacks; backend failures do not.
    pub fn is_parse(&self) -> bool {
        !matches!(self, RevelatorError::Backend(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryClass {
    Straightforward,
    Single,
    Compound,
    Complex,
}

impl QueryClass {
    pub const ALL: [QueryClass; 4] = [
        QueryClass::Straightforward,
        QueryClass::Single,
        QueryClass::Compound,
        QueryClass::Complex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryClass::Straightforward => "straightforward",
            QueryClass::Single => "single",
            QueryClass::Compound => "compound",
            QueryClass::Complex => "complex",
        }
    }

    /// The router's full output label.
    pub fn label(self) -> &'static str {
        match self {
            QueryClass::Straightforward => "straightforward question",
            QueryClass::Single => "single-step question",
            QueryClass::Compound => "compound question",
            QueryClass::Complex => "complex question",
        }
    }

    /// Accepts the full labels and their bare first words, ignoring case and
    /// surrounding whitespace or punctuation.
    pub fn parse_label(raw: &str) -> Option<Self> {
        let s = raw
            .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
            .to_lowercase();
        let s = s.strip_suffix(" question").unwrap_or(&s).trim();
        match s {
            "straightforward" => Some(QueryClass::Straightforward),
            "single-step" | "single step" | "single" => Some(QueryClass::Single),
            "compound" => Some(QueryClass::Compound),
            "complex" => Some(QueryClass::Complex),
            _ => None,
        }
    }
}

impl fmt::Display for QueryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryClass {
    type Err = RevelatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryClass::parse_label(s).ok_or_else(|| RevelatorError::RoutingParse(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuery {
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub is_rel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndingVerdict {
    pub is_ending: bool,
}

/// One retrieve-filter-generate cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub seed: SubQuery,
    pub answer: String,
    /// Passages handed to the generator, in retrieval-rank order.
    pub passages_used: Vec<String>,
    /// Retrieved passages the relevance judge rejected.
    #[serde(default)]
    pub filtered_out: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReasoningTrace {
    steps: Vec<StepRecord>,
}

impl ReasoningTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a step, renumbering its seed so indices stay contiguous from 1.
    pub fn push(&mut self, mut step: StepRecord) {
        step.seed.index = self.steps.len() + 1;
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn pairs(&self) -> Vec<(&str, &str)> {
        self.steps
            .iter()
            .map(|s| (s.seed.text.as_str(), s.answer.as_str()))
            .collect()
    }

    pub fn thought(&self) -> String {
        templates::render_thought(&self.pairs())
    }
}

#[derive(Clone)]
pub struct Revelator {
    backend: Arc<dyn Backend>,
    params: GenParams,
}

impl Revelator {
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

    fn call(&self, id: TemplateId, bindings: &[(Slot, String)]) -> Result<String, RevelatorError> {
        let bindings: Bindings = bindings.iter().cloned().collect();
        let prompt = templates::render_prompt(id, &bindings).map_err(LlmError::from)?;
        Ok(self.backend.complete(&prompt, &self.params)?)
    }

    pub fn route(&self, query: &str) -> Result<QueryClass, RevelatorError> {
        let out = self.call(TemplateId::Router, &[(Slot::Query, query.to_string())])?;
        QueryClass::parse_label(&out).ok_or(RevelatorError::RoutingParse(out))
    }

    pub fn decompose(&self, query: &str) -> Result<Vec<SubQuery>, RevelatorError> {
        let out = self.call(TemplateId::Decomposer, &[(Slot::Query, query.to_string())])?;
        parse_decomposition(&out)
    }

    pub fn refine(&self, query: &str, trace: &ReasoningTrace) -> Result<SubQuery, RevelatorError> {
        let out = self.call(
            TemplateId::Refiner,
            &[(Slot::Query, query.to_string()), (Slot::Thought, trace.thought())],
        )?;
        let text = parse_single_line(&out).ok_or(RevelatorError::EmptyRefinement)?;
        Ok(SubQuery {
            index: trace.len() + 1,
            text,
        })
    }

    pub fn judge_relevance(&self, query: &str, passage: &Passage) -> Result<RelevanceVerdict, RevelatorError> {
        let out = self.call(
            TemplateId::Relevance,
            &[(Slot::Query, query.to_string()), (Slot::Doc, passage.rendered())],
        )?;
        match bare_word(&out).as_str() {
            "true" => Ok(RelevanceVerdict { is_rel: true }),
            "false" => Ok(RelevanceVerdict { is_rel: false }),
            _ => Err(RevelatorError::RelevanceParse(out)),
        }
    }

    /// An empty trace is never finished, and costs no backend call.
    pub fn judge_ending(&self, query: &str, trace: &ReasoningTrace) -> Result<EndingVerdict, RevelatorError> {
        if trace.is_empty() {
            return Ok(EndingVerdict { is_ending: false });
        }
        let out = self.call(
            TemplateId::Ending,
            &[(Slot::Query, query.to_string()), (Slot::Thought, trace.thought())],
        )?;
        match bare_word(&out).as_str() {
            "yes" => Ok(EndingVerdict { is_ending: true }),
            "no" => Ok(EndingVerdict { is_ending: false }),
            _ => Err(RevelatorError::EndingParse(out)),
        }
    }
}

fn bare_word(raw: &str) -> String {
    raw.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_lowercase()
}

fn strip_fences(raw: &str) -> &str {
    let s = raw.trim();
    let Some(inner) = s.strip_prefix("```") else {
        return s;
    };
    let inner = inner.strip_suffix("```").unwrap_or(inner);
    // Drop an info string such as ```json.
    match inner.split_once('\n') {
        Some((first, rest)) if !first.trim().contains(' ') => rest.trim(),
        _ => inner.trim(),
    }
}

fn parse_single_line(raw: &str) -> Option<String> {
    let s = strip_fences(raw);
    s.lines().map(str::trim).find(|l| !l.is_empty()).map(str::to_string)
}

pub fn parse_decomposition(raw: &str) -> Result<Vec<SubQuery>, RevelatorError> {
    let fail = |reason: &str| RevelatorError::DecompositionParse {
        reason: reason.to_string(),
        output: raw.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(strip_fences(raw)).map_err(|e| fail(&e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| fail("not a JSON object"))?;
    if !obj.contains_key("thought") {
        return Err(fail("missing key `thought`"));
    }
    let items = obj
        .get("decomposition")
        .ok_or_else(|| fail("missing key `decomposition`"))?
        .as_array()
        .ok_or_else(|| fail("`decomposition` is not a list"))?;
    if items.is_empty() {
        return Err(fail("empty decomposition"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, v)| match v.as_str().map(str::trim) {
            Some(t) if !t.is_empty() => Ok(SubQuery {
                index: i + 1,
                text: t.to_string(),
            }),
            _ => Err(fail("sub-question is not a non-empty string")),
        })
        .collect()
}
