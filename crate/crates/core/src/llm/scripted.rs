//! Deterministic table-driven backend.
//!
//! The oracle recognises which template produced a prompt, pulls the slot
//! values back out, and answers from lookup tables keyed on normalized
//! question text. Tables load from JSONL records of the form
//! `{"kind": ..., "key": ..., "context": ..., "value": ...}`; a record whose
//! key is `"*"` sets the default answer for its kind.
//!
//! | kind        | key                        | context                    |
//! |-------------|----------------------------|----------------------------|
//! | `route`     | question                   | -                          |
//! | `fact`      | generator question         | context passage ids or none |
//! | `relevance` | question                   | passage id                 |
//! | `ending`    | question                   | last answer (or none)      |
//! | `decompose` | question                   | -                          |
//! | `refine`    | question                   | last answer (none = empty) |
//! | `qa_gen`    | passage id                 | -                          |
//! | `compose`   | simple questions           | -                          |
//!
//! A `fact` record with context (comma-separated passage ids, in order)
//! only answers when exactly those passages are in the prompt; lookups fall
//! back to the record without context. An `ending` record without context may hold an integer `n`, meaning
//! "finished once the trace has at least `n` steps". `compose` keys are the
//! normalized simple questions, sorted and joined with `" | "`. Default
//! values may contain slot placeholders such as `<your_query>`, which are
//! replaced with the values recovered from the prompt.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::templates::{self, Bindings, Slot, TemplateId};
use super::{Backend, GenParams, LlmError};
use crate::corpus::Corpus;
use crate::evalkit::normalize_answer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Fact,
    Route,
    Relevance,
    Ending,
    Decompose,
    Refine,
    QaGen,
    Compose,
}

impl OracleKind {
    fn as_str(self) -> &'static str {
        match self {
            OracleKind::Fact => "fact",
            OracleKind::Route => "route",
            OracleKind::Relevance => "relevance",
            OracleKind::Ending => "ending",
            OracleKind::Decompose => "decompose",
            OracleKind::Refine => "refine",
            OracleKind::QaGen => "qa_gen",
            OracleKind::Compose => "compose",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OracleKind {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| LlmError::Config(format!("unknown oracle kind {s:?}")))
    }
}

type Key = (OracleKind, String, String);

#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    table: HashMap<Key, String>,
    defaults: HashMap<OracleKind, String>,
    passage_ids: HashMap<String, String>,
}

#[derive(Deserialize)]
struct OracleRecord {
    kind: OracleKind,
    key: String,
    #[serde(default)]
    context: Option<String>,
    value: serde_json::Value,
}

fn key(text: &str) -> String {
    normalize_answer(text)
}

impl ScriptedOracle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, LlmError> {
        let mut oracle = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LlmError::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: OracleRecord =
                serde_json::from_str(&line).map_err(|e| LlmError::Config(format!("oracle line {}: {e}", i + 1)))?;
            let value = match (rec.kind, rec.value) {
                (_, serde_json::Value::String(s)) => s,
                (_, serde_json::Value::Bool(b)) => b.to_string(),
                (_, serde_json::Value::Number(n)) => n.to_string(),
                (OracleKind::Decompose, serde_json::Value::Array(items)) => serde_json::json!({
                    "thought": "",
                    "decomposition": items,
                })
                .to_string(),
                (_, other) => other.to_string(),
            };
            if rec.key == "*" {
                oracle.defaults.insert(rec.kind, value);
            } else {
                oracle.insert(rec.kind, &rec.key, rec.context.as_deref().unwrap_or(""), value);
            }
        }
        Ok(oracle)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let file = std::fs::File::open(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn insert(&mut self, kind: OracleKind, k: &str, context: &str, value: String) {
        let k = match kind {
            OracleKind::QaGen => k.to_string(),
            OracleKind::Compose => compose_key(&k.split(" | ").collect::<Vec<_>>()),
            _ => key(k),
        };
        let context = match kind {
            OracleKind::Relevance | OracleKind::Fact => context.to_string(),
            _ => key(context),
        };
        self.table.insert((kind, k, context), value);
    }

    /// Lets relevance and qa_gen lookups map prompt text back to passage ids.
    pub fn with_passages(mut self, corpus: &Corpus) -> Self {
        for p in corpus {
            self.passage_ids.insert(p.rendered(), p.id.clone());
            self.passage_ids.insert(p.text.clone(), p.id.clone());
        }
        self
    }

    pub fn route(mut self, question: &str, label: &str) -> Self {
        self.insert(OracleKind::Route, question, "", label.to_string());
        self
    }

    pub fn fact(mut self, question: &str, answer: &str) -> Self {
        self.insert(OracleKind::Fact, question, "", answer.to_string());
        self
    }

    /// Answer used only when the prompt's documents are exactly `passage_ids`.
    pub fn fact_given(mut self, question: &str, passage_ids: &[&str], answer: &str) -> Self {
        self.insert(OracleKind::Fact, question, &passage_ids.join(","), answer.to_string());
        self
    }

    pub fn relevance(mut self, question: &str, passage_id: &str, is_rel: bool) -> Self {
        self.insert(OracleKind::Relevance, question, passage_id, is_rel.to_string());
        self
    }

    /// Finished once the trace holds `hops` steps.
    pub fn ending_after(mut self, question: &str, hops: usize) -> Self {
        self.insert(OracleKind::Ending, question, "", hops.to_string());
        self
    }

    pub fn ending(mut self, question: &str, last_answer: &str, finished: bool) -> Self {
        let v = if finished { "yes" } else { "no" };
        self.insert(OracleKind::Ending, question, last_answer, v.to_string());
        self
    }

    pub fn decomposition<S: AsRef<str>>(mut self, question: &str, subs: &[S]) -> Self {
        let subs: Vec<&str> = subs.iter().map(AsRef::as_ref).collect();
        let value = serde_json::json!({ "thought": "", "decomposition": subs }).to_string();
        self.insert(OracleKind::Decompose, question, "", value);
        self
    }

    /// Raw decomposer output, for malformed-output fixtures.
    pub fn decomposition_raw(mut self, question: &str, raw: &str) -> Self {
        self.insert(OracleKind::Decompose, question, "", raw.to_string());
        self
    }

    /// Next seed after a trace whose last answer is `last_answer`
    /// (`None` for the empty trace).
    pub fn refine(mut self, question: &str, last_answer: Option<&str>, seed: &str) -> Self {
        self.insert(
            OracleKind::Refine,
            question,
            last_answer.unwrap_or(""),
            seed.to_string(),
        );
        self
    }

    pub fn qa(mut self, passage_id: &str, question: &str, answer: &str) -> Self {
        let value = serde_json::json!({ "Question": question, "Answer": answer }).to_string();
        self.insert(OracleKind::QaGen, passage_id, "", value);
        self
    }

    pub fn qa_raw(mut self, passage_id: &str, raw: &str) -> Self {
        self.insert(OracleKind::QaGen, passage_id, "", raw.to_string());
        self
    }

    pub fn compose<S: AsRef<str>>(mut self, questions: &[S], output: &str) -> Self {
        let k = compose_key(questions);
        self.table
            .insert((OracleKind::Compose, k, String::new()), output.to_string());
        self
    }

    pub fn default_for(mut self, kind: OracleKind, value: &str) -> Self {
        self.defaults.insert(kind, value.to_string());
        self
    }

    fn lookup(&self, kind: OracleKind, k: &str, context: &str) -> Option<&String> {
        self.table.get(&(kind, k.to_string(), context.to_string()))
    }

    fn fallback(&self, kind: OracleKind, k: String, bindings: &Bindings) -> Result<String, LlmError> {
        match self.defaults.get(&kind) {
            Some(v) => {
                let mut out = v.clone();
                for (slot, value) in bindings {
                    out = out.replace(slot.placeholder(), value);
                }
                Ok(out)
            }
            None => Err(LlmError::OracleMiss { kind, key: k }),
        }
    }

    fn passage_ref(&self, doc: &str) -> String {
        self.passage_ids.get(doc).cloned().unwrap_or_else(|| doc.to_string())
    }

    fn answer(&self, id: TemplateId, b: &Bindings) -> Result<String, LlmError> {
        let slot = |s: Slot| b.get(&s).map(String::as_str).unwrap_or("");
        let q = key(slot(Slot::Query));
        let (kind, k, context) = match id {
            TemplateId::Router => (OracleKind::Route, q, String::new()),
            TemplateId::Decomposer => (OracleKind::Decompose, q, String::new()),
            TemplateId::Generator => {
                let ids: Option<Vec<String>> = templates::parse_doc_list(slot(Slot::DocList))
                    .iter()
                    .map(|d| self.passage_ids.get(d).cloned())
                    .collect();
                if let Some(v) = ids
                    .filter(|ids| !ids.is_empty())
                    .and_then(|ids| self.lookup(OracleKind::Fact, &q, &ids.join(",")))
                {
                    return Ok(v.clone());
                }
                (OracleKind::Fact, q, String::new())
            }
            TemplateId::Relevance => (OracleKind::Relevance, q, self.passage_ref(slot(Slot::Doc))),
            TemplateId::Refiner => {
                let steps = templates::parse_thought(slot(Slot::Thought));
                let last = steps.last().map(|(_, a)| key(a)).unwrap_or_default();
                (OracleKind::Refine, q, last)
            }
            TemplateId::Ending => {
                let steps = templates::parse_thought(slot(Slot::Thought));
                let last = steps.last().map(|(_, a)| key(a)).unwrap_or_default();
                if let Some(v) = self.lookup(OracleKind::Ending, &q, &last) {
                    return Ok(v.clone());
                }
                if let Some(v) = self.lookup(OracleKind::Ending, &q, "") {
                    return Ok(match v.parse::<usize>() {
                        Ok(hops) if steps.len() >= hops => "yes".to_string(),
                        Ok(_) => "no".to_string(),
                        Err(_) => v.clone(),
                    });
                }
                return self.fallback(OracleKind::Ending, format!("{q} | {last}"), b);
            }
            TemplateId::SingleQaGen => (OracleKind::QaGen, self.passage_ref(slot(Slot::Doc)), String::new()),
            TemplateId::CompoundCompose => {
                let qs = templates::parse_simple_questions(slot(Slot::SimpleQuestions));
                (OracleKind::Compose, compose_key(&qs), String::new())
            }
        };
        if let Some(v) = self.lookup(kind, &k, &context) {
            return Ok(v.clone());
        }
        let shown = if context.is_empty() {
            k
        } else {
            format!("{k} | {context}")
        };
        self.fallback(kind, shown, b)
    }
}

fn compose_key<S: AsRef<str>>(questions: &[S]) -> String {
    let mut keys: Vec<String> = questions.iter().map(|q| key(q.as_ref())).collect();
    keys.sort();
    keys.join(" | ")
}

impl Backend for ScriptedOracle {
    fn complete(&self, prompt: &str, _params: &GenParams) -> Result<String, LlmError> {
        let (id, bindings) = templates::identify(prompt).ok_or(LlmError::UnrecognizedPrompt)?;
        self.answer(id, &bindings)
    }
}
