//! Answer metrics, dataset loading and batch evaluation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Hanrag, PipelineResult};
use crate::revelator::QueryClass;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no examples")]
    NoExamples,
    #[error("compound gold answer has no entities")]
    EmptyGold,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// SQuAD-style normalization: lowercase, strip ASCII punctuation, drop the
/// articles a/an/the, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn exact_match<S: AsRef<str>>(prediction: &str, answers: &[S]) -> u8 {
    let pred = normalize_answer(prediction);
    answers.iter().any(|a| normalize_answer(a.as_ref()) == pred).into()
}

fn f1_single(prediction: &str, gold: &str) -> f64 {
    let pred = normalize_answer(prediction);
    let gold = normalize_answer(gold);
    let pred: Vec<&str> = pred.split_whitespace().collect();
    let gold: Vec<&str> = gold.split_whitespace().collect();
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pred {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token-overlap F1, best over the gold answers.
pub fn f1<S: AsRef<str>>(prediction: &str, answers: &[S]) -> f64 {
    answers
        .iter()
        .map(|a| f1_single(prediction, a.as_ref()))
        .fold(0.0, f64::max)
}

/// 1 if some normalized gold answer occurs inside the normalized prediction.
pub fn acc_contains<S: AsRef<str>>(prediction: &str, answers: &[S]) -> u8 {
    let pred = normalize_answer(prediction);
    answers
        .iter()
        .any(|a| pred.contains(&normalize_answer(a.as_ref())))
        .into()
}

/// Splits a `"a && b"` gold string into trimmed, non-empty entities.
pub fn split_entities(gold: &str) -> Vec<String> {
    gold.split("&&")
        .map(str::trim)
        .filter(|e| !e.is_empty())
        .map(str::to_string)
        .collect()
}

/// Fraction of gold entities contained in the prediction.
pub fn compound_accuracy<S: AsRef<str>>(prediction: &str, gold_entities: &[S]) -> Result<f64, EvalError> {
    if gold_entities.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let pred = normalize_answer(prediction);
    let hits = gold_entities
        .iter()
        .filter(|e| pred.contains(&normalize_answer(e.as_ref())))
        .count();
    Ok(hits as f64 / gold_entities.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalExample {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_class: Option<QueryClass>,
}

impl EvalExample {
    /// A schema flag wins; otherwise any `&&` in the gold marks a compound
    /// answer.
    pub fn is_compound(&self) -> bool {
        match self.gold_class {
            Some(c) => c == QueryClass::Compound,
            None => self.answers.iter().any(|a| a.contains("&&")),
        }
    }
}

#[derive(Deserialize)]
struct RawExample {
    #[serde(alias = "_id")]
    id: Option<serde_json::Value>,
    question: Option<String>,
    answers: Option<serde_json::Value>,
    answer: Option<serde_json::Value>,
    #[serde(default)]
    answer_aliases: Vec<String>,
    hop_count: Option<usize>,
    gold_class: Option<String>,
}

fn string_list(v: serde_json::Value) -> Result<Vec<String>, String> {
    match v {
        serde_json::Value::String(s) => Ok(vec![s]),
        serde_json::Value::Array(items) => items
            .into_iter()
            .map(|i| match i {
                serde_json::Value::String(s) => Ok(s),
                other => Err(format!("answer must be a string, got {other}")),
            })
            .collect(),
        other => Err(format!("answers must be a string or list, got {other}")),
    }
}

fn parse_example(line: &str) -> Result<EvalExample, String> {
    let raw: RawExample = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match raw.id {
        Some(serde_json::Value::String(s)) => s,
        Some(serde_json::Value::Number(n)) => n.to_string(),
        Some(other) => return Err(format!("bad id {other}")),
        None => return Err("missing field `id`".into()),
    };
    let question = raw.question.ok_or("missing field `question`")?;
    let mut answers = Vec::new();
    for v in [raw.answers, raw.answer].into_iter().flatten() {
        answers.extend(string_list(v)?);
    }
    answers.extend(raw.answer_aliases);
    let mut seen = std::collections::HashSet::new();
    answers.retain(|a| !a.trim().is_empty() && seen.insert(a.clone()));
    if answers.is_empty() {
        return Err("missing answers".into());
    }
    let gold_class = match raw.gold_class {
        Some(s) => Some(QueryClass::parse_label(&s).ok_or_else(|| format!("unknown gold_class {s:?}"))?),
        None => None,
    };
    Ok(EvalExample {
        id,
        question,
        answers,
        hop_count: raw.hop_count,
        gold_class,
    })
}

/// Reads EvalExample JSONL. Also accepts `_id`, a scalar `answer`, and
/// `answer_aliases`, which are merged into `answers`.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<EvalExample>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_example(&line).map_err(|reason| EvalError::Malformed { line: i + 1, reason })?);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<EvalExample>, EvalError> {
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_dataset(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub id: String,
    pub prediction: String,
    pub class: Option<QueryClass>,
    pub em: f64,
    pub f1: f64,
    pub acc: f64,
    pub steps: usize,
    pub compound: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// EM, F1 and Acc are percentages; steps is a plain mean.
    pub em: f64,
    pub f1: f64,
    pub acc: f64,
    pub steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_query: Vec<QueryMetrics>,
    pub aggregates: Aggregates,
    pub count: usize,
    pub errors: usize,
}

impl MetricsReport {
    pub fn from_rows(per_query: Vec<QueryMetrics>) -> Result<Self, EvalError> {
        if per_query.is_empty() {
            return Err(EvalError::NoExamples);
        }
        let n = per_query.len() as f64;
        let mean = |f: fn(&QueryMetrics) -> f64| per_query.iter().map(f).sum::<f64>() / n;
        let aggregates = Aggregates {
            em: 100.0 * mean(|r| r.em),
            f1: 100.0 * mean(|r| r.f1),
            acc: 100.0 * mean(|r| r.acc),
            steps: mean(|r| r.steps as f64),
        };
        Ok(Self {
            count: per_query.len(),
            errors: per_query.iter().filter(|r| r.error.is_some()).count(),
            per_query,
            aggregates,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table with the EM / F1 / Acc / Steps columns.
    pub fn table(&self, label: &str) -> String {
        let a = &self.aggregates;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>8} {:>8} {:>8}",
            "Method", "EM", "F1", "Acc", "Steps"
        );
        let _ = writeln!(
            s,
            "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            label, a.em, a.f1, a.acc, a.steps
        );
        let _ = writeln!(s, "({} queries, {} errors)", self.count, self.errors);
        s
    }
}

/// Scores one prediction against an example.
pub fn score_example(example: &EvalExample, result: &PipelineResult) -> QueryMetrics {
    let compound = example.is_compound();
    let acc = if compound {
        let entities: Vec<String> = example.answers.iter().flat_map(|a| split_entities(a)).collect();
        compound_accuracy(&result.answer, &entities).unwrap_or(0.0)
    } else {
        acc_contains(&result.answer, &example.answers) as f64
    };
    QueryMetrics {
        id: example.id.clone(),
        prediction: result.answer.clone(),
        class: Some(result.query_class),
        em: exact_match(&result.answer, &example.answers) as f64,
        f1: f1(&result.answer, &example.answers),
        acc,
        steps: result.steps,
        compound,
        error: None,
    }
}

/// Runs the pipeline over every example with at most `concurrency` queries
/// in flight. Rows keep input order; a failed query scores zero and keeps
/// the steps it incurred.
pub fn evaluate(examples: &[EvalExample], pipeline: &Hanrag, concurrency: usize) -> Result<MetricsReport, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let rows: Vec<QueryMetrics> = pool.install(|| {
        examples
            .par_iter()
            .map(|ex| match pipeline.answer(&ex.question) {
                Ok(result) => score_example(ex, &result),
                Err(e) => {
                    log::warn!("query {} failed: {e}", ex.id);
                    let partial = e.partial();
                    QueryMetrics {
                        id: ex.id.clone(),
                        prediction: String::new(),
                        class: partial.map(|p| p.query_class),
                        em: 0.0,
                        f1: 0.0,
                        acc: 0.0,
                        steps: partial.map_or(0, |p| p.steps),
                        compound: ex.is_compound(),
                        error: Some(e.to_string()),
                    }
                }
            })
            .collect()
    });
    MetricsReport::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_answer("The Harold II."), "harold ii");
        assert_eq!(normalize_answer(""), "");
        assert_eq!(normalize_answer("a  an the"), "");
        assert_eq!(normalize_answer("  Theatre, an\tApple  "), "theatre apple");
    }

    #[test]
    fn exact_match_cases() {
        assert_eq!(exact_match("Harold II", &["Harold II"]), 1);
        assert_eq!(exact_match("Edith Pargeter", &["Harold II"]), 0);
        assert_eq!(exact_match("the Harold II", &["Harold II"]), 1);
        assert_eq!(exact_match("x", &["y", "X."]), 1);
    }

    #[test]
    fn f1_cases() {
        assert_eq!(f1("Edith Pargeter", &["Edith Mary Pargeter"]), 0.8);
        assert_eq!(f1("Harold II", &["Harold II"]), 1.0);
        assert_eq!(f1("", &["x"]), 0.0);
        assert_eq!(f1("", &[""]), 1.0);
        assert_eq!(f1("the", &["a"]), 1.0);
        assert_eq!(f1("cat", &["dog", "cat"]), 1.0);
    }

    #[test]
    fn containment_cases() {
        assert_eq!(acc_contains("It was Harold II of England", &["Harold II"]), 1);
        assert_eq!(acc_contains("Harold II", &["Harold II"]), 1);
        assert_eq!(
            acc_contains("UEFA", &["International Federation of Association Football"]),
            0
        );
    }

    #[test]
    fn compound_cases() {
        let gold = split_entities("1651 && Rachael");
        assert_eq!(gold, ["1651", "Rachael"]);
        assert_eq!(
            compound_accuracy("He succeeded in 1651 and married Rachael", &gold).unwrap(),
            1.0
        );
        assert_eq!(compound_accuracy("1651", &gold).unwrap(), 0.5);
        assert_eq!(compound_accuracy("Paris", &["Paris"]).unwrap(), 1.0);
        assert!(matches!(compound_accuracy::<&str>("x", &[]), Err(EvalError::EmptyGold)));
    }

    #[test]
    fn dataset_loading() {
        let two = "{\"id\":\"a\",\"question\":\"q1\",\"answers\":[\"x\"]}\n{\"id\":\"b\",\"question\":\"q2\",\"answers\":[\"y\"],\"hop_count\":2,\"gold_class\":\"compound\"}\n";
        let ex = read_dataset(two.as_bytes()).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[1].gold_class, Some(QueryClass::Compound));
        assert_eq!(ex[1].hop_count, Some(2));

        let missing = "{\"id\":\"a\",\"question\":\"q1\",\"answers\":[\"x\"]}\n{\"id\":\"b\",\"question\":\"q2\"}\n";
        assert!(matches!(
            read_dataset(missing.as_bytes()),
            Err(EvalError::Malformed { line: 2, .. })
        ));

        let musique = r#"{"id":"2hop_1","question":"q","answer_aliases":["Harold II","Harold Godwinson"]}"#;
        assert_eq!(read_dataset(musique.as_bytes()).unwrap()[0].answers.len(), 2);
        let hotpot = r#"{"_id":"h1","question":"q","answer":"yes"}"#;
        assert_eq!(read_dataset(hotpot.as_bytes()).unwrap()[0].id, "h1");
        assert!(read_dataset(&b"not json"[..]).is_err());
    }

    #[test]
    fn compound_detection() {
        let mut ex = EvalExample {
            id: "1".into(),
            question: "q".into(),
            answers: vec!["1651 && Rachael".into()],
            hop_count: None,
            gold_class: None,
        };
        assert!(ex.is_compound());
        ex.gold_class = Some(QueryClass::Single);
        assert!(!ex.is_compound());
        ex.answers = vec!["plain".into()];
        ex.gold_class = Some(QueryClass::Compound);
        assert!(ex.is_compound());
    }

    #[test]
    fn report_means() {
        let row = |em: f64, f1: f64, acc: f64, steps: usize| QueryMetrics {
            id: "x".into(),
            prediction: String::new(),
            class: None,
            em,
            f1,
            acc,
            steps,
            compound: false,
            error: None,
        };
        let r = MetricsReport::from_rows(vec![row(1.0, 1.0, 1.0, 1), row(0.0, 0.5, 1.0, 2)]).unwrap();
        assert_eq!(r.aggregates.em, 50.0);
        assert_eq!(r.aggregates.f1, 75.0);
        assert_eq!(r.aggregates.acc, 100.0);
        assert_eq!(r.aggregates.steps, 1.5);
        assert!(r.table("HANRAG").contains("50.00"));
        assert!(matches!(MetricsReport::from_rows(vec![]), Err(EvalError::NoExamples)));
    }
}
