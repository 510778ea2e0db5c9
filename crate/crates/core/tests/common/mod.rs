//! Fixtures and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use hanrag::corpus::{Corpus, CorpusFormat, Passage};
use hanrag::llm::templates::{self, Slot, TemplateId};
use hanrag::llm::{FnBackend, LlmError, OracleKind, ScriptedOracle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EDITH: &str = "Which English King was married to Edith Swan-Neck, also known as Edith the Fair?";
pub const CRANFIELD: &str =
    "When did Lionel Cranfield, 3rd Earl of Middlesex succeed his brother James as Earl of Middlesex and who is his wife?";
pub const DANISH: &str = "What is the Danish Football Union an instance of?";
pub const FIFA_SEED: &str = "What does the FIFA stand for?";
pub const IFAF: &str = "International Federation of Association Football";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/case_studies")
        .join(name)
}

pub fn case_corpus() -> Arc<Corpus> {
    Arc::new(Corpus::load(&fixture("corpus.jsonl"), CorpusFormat::Jsonl).unwrap())
}

pub fn case_oracle(corpus: &Corpus) -> ScriptedOracle {
    ScriptedOracle::load(&fixture("oracle.jsonl"))
        .unwrap()
        .with_passages(corpus)
}

pub const TIE_EPS: f64 = 1e-9;

/// Brute-force BM25 straight from the passage texts: no index, no postings.
pub struct BruteBm25 {
    docs: Vec<(String, Vec<String>)>,
    k1: f64,
    b: f64,
}

pub fn brute_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl BruteBm25 {
    pub fn new(passages: &[Passage], k1: f64, b: f64) -> Self {
        let docs = passages
            .iter()
            .map(|p| {
                let rendered = if p.title.trim().is_empty() {
                    p.text.clone()
                } else {
                    format!("{}: {}", p.title, p.text)
                };
                (p.id.clone(), brute_tokens(&rendered))
            })
            .collect();
        Self { docs, k1, b }
    }

    pub fn score(&self, query: &str, doc: usize) -> f64 {
        let n = self.docs.len() as f64;
        let avg = self.docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
        let tokens = &self.docs[doc].1;
        let len = tokens.len() as f64;
        let mut total = 0.0;
        for term in brute_tokens(query) {
            let tf = tokens.iter().filter(|t| **t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.docs.iter().filter(|(_, t)| t.contains(&term)).count() as f64;
            let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
            total += idf * tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * len / avg));
        }
        total
    }

    /// Every passage with a positive score, best first. Scores within
    /// `TIE_EPS` count as tied and keep ascending id order.
    pub fn rank(&self, query: &str) -> Vec<(String, f64)> {
        let mut scored: Vec<(String, f64)> = (0..self.docs.len())
            .map(|i| (self.docs[i].0.clone(), self.score(query, i)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        scored.sort_by(|a, b| a.0.cmp(&b.0));
        // Insertion sort: an entry moves ahead only past strictly lower scores.
        for i in 1..scored.len() {
            let mut j = i;
            while j > 0 && scored[j].1 > scored[j - 1].1 + TIE_EPS {
                scored.swap(j, j - 1);
                j -= 1;
            }
        }
        scored
    }
}

const WORDS: [&str; 32] = [
    "river", "castle", "king", "queen", "battle", "north", "south", "harbor", "glass", "stone", "iron", "silver",
    "forest", "valley", "bridge", "tower", "garden", "market", "winter", "summer", "poet", "song", "ship", "island",
    "church", "abbey", "field", "mill", "road", "gate", "lake", "hill",
];

/// Random passages over a small vocabulary; duplicates and shared titles are
/// deliberate so ties and repeated terms occur.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<Passage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=25);
            let text: Vec<&str> = (0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
            let title = if rng.gen_bool(0.5) {
                WORDS.choose(&mut rng).unwrap().to_uppercase()
            } else {
                String::new()
            };
            Passage::new(format!("d{i:03}"), title, text.join(" "))
        })
        .collect()
}

pub fn random_query(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(1..=4);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.1) {
                "zzzunknown"
            } else {
                *WORDS.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

const ATTRIBUTES: [&str; 4] = ["founder", "capital", "anthem", "mascot"];

/// One synthetic multi-hop question with its gold decomposition.
pub struct HopQuery {
    pub question: String,
    pub hops: usize,
    pub sub_questions: Vec<String>,
    pub answers: Vec<String>,
    pub passage_ids: Vec<String>,
}

/// `per_n` queries for each hop count in 2..=4. Every sub-question has one
/// gold passage; every other passage is irrelevant to it.
pub fn hop_suite(per_n: usize) -> (Arc<Corpus>, Vec<HopQuery>) {
    let mut passages = Vec::new();
    let mut queries = Vec::new();
    for n in 2..=4 {
        for j in 0..per_n {
            let entity = format!("entity{n}x{j}");
            let mut q = HopQuery {
                question: String::new(),
                hops: n,
                sub_questions: Vec::new(),
                answers: Vec::new(),
                passage_ids: Vec::new(),
            };
            for (i, attr) in ATTRIBUTES.iter().take(n).enumerate() {
                let id = format!("{entity}-{attr}");
                let value = format!("value{n}x{j}x{i}");
                passages.push(Passage::new(&id, "", format!("The {attr} of {entity} is {value}.")));
                q.sub_questions.push(format!("What is the {attr} of {entity}?"));
                q.answers.push(value);
                q.passage_ids.push(id);
            }
            let attrs: Vec<&str> = ATTRIBUTES[..n].to_vec();
            q.question = format!("What are the {} of {entity}?", attrs.join(" and "));
            queries.push(q);
        }
    }
    (Arc::new(Corpus::from_passages(passages).unwrap()), queries)
}

/// Oracle answering the suite. `route_label` is what the router says for
/// every suite question. The refiner walks the gold sub-questions in order
/// and the ending judge says "finished" once all hops are answered.
pub fn hop_oracle(corpus: &Corpus, queries: &[HopQuery], route_label: &str) -> ScriptedOracle {
    let mut o = ScriptedOracle::new()
        .default_for(OracleKind::Relevance, "false")
        .default_for(OracleKind::Refine, "<your_query>")
        .default_for(OracleKind::Fact, "unknown");
    for q in queries {
        o = o
            .route(&q.question, route_label)
            .decomposition(&q.question, &q.sub_questions)
            .ending_after(&q.question, q.hops)
            .fact(&q.question, &q.answers.join(" && "))
            .refine(&q.question, None, &q.sub_questions[0]);
        for i in 0..q.hops {
            o = o.relevance(&q.sub_questions[i], &q.passage_ids[i], true).fact_given(
                &q.sub_questions[i],
                &[&q.passage_ids[i]],
                &q.answers[i],
            );
            if i + 1 < q.hops {
                o = o.refine(&q.question, Some(&q.answers[i]), &q.sub_questions[i + 1]);
            }
        }
    }
    o.with_passages(corpus)
}

/// Single-step questions whose gold passage is outranked by distractors
/// that repeat the question's words.
pub struct NoiseCase {
    pub question: String,
    pub gold: String,
    pub distractors: Vec<String>,
}

pub fn noise_fixture(count: usize) -> (Arc<Corpus>, Vec<NoiseCase>, ScriptedOracle) {
    let mut passages = Vec::new();
    let mut cases = Vec::new();
    let mut oracle = ScriptedOracle::new().default_for(OracleKind::Relevance, "false");
    for i in 0..count {
        let subject = format!("subject{i}");
        let question = format!("Where was {subject} born?");
        let gold = format!("gold{i:02}");
        passages.push(Passage::new(
            &gold,
            "",
            format!("{subject} entered the world in town{i}."),
        ));
        let mut distractors = Vec::new();
        for d in 0..3 {
            let id = format!("noise{i:02}x{d}");
            passages.push(Passage::new(
                &id,
                "",
                format!("Where was {subject} born? Fans ask where {subject} was born, variant {d}."),
            ));
            distractors.push(id);
        }
        oracle = oracle
            .route(&question, "single-step question")
            .relevance(&question, &gold, true)
            .fact_given(&question, &[&gold], &format!("town{i}"))
            .fact(&question, "somewhere else");
        cases.push(NoiseCase {
            question,
            gold,
            distractors,
        });
    }
    let corpus = Arc::new(Corpus::from_passages(passages).unwrap());
    let oracle = oracle.with_passages(&corpus);
    (corpus, cases, oracle)
}

/// Entity corpus for benchmark synthesis: each passage states one attribute
/// of its entity as "The <attr> of <entity> is <value>."
pub fn toy_entity_corpus(entities: usize) -> Corpus {
    let attrs = ["color", "size", "origin", "sound", "shape"];
    let mut passages = Vec::new();
    for e in 0..entities {
        let entity = format!("Toy{e}");
        let count = 2 + e % 4;
        for (a, attr) in attrs.iter().take(count).enumerate() {
            passages.push(
                Passage::new(
                    format!("{entity}-{a}"),
                    entity.as_str(),
                    format!("The {attr} of {entity} is val{e}n{a}."),
                )
                .with_entity(entity.as_str()),
            );
        }
    }
    Corpus::from_passages(passages).unwrap()
}

/// Rule-based stand-in for the question writer. Question generation reads
/// the attribute sentence back; composition joins the questions.
pub fn toy_generator_backend() -> FnBackend<impl Fn(&str) -> Result<String, LlmError> + Send + Sync> {
    FnBackend(|prompt: &str| {
        let (id, b) = templates::identify(prompt).ok_or(LlmError::UnrecognizedPrompt)?;
        match id {
            TemplateId::SingleQaGen => {
                let doc = &b[&Slot::Doc];
                let words: Vec<&str> = doc.trim_end_matches('.').split(' ').collect();
                // "The <attr> of <entity> is <value>"
                let (attr, entity, value) = (words[1], words[3], words[5]);
                Ok(serde_json::json!({
                    "Question": format!("What is the {attr} of {entity}?"),
                    "Answer": value,
                })
                .to_string())
            }
            TemplateId::CompoundCompose => {
                let qs = templates::parse_simple_questions(&b[&Slot::SimpleQuestions]);
                let parts: Vec<String> = qs.iter().map(|q| q.trim_end_matches('?').to_string()).collect();
                Ok(format!("Compound Question: {}?", parts.join(", and ")))
            }
            other => Err(LlmError::Config(format!("toy backend cannot answer {other:?}"))),
        }
    })
}

pub fn group_by<T, K: std::hash::Hash + Eq>(
    items: impl IntoIterator<Item = T>,
    key: impl Fn(&T) -> K,
) -> HashMap<K, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(key(&it)).or_insert(0) += 1;
    }
    m
}
