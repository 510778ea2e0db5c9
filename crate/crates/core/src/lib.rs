//! Adaptive retrieval-augmented question answering.
//!
//! Queries are routed into four classes. Straightforward ones go straight
//! to the generator; single-step ones get one noise-filtered retrieval
//! cycle; compound ones are decomposed and their sub-questions retrieved in
//! parallel; complex ones run a sequential refine-retrieve loop guarded by
//! an ending judgment.

pub mod benchgen;
pub mod cli;
pub mod corpus;
pub mod evalkit;
pub mod llm;
pub mod pipeline;
pub mod retriever;
pub mod revelator;

pub use corpus::{Corpus, CorpusError, CorpusFormat, Passage};
pub use evalkit::{EvalExample, MetricsReport};
pub use llm::{Backend, GenParams, HttpBackend, LlmError, ScriptedOracle};
pub use pipeline::{AblationFlags, Hanrag, PipelineConfig, PipelineError, PipelineResult};
pub use retriever::{Index, RankedPassage, RetrievalConfig, Retriever};
pub use revelator::{QueryClass, ReasoningTrace, Revelator, StepRecord, SubQuery};
