//! Text-completion backends and the prompt registry.

pub mod http;
pub mod scripted;
pub mod templates;

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig};
pub use scripted::{OracleKind, ScriptedOracle};
pub use templates::{render_prompt, Bindings, Slot, TemplateError, TemplateId};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Response(String),
    #[error("scripted oracle has no {kind} entry for {key:?}")]
    OracleMiss { kind: OracleKind, key: String },
    #[error("prompt does not match any registered template")]
    UnrecognizedPrompt,
    #[error("backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub max_tokens: u32,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            temperature: 0.0,
            stop: None,
        }
    }
}

/// Anything that turns a prompt into raw model text.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, LlmError>;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, LlmError> {
        (**self).complete(prompt, params)
    }
}

/// Backend backed by a closure; handy for rule-based test doubles.
pub struct FnBackend<F>(pub F);

impl<F> Backend for FnBackend<F>
where
    F: Fn(&str) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, prompt: &str, _params: &GenParams) -> Result<String, LlmError> {
        (self.0)(prompt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallRecord {
    pub template: Option<TemplateId>,
    pub prompt: String,
    pub output: Result<String, String>,
}

/// Wraps a backend and logs every call, in completion order.
pub struct RecordingBackend<B> {
    inner: B,
    calls: Mutex<Vec<CallRecord>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.calls.lock().expect("recorder poisoned").clone()
    }

    pub fn count(&self, template: TemplateId) -> usize {
        self.calls
            .lock()
            .expect("recorder poisoned")
            .iter()
            .filter(|c| c.template == Some(template))
            .count()
    }

    pub fn total(&self) -> usize {
        self.calls.lock().expect("recorder poisoned").len()
    }

    pub fn clear(&self) {
        self.calls.lock().expect("recorder poisoned").clear();
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, LlmError> {
        let result = self.inner.complete(prompt, params);
        let record = CallRecord {
            template: templates::identify(prompt).map(|(id, _)| id),
            prompt: prompt.to_string(),
            output: result.as_ref().map(Clone::clone).map_err(ToString::to_string),
        };
        self.calls.lock().expect("recorder poisoned").push(record);
        result
    }
}
