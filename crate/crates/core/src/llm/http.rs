//! OpenAI-compatible chat-completions client.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, GenParams, LlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in config files.
    pub api_key_env: Option<String>,
    pub model_name: String,
    pub timeout_secs: u64,
    pub max_parallelism: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            api_key_env: None,
            model_name: "llama-3.1-8b-instruct".into(),
            timeout_secs: 120,
            max_parallelism: 4,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("semaphore poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("semaphore poisoned");
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("semaphore poisoned") += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    slots: Semaphore,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| LlmError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        let slots = Semaphore::new(config.max_parallelism);
        Ok(Self {
            config,
            api_key,
            client,
            slots,
        })
    }

    fn request_body(&self, prompt: &str, params: &GenParams) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model_name,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        if let Some(stop) = &params.stop {
            body["stop"] = json!(stop);
        }
        body
    }

    fn send_once(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let mut req = self.client.post(&self.config.endpoint_url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Fatal(LlmError::Timeout(e.to_string()))
            } else {
                Attempt::Retry(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if !status.is_success() {
            return Err(Attempt::Fatal(LlmError::Status {
                status: status.as_u16(),
                body: text,
            }));
        }
        extract_content(&text).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retry(String),
    Fatal(LlmError),
}

fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| LlmError::Response(e.to_string()))?;
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| LlmError::Response("missing choices[0].message.content".into()))
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String, LlmError> {
        let _permit = self.slots.acquire();
        let body = self.request_body(prompt, params);
        let attempts = self.config.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.send_once(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("transport error (attempt {attempt}/{attempts}): {msg}");
                    last = msg;
                    if attempt < attempts {
                        let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1));
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
            }
        }
        Err(LlmError::Transport {
            attempts,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves `responses` in order, one per connection, recording request bodies.
    fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn backend(url: String) -> HttpBackend {
        HttpBackend::new(HttpConfig {
            endpoint_url: url,
            backoff_ms: 1,
            timeout_secs: 5,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn returns_first_choice_and_sends_prompt_verbatim() {
        let canned = r#"{"choices":[{"message":{"role":"assistant","content":"canned body"}}]}"#;
        let (url, seen) = mock_server(vec![(200, canned.to_string())]);
        let b = backend(url);
        let prompt = "Line one\nQuery: \"quoted\" ```x```\nAnswer:";
        let out = b.complete(prompt, &GenParams::default()).unwrap();
        assert_eq!(out, "canned body");
        let bodies = seen.lock().unwrap();
        assert_eq!(bodies.len(), 1);
        let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
        assert_eq!(sent["messages"][0]["content"], prompt);
        assert_eq!(sent["messages"][0]["role"], "user");
        assert_eq!(sent["temperature"], 0.0);
        assert_eq!(sent["model"], "llama-3.1-8b-instruct");
    }

    #[test]
    fn http_status_is_not_retried() {
        let (url, seen) = mock_server(vec![(500, "{}".into()), (200, "{}".into())]);
        let err = backend(url).complete("p", &GenParams::default()).unwrap_err();
        assert!(matches!(err, LlmError::Status { status: 500, .. }));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn malformed_response() {
        let (url, _) = mock_server(vec![(200, r#"{"choices":[]}"#.into())]);
        let err = backend(url).complete("p", &GenParams::default()).unwrap_err();
        assert!(matches!(err, LlmError::Response(_)));
    }

    #[test]
    fn transport_failure_retries_then_surfaces() {
        // Bind then drop to get a port with no listener.
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let err = backend(format!("http://127.0.0.1:{port}/v1"))
            .complete("p", &GenParams::default())
            .unwrap_err();
        assert!(matches!(err, LlmError::Transport { attempts: 3, .. }), "{err:?}");
    }

    #[test]
    fn missing_api_key_env() {
        let err = HttpBackend::new(HttpConfig {
            api_key_env: Some("HANRAG_TEST_SURELY_UNSET_KEY".into()),
            ..Default::default()
        })
        .err()
        .unwrap();
        assert!(matches!(err, LlmError::Config(_)));
    }
}
