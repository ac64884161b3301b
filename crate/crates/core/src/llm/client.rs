//! Blocking HTTP client for a text-completion endpoint.

use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// `{"prompt", "temperature", "max_new_tokens"}` in, raw body out.
    #[default]
    Completion,
    /// OpenAI-style chat body; the first choice's message content is returned.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpoint {
    pub base_url: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub max_concurrent: usize,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub initial_backoff_ms: u64,
    pub protocol: Protocol,
}

impl Default for LlmEndpoint {
    fn default() -> Self {
        LlmEndpoint {
            base_url: "http://127.0.0.1:8080/generate".into(),
            timeout_secs: 60.0,
            max_retries: 3,
            max_concurrent: 4,
            temperature: 0.1,
            max_new_tokens: 1024,
            initial_backoff_ms: 500,
            protocol: Protocol::Completion,
        }
    }
}

impl LlmEndpoint {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(LlmError::Config(format!(
                "base_url '{}' is not an http(s) URL",
                self.base_url
            )));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(LlmError::Config("timeout_secs must be positive".into()));
        }
        if self.max_concurrent < 1 {
            return Err(LlmError::Config("max_concurrent must be at least 1".into()));
        }
        Ok(())
    }

    pub fn host(&self) -> String {
        host_of(&self.base_url)
    }

    fn body(&self, prompt: &str) -> Value {
        match self.protocol {
            Protocol::Completion => json!({
                "prompt": prompt,
                "temperature": self.temperature,
                "max_new_tokens": self.max_new_tokens,
            }),
            Protocol::Chat => json!({
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature,
                "max_tokens": self.max_new_tokens,
            }),
        }
    }

    fn extract(&self, body: String) -> Result<String, LlmError> {
        match self.protocol {
            Protocol::Completion => Ok(body),
            Protocol::Chat => {
                let v: Value = serde_json::from_str(&body).map_err(|e| LlmError::Protocol(e.to_string()))?;
                v.pointer("/choices/0/message/content")
                    .and_then(Value::as_str)
                    .map(String::from)
                    .ok_or_else(|| LlmError::Protocol("no choices[0].message.content in response".into()))
            }
        }
    }
}

fn host_of(url: &str) -> String {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let authority = rest.split(['/', '?', '#']).next().unwrap_or("");
    let authority = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    if let Some(v6) = authority.strip_prefix('[') {
        return v6.split(']').next().unwrap_or("").to_string();
    }
    authority.split(':').next().unwrap_or("").to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmResponse {
    pub text: String,
    /// Attempts that failed before the successful one.
    pub retries: u32,
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock)
}

fn attempt(agent: &ureq::Agent, endpoint: &LlmEndpoint, prompt: &str) -> Result<String, LlmError> {
    let host = endpoint.host();
    match agent.post(&endpoint.base_url).send_json(endpoint.body(prompt)) {
        Ok(resp) => match resp.into_string() {
            Ok(body) => endpoint.extract(body),
            Err(e) if is_timeout(&e) => Err(LlmError::Timeout {
                host,
                secs: endpoint.timeout_secs,
            }),
            Err(e) => Err(LlmError::Network {
                host,
                message: e.to_string(),
            }),
        },
        Err(ureq::Error::Status(code, resp)) => Err(LlmError::Status {
            code,
            body: resp.into_string().unwrap_or_default(),
        }),
        Err(ureq::Error::Transport(t)) => {
            let timed_out = std::error::Error::source(&t)
                .and_then(|s| s.downcast_ref::<io::Error>())
                .is_some_and(is_timeout);
            if timed_out {
                Err(LlmError::Timeout {
                    host,
                    secs: endpoint.timeout_secs,
                })
            } else {
                Err(LlmError::Network {
                    host,
                    message: t.to_string(),
                })
            }
        }
    }
}

fn transient(e: &LlmError) -> bool {
    match e {
        LlmError::Network { .. } | LlmError::Timeout { .. } => true,
        LlmError::Status { code, .. } => *code == 429 || *code >= 500,
        _ => false,
    }
}

fn agent(endpoint: &LlmEndpoint) -> ureq::Agent {
    ureq::AgentBuilder::new()
        .timeout(Duration::from_secs_f64(endpoint.timeout_secs))
        .build()
}

fn query_with(agent: &ureq::Agent, endpoint: &LlmEndpoint, prompt: &str) -> Result<LlmResponse, LlmError> {
    let mut backoff = Duration::from_millis(endpoint.initial_backoff_ms);
    let mut retries = 0;
    loop {
        match attempt(agent, endpoint, prompt) {
            Ok(text) => return Ok(LlmResponse { text, retries }),
            Err(e) if transient(&e) && retries < endpoint.max_retries => {
                retries += 1;
                log::warn!(
                    "request to {} failed ({e}); retry {retries}/{} in {backoff:?}",
                    endpoint.host(),
                    endpoint.max_retries
                );
                thread::sleep(backoff);
                backoff *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Sends one prompt, retrying transient failures (transport errors,
/// timeouts, 429 and 5xx) with exponential backoff.
pub fn query_llm_detailed(endpoint: &LlmEndpoint, prompt: &str) -> Result<LlmResponse, LlmError> {
    endpoint.validate()?;
    query_with(&agent(endpoint), endpoint, prompt)
}

/// Raw completion text for `prompt`.
pub fn query_llm(endpoint: &LlmEndpoint, prompt: &str) -> Result<String, LlmError> {
    query_llm_detailed(endpoint, prompt).map(|r| r.text)
}

/// Runs prompts with at most `max_concurrent` requests in flight; results
/// are returned in input order.
pub fn query_many(endpoint: &LlmEndpoint, prompts: &[String]) -> Result<Vec<Result<String, LlmError>>, LlmError> {
    endpoint.validate()?;
    let agent = agent(endpoint);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, LlmError>>>> = Mutex::new(vec![None; prompts.len()]);
    thread::scope(|s| {
        for _ in 0..endpoint.max_concurrent.min(prompts.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= prompts.len() {
                    break;
                }
                let r = query_with(&agent, endpoint, &prompts[i]).map(|r| r.text);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    Ok(results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every prompt handled"))
        .collect())
}
