//! Prompt construction, endpoint client, entity-sentiment extraction and
//! fine-tuning configuration.

mod client;
mod entities;
mod finetune;
mod prompt;

use thiserror::Error;

pub use client::{query_llm, query_llm_detailed, query_many, LlmEndpoint, LlmResponse, Protocol};
pub use entities::{parse_entity_sentiments, records_to_json, sentiment_features, EntitySentiment, Sentiment};
pub use finetune::{emit_finetune_config, FinetuneConfig, FinetuneOverrides, QuantType};
pub use prompt::{build_prompt, parse_prompt, ParsedPrompt, TaskKind, SYSTEM_LINE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LlmError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("question must be a single non-empty line: {0:?}")]
    BadQuestion(String),
    #[error("no JSON array found in response")]
    NoArray,
    #[error("response array holds no valid entity records")]
    NoValidRecords,
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("network error talking to {host}: {message}")]
    Network { host: String, message: String },
    #[error("endpoint returned status {code}")]
    Status { code: u16, body: String },
    #[error("request to {host} timed out after {secs}s")]
    Timeout { host: String, secs: f64 },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("{0}")]
    Config(String),
}
