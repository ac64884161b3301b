use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;

pub const SYSTEM_LINE: &str = "You are an expert in fake news and disinformation revealing and analytics.";
const OPEN: &str = "<s>[INST] <<SYS>>\n";
const SYS_CLOSE: &str = "\n<</SYS>>\n\n";
const CLOSE: &str = " [/INST]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    NarrativeAnalysis,
    FactCheck,
    FakeDetection,
    ManipulationAnalytics,
    EntitySentiment,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::NarrativeAnalysis,
        TaskKind::FactCheck,
        TaskKind::FakeDetection,
        TaskKind::ManipulationAnalytics,
        TaskKind::EntitySentiment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::NarrativeAnalysis => "narrative-analysis",
            TaskKind::FactCheck => "fact-check",
            TaskKind::FakeDetection => "fake-detection",
            TaskKind::ManipulationAnalytics => "manipulation-analytics",
            TaskKind::EntitySentiment => "entity-sentiment",
        }
    }

    pub fn default_question(self) -> &'static str {
        match self {
            TaskKind::NarrativeAnalysis => {
                "Please analyse input text from perspective of revealing disinformation narratives."
            }
            TaskKind::FactCheck => {
                "Please check the facts in the following text and reveal false or misleading claims."
            }
            TaskKind::FakeDetection => "Write finish conclusion if we can treat this text as fake news.",
            TaskKind::ManipulationAnalytics => {
                "Please analyse the following text from perspective of revealing disinformation and manipulation."
            }
            TaskKind::EntitySentiment => "Please find the entities and their sentiments in the text.",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = LlmError;
    fn from_str(s: &str) -> Result<Self, LlmError> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| LlmError::Config(format!("unknown task '{s}'")))
    }
}

/// Llama-2 chat prompt:
///
/// ```text
/// <s>[INST] <<SYS>>
/// {system line}
/// <</SYS>>
///
/// {question}
/// {input text} [/INST]
/// ```
///
/// A custom question must be a single non-empty line so the layout stays
/// unambiguous.
pub fn build_prompt(task: TaskKind, input_text: &str, custom_question: Option<&str>) -> Result<String, LlmError> {
    if input_text.trim().is_empty() {
        return Err(LlmError::EmptyInput);
    }
    let question = custom_question.unwrap_or(task.default_question());
    if question.trim().is_empty() || question.contains(['\n', '\r']) {
        return Err(LlmError::BadQuestion(question.to_string()));
    }
    Ok(format!("{OPEN}{SYSTEM_LINE}{SYS_CLOSE}{question}\n{input_text}{CLOSE}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPrompt {
    pub system: String,
    pub question: String,
    pub input_text: String,
}

/// Inverse of [`build_prompt`].
pub fn parse_prompt(prompt: &str) -> Option<ParsedPrompt> {
    let body = prompt.strip_prefix(OPEN)?.strip_suffix(CLOSE)?;
    let (system, rest) = body.split_once(SYS_CLOSE)?;
    let (question, input_text) = rest.split_once('\n')?;
    Some(ParsedPrompt {
        system: system.to_string(),
        question: question.to_string(),
        input_text: input_text.to_string(),
    })
}
