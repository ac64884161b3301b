//! Training arguments for an external PEFT/LoRA fine-tuning harness.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantType {
    Nf4,
    Fp4,
}

impl QuantType {
    pub fn as_str(self) -> &'static str {
        match self {
            QuantType::Nf4 => "nf4",
            QuantType::Fp4 => "fp4",
        }
    }
}

impl FromStr for QuantType {
    type Err = LlmError;
    fn from_str(s: &str) -> Result<Self, LlmError> {
        match s {
            "nf4" => Ok(QuantType::Nf4),
            "fp4" => Ok(QuantType::Fp4),
            other => Err(LlmError::InvalidField {
                field: "bnb_4bit_quant_type",
                reason: format!("'{other}' is not nf4 or fp4"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub model_name: String,
    pub learning_rate: f64,
    pub num_train_epochs: u32,
    pub max_seq_length: u32,
    pub gradient_accumulation_steps: u32,
    pub load_in_4bit: bool,
    #[serde(rename = "bnb_4bit_quant_type")]
    pub quant_type: QuantType,
    pub lr_scheduler_type: String,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            model_name: "meta-llama/Llama-2-7b-chat-hf".into(),
            learning_rate: 5e-4,
            num_train_epochs: 10,
            max_seq_length: 2048,
            gradient_accumulation_steps: 2,
            load_in_4bit: true,
            quant_type: QuantType::Nf4,
            lr_scheduler_type: "linear".into(),
        }
    }
}

/// Fields left `None` keep their default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneOverrides {
    pub model_name: Option<String>,
    pub learning_rate: Option<f64>,
    pub num_train_epochs: Option<u32>,
    pub max_seq_length: Option<u32>,
    pub gradient_accumulation_steps: Option<u32>,
    pub load_in_4bit: Option<bool>,
    #[serde(rename = "bnb_4bit_quant_type")]
    pub quant_type: Option<QuantType>,
    pub lr_scheduler_type: Option<String>,
}

fn invalid(field: &'static str, reason: &str) -> LlmError {
    LlmError::InvalidField {
        field,
        reason: reason.to_string(),
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.model_name.trim().is_empty() {
            return Err(invalid("model_name", "must not be empty"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate", "must be a positive number"));
        }
        for (field, v) in [
            ("num_train_epochs", self.num_train_epochs),
            ("max_seq_length", self.max_seq_length),
            ("gradient_accumulation_steps", self.gradient_accumulation_steps),
        ] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if self.lr_scheduler_type.trim().is_empty() {
            return Err(invalid("lr_scheduler_type", "must not be empty"));
        }
        Ok(())
    }

    /// Flat JSON object, one key per line, in the order the fields are
    /// declared. Reals use the shortest exponent form (`5e-4`).
    pub fn to_document(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serialises");
        let mut out = String::from("{\n");
        let lines = [
            ("model_name", q(&self.model_name)),
            ("learning_rate", format!("{:e}", self.learning_rate)),
            ("num_train_epochs", self.num_train_epochs.to_string()),
            ("max_seq_length", self.max_seq_length.to_string()),
            (
                "gradient_accumulation_steps",
                self.gradient_accumulation_steps.to_string(),
            ),
            ("load_in_4bit", self.load_in_4bit.to_string()),
            ("bnb_4bit_quant_type", q(self.quant_type.as_str())),
            ("lr_scheduler_type", q(&self.lr_scheduler_type)),
        ];
        for (i, (k, v)) in lines.iter().enumerate() {
            let comma = if i + 1 < lines.len() { "," } else { "" };
            let _ = writeln!(out, "  \"{k}\": {v}{comma}");
        }
        out.push_str("}\n");
        out
    }
}

pub fn emit_finetune_config(overrides: &FinetuneOverrides) -> Result<(FinetuneConfig, String), LlmError> {
    let d = FinetuneConfig::default();
    let o = overrides.clone();
    let cfg = FinetuneConfig {
        model_name: o.model_name.unwrap_or(d.model_name),
        learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
        num_train_epochs: o.num_train_epochs.unwrap_or(d.num_train_epochs),
        max_seq_length: o.max_seq_length.unwrap_or(d.max_seq_length),
        gradient_accumulation_steps: o.gradient_accumulation_steps.unwrap_or(d.gradient_accumulation_steps),
        load_in_4bit: o.load_in_4bit.unwrap_or(d.load_in_4bit),
        quant_type: o.quant_type.unwrap_or(d.quant_type),
        lr_scheduler_type: o.lr_scheduler_type.unwrap_or(d.lr_scheduler_type),
    };
    cfg.validate()?;
    let doc = cfg.to_document();
    Ok((cfg, doc))
}
