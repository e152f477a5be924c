use std::fmt;

use serde::{Deserialize, Serialize};

/// Where an interpretation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Rule,
    Llm,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Rule => "rule",
            Source::Llm => "llm",
        })
    }
}

/// One candidate meaning before embedding: a restatement, the context
/// under which it holds, and a confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInterpretation {
    pub meaning: String,
    pub context_label: String,
    pub confidence: f64,
    pub source: Source,
}

impl RawInterpretation {
    pub fn new(
        meaning: impl Into<String>,
        context_label: impl Into<String>,
        confidence: f64,
        source: Source,
    ) -> Self {
        RawInterpretation {
            meaning: meaning.into(),
            context_label: context_label.into(),
            confidence,
            source,
        }
    }
}
