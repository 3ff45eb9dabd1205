use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capability taxonomy of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Capability {
    /// General recognition.
    Rec,
    /// Knowledge and reasoning.
    Know,
    /// Language generation.
    Gen,
    /// Spatial awareness.
    Spat,
    /// Embodied interaction.
    Emb,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::Rec,
        Capability::Know,
        Capability::Gen,
        Capability::Spat,
        Capability::Emb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Capability::Rec => "Rec",
            Capability::Know => "Know",
            Capability::Gen => "Gen",
            Capability::Spat => "Spat",
            Capability::Emb => "Emb",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Capability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Capability::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::SchemaError(format!("unknown capability {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QARecord {
    pub id: String,
    pub capability: Capability,
    pub question: String,
    pub ground_truth: String,
    /// Missing answers are scored as the empty string.
    pub model_answer: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    capability: String,
    question: String,
    ground_truth: String,
    #[serde(default)]
    model_answer: Option<String>,
}

/// Reads JSON-lines records. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn ingest_reader(reader: impl BufRead) -> Result<Vec<QARecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::parse_at(lineno, e.to_string()))?;
        let raw: RawRecord = serde_json::from_value(value)
            .map_err(|e| Error::SchemaError(format!("line {lineno}: {e}")))?;
        let capability = raw
            .capability
            .parse::<Capability>()
            .map_err(|e| Error::SchemaError(format!("line {lineno}: {}", inner(e))))?;
        if !seen.insert(raw.id.clone()) {
            return Err(Error::SchemaError(format!(
                "line {lineno}: duplicate id {:?}",
                raw.id
            )));
        }
        out.push(QARecord {
            id: raw.id,
            capability,
            question: raw.question,
            ground_truth: raw.ground_truth,
            model_answer: raw.model_answer,
        });
    }
    Ok(out)
}

fn inner(e: Error) -> String {
    match e {
        Error::SchemaError(m) => m,
        other => other.to_string(),
    }
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Vec<QARecord>> {
    ingest_reader(BufReader::new(File::open(path)?))
}
