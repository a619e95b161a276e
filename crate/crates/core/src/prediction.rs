//! Model predictions and their JSONL interchange format, shared by the
//! LLM client, the lexicon baseline, and externally produced prediction
//! files (e.g. fine-tuned transformer outputs).

use crate::label::SentimentLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("duplicate prediction for post {post_id:?} by model {model_id:?}")]
    DuplicatePair { post_id: String, model_id: String },
}

/// One model label for one post. `confidence` is present exactly when the
/// producing prompt was confidence-enabled; `lenient_parse` marks replies
/// that needed the fallback parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub post_id: String,
    pub model_id: String,
    pub label: SentimentLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub cached: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lenient_parse: bool,
}

impl Prediction {
    fn validate(self, line: usize) -> Result<Prediction, PredictionError> {
        if let Some(c) = self.confidence {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(PredictionError::Parse {
                    line,
                    msg: format!("confidence {c} outside [0, 1]"),
                });
            }
        }
        Ok(self)
    }
}

/// Predictions grouped by model id, each group sorted by post id.
pub type PredictionSet = BTreeMap<String, Vec<Prediction>>;

/// Read a prediction JSONL file. `#`-prefixed provenance lines are skipped;
/// (post, model) pairs must be unique.
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, PredictionError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let pred: Prediction = serde_json::from_str(trimmed).map_err(|e| PredictionError::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let pred = pred.validate(idx + 1)?;
        if !seen.insert((pred.post_id.clone(), pred.model_id.clone())) {
            return Err(PredictionError::DuplicatePair {
                post_id: pred.post_id,
                model_id: pred.model_id,
            });
        }
        out.push(pred);
    }
    Ok(out)
}

/// Write predictions as JSONL with optional `#` provenance header lines.
pub fn write_predictions(
    path: &Path,
    predictions: &[Prediction],
    header: Option<&str>,
) -> Result<(), PredictionError> {
    let mut file = fs::File::create(path)?;
    if let Some(header) = header {
        for line in header.lines() {
            writeln!(file, "# {line}")?;
        }
    }
    for pred in predictions {
        writeln!(file, "{}", serde_json::to_string(pred).expect("serializable"))?;
    }
    Ok(())
}

/// Group a flat prediction list by model id, sorting each group by post id.
pub fn group_by_model(predictions: Vec<Prediction>) -> PredictionSet {
    let mut set = PredictionSet::new();
    for pred in predictions {
        set.entry(pred.model_id.clone()).or_default().push(pred);
    }
    for group in set.values_mut() {
        group.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    }
    set
}
