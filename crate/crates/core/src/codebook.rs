//! Structured expert codebook: label definitions with decision rules,
//! global annotation rules, and worked examples, parsed from a sectioned
//! plain-text document.
//!
//! The format is deliberately markup-free so domain experts can edit and
//! diff it:
//!
//! ```text
//! [LABEL Positive]
//! definition: ...
//! rule: ...
//! include: ...
//! exclude: ...
//!
//! [RULES]
//! - global rule, one per line
//!
//! [EXAMPLE]
//! text: ...
//! label: positive
//! rationale: ...
//! ```

use crate::label::SentimentLabel;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CodebookError {
    #[error("io error: {0}")]
    Io(String),
    #[error("missing [LABEL {}] section", .0.display_name())]
    MissingLabelSection(SentimentLabel),
    #[error("malformed example #{index}: {msg}")]
    MalformedExample { index: usize, msg: String },
    #[error("malformed section {header:?} at line {line}: {msg}")]
    MalformedSection {
        header: String,
        line: usize,
        msg: String,
    },
    #[error("{requested} examples requested but only {available} available")]
    TooFewExamples { requested: usize, available: usize },
}

/// Definition and criteria for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDef {
    pub label: SentimentLabel,
    pub definition: String,
    pub decision_rules: Vec<String>,
    pub inclusion_criteria: Vec<String>,
    pub exclusion_criteria: Vec<String>,
}

/// A worked example with its gold label and a brief rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookExample {
    pub text: String,
    pub gold_label: SentimentLabel,
    pub rationale: String,
}

/// The parsed codebook. Label definitions, global rules, and examples keep
/// their document order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub labels: Vec<LabelDef>,
    pub global_rules: Vec<String>,
    pub examples: Vec<CodebookExample>,
}

impl Codebook {
    pub fn label_def(&self, label: SentimentLabel) -> &LabelDef {
        self.labels
            .iter()
            .find(|d| d.label == label)
            .expect("parse guarantees all three labels")
    }
}

/// Parse a codebook file.
pub fn parse_codebook(path: &Path) -> Result<Codebook, CodebookError> {
    let content = fs::read_to_string(path).map_err(|e| CodebookError::Io(e.to_string()))?;
    parse_codebook_str(&content)
}

enum Section {
    None,
    Label(usize),   // index into labels
    Rules,
    Example(usize), // index into examples
}

struct PartialExample {
    text: Option<String>,
    label: Option<SentimentLabel>,
    rationale: String,
}

/// Parse codebook content. See the module docs for the format.
pub fn parse_codebook_str(content: &str) -> Result<Codebook, CodebookError> {
    let mut labels: Vec<LabelDef> = Vec::new();
    let mut global_rules: Vec<String> = Vec::new();
    let mut partial_examples: Vec<PartialExample> = Vec::new();
    let mut section = Section::None;

    for (idx, raw) in content.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let header = header.trim();
            if let Some(name) = header.strip_prefix("LABEL ") {
                let label = SentimentLabel::parse(name).ok_or_else(|| {
                    CodebookError::MalformedSection {
                        header: line.to_string(),
                        line: lineno,
                        msg: format!("unknown label {name:?}"),
                    }
                })?;
                if labels.iter().any(|d| d.label == label) {
                    return Err(CodebookError::MalformedSection {
                        header: line.to_string(),
                        line: lineno,
                        msg: "duplicate label section".into(),
                    });
                }
                labels.push(LabelDef {
                    label,
                    definition: String::new(),
                    decision_rules: Vec::new(),
                    inclusion_criteria: Vec::new(),
                    exclusion_criteria: Vec::new(),
                });
                section = Section::Label(labels.len() - 1);
            } else if header == "RULES" {
                section = Section::Rules;
            } else if header == "EXAMPLE" {
                partial_examples.push(PartialExample {
                    text: None,
                    label: None,
                    rationale: String::new(),
                });
                section = Section::Example(partial_examples.len() - 1);
            } else {
                return Err(CodebookError::MalformedSection {
                    header: line.to_string(),
                    line: lineno,
                    msg: "unknown section header".into(),
                });
            }
            continue;
        }

        match section {
            Section::None => {
                return Err(CodebookError::MalformedSection {
                    header: String::new(),
                    line: lineno,
                    msg: "content before the first section header".into(),
                });
            }
            Section::Label(i) => {
                let def = &mut labels[i];
                let (key, value) = split_key(line).ok_or_else(|| {
                    CodebookError::MalformedSection {
                        header: format!("[LABEL {}]", def.label.display_name()),
                        line: lineno,
                        msg: "expected `key: value`".into(),
                    }
                })?;
                match key {
                    "definition" => def.definition = value.to_string(),
                    "rule" => def.decision_rules.push(value.to_string()),
                    "include" => def.inclusion_criteria.push(value.to_string()),
                    "exclude" => def.exclusion_criteria.push(value.to_string()),
                    other => {
                        return Err(CodebookError::MalformedSection {
                            header: format!("[LABEL {}]", def.label.display_name()),
                            line: lineno,
                            msg: format!("unknown key {other:?}"),
                        });
                    }
                }
            }
            Section::Rules => {
                global_rules.push(line.strip_prefix("- ").unwrap_or(line).to_string());
            }
            Section::Example(i) => {
                let index = i + 1;
                let example = &mut partial_examples[i];
                let (key, value) = split_key(line).ok_or_else(|| {
                    CodebookError::MalformedExample {
                        index,
                        msg: "expected `key: value`".into(),
                    }
                })?;
                match key {
                    "text" => example.text = Some(value.to_string()),
                    "label" => {
                        example.label = Some(SentimentLabel::parse(value).ok_or_else(|| {
                            CodebookError::MalformedExample {
                                index,
                                msg: format!("unknown gold label {value:?}"),
                            }
                        })?)
                    }
                    "rationale" => example.rationale = value.to_string(),
                    other => {
                        return Err(CodebookError::MalformedExample {
                            index,
                            msg: format!("unknown key {other:?}"),
                        });
                    }
                }
            }
        }
    }

    for label in SentimentLabel::ALL {
        let def = labels.iter().find(|d| d.label == label);
        match def {
            None => return Err(CodebookError::MissingLabelSection(label)),
            Some(def) if def.definition.trim().is_empty() => {
                return Err(CodebookError::MalformedSection {
                    header: format!("[LABEL {}]", label.display_name()),
                    line: 0,
                    msg: "missing definition".into(),
                });
            }
            Some(_) => {}
        }
    }

    let mut examples = Vec::with_capacity(partial_examples.len());
    for (i, partial) in partial_examples.into_iter().enumerate() {
        let index = i + 1;
        let text = partial.text.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(CodebookError::MalformedExample {
                index,
                msg: "missing or empty text".into(),
            });
        }
        let gold_label = partial.label.ok_or(CodebookError::MalformedExample {
            index,
            msg: "missing gold label".into(),
        })?;
        examples.push(CodebookExample {
            text,
            gold_label,
            rationale: partial.rationale,
        });
    }

    Ok(Codebook {
        labels,
        global_rules,
        examples,
    })
}

fn split_key(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once(':')?;
    Some((key.trim(), value.trim()))
}
