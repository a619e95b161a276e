//! Reply parsing: a strict structured pass first, then a lenient fallback
//! that is flagged for audit.

use annolab_core::SentimentLabel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ResponseParseError {
    #[error("no sentiment label found in the reply")]
    NoLabel,
    #[error("confidence expected but none found in [0, 1]")]
    MissingConfidence,
}

/// A successfully parsed reply. `lenient` marks replies that failed the
/// strict structured pass and were recovered by text search.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub label: SentimentLabel,
    pub confidence: Option<f64>,
    pub lenient: bool,
}

/// Parse a model reply.
///
/// Strict pass: a JSON object whose keys are a subset of
/// `{label, confidence}`, with a valid label name and, when expected, a
/// confidence in [0, 1]. Lenient pass: earliest case-insensitive label-name
/// occurrence, plus the first numeric in [0, 1] after a "confidence" or
/// "certainty" cue. Confidence is only reported when the prompt asked for
/// it, keeping the "confidence present iff enabled" invariant.
pub fn parse_response(
    raw: &str,
    confidence_expected: bool,
) -> Result<ParsedResponse, ResponseParseError> {
    if let Some(parsed) = strict_parse(raw, confidence_expected) {
        return Ok(parsed);
    }
    lenient_parse(raw, confidence_expected)
}

fn strict_parse(raw: &str, confidence_expected: bool) -> Option<ParsedResponse> {
    let body = strip_code_fence(raw.trim());
    let value: serde_json::Value = serde_json::from_str(body).ok()?;
    let object = value.as_object()?;
    if !object.keys().all(|k| k == "label" || k == "confidence") {
        return None;
    }
    let label = SentimentLabel::parse(object.get("label")?.as_str()?)?;
    let confidence = match object.get("confidence") {
        Some(v) => {
            let c = v.as_f64()?;
            if !(0.0..=1.0).contains(&c) {
                return None;
            }
            Some(c)
        }
        None => None,
    };
    if confidence_expected && confidence.is_none() {
        return None;
    }
    Some(ParsedResponse {
        label,
        confidence: if confidence_expected { confidence } else { None },
        lenient: false,
    })
}

fn lenient_parse(
    raw: &str,
    confidence_expected: bool,
) -> Result<ParsedResponse, ResponseParseError> {
    let lowered = raw.to_lowercase();
    let label = SentimentLabel::ALL
        .iter()
        .filter_map(|&l| lowered.find(l.name()).map(|pos| (pos, l)))
        .min_by_key(|(pos, _)| *pos)
        .map(|(_, l)| l)
        .ok_or(ResponseParseError::NoLabel)?;

    let confidence = if confidence_expected {
        Some(find_confidence(&lowered).ok_or(ResponseParseError::MissingConfidence)?)
    } else {
        None
    };
    Ok(ParsedResponse {
        label,
        confidence,
        lenient: true,
    })
}

/// First numeric token in [0, 1] after a confidence cue.
fn find_confidence(lowered: &str) -> Option<f64> {
    let cue_pos = ["confidence", "certainty"]
        .iter()
        .filter_map(|cue| lowered.find(cue).map(|p| p + cue.len()))
        .min()?;
    let tail = &lowered[cue_pos..];
    let mut token = String::new();
    let mut tokens = Vec::new();
    for ch in tail.chars() {
        if ch.is_ascii_digit() || ch == '.' {
            token.push(ch);
        } else if !token.is_empty() {
            tokens.push(std::mem::take(&mut token));
        }
    }
    if !token.is_empty() {
        tokens.push(token);
    }
    tokens
        .iter()
        .filter_map(|t| t.parse::<f64>().ok())
        .find(|v| (0.0..=1.0).contains(v))
}

fn strip_code_fence(body: &str) -> &str {
    let Some(rest) = body.strip_prefix("```") else {
        return body;
    };
    // Drop the info string ("json", ...) on the opening fence line.
    let rest = rest.split_once('\n').map(|(_, tail)| tail).unwrap_or(rest);
    rest.strip_suffix("```").map(str::trim).unwrap_or(body)
}
