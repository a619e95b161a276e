//! Transparent valence-lexicon baseline: sum matched token valences and
//! squash into a compound score in [-1, 1].

use crate::label::SentimentLabel;
use std::collections::HashMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Normalization constant of the compound squashing s / sqrt(s^2 + ALPHA).
const ALPHA: f64 = 15.0;

/// Compound scores inside [-NEUTRAL_BAND, +NEUTRAL_BAND] classify as
/// Neutral; the band is closed on both ends.
const NEUTRAL_BAND: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
}

/// Token-to-valence map with case folded to lowercase at load time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon::default()
    }

    /// Insert one entry; the token is folded to lowercase.
    pub fn insert(&mut self, token: &str, valence: f64) -> Result<(), LexiconError> {
        let token = token.to_lowercase();
        if token.is_empty() {
            return Err(LexiconError::Parse {
                line: 0,
                msg: "empty token".into(),
            });
        }
        if !valence.is_finite() {
            return Err(LexiconError::Parse {
                line: 0,
                msg: format!("non-finite valence for {token:?}"),
            });
        }
        if self.entries.contains_key(&token) {
            return Err(LexiconError::DuplicateToken(token));
        }
        self.entries.insert(token, valence);
        Ok(())
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A copy with every valence negated, handy for symmetry checks.
    pub fn negated(&self) -> Lexicon {
        Lexicon {
            entries: self.entries.iter().map(|(t, v)| (t.clone(), -v)).collect(),
        }
    }
}

/// Lexicon-derived sentiment scalar, always in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CompoundScore(f64);

impl CompoundScore {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Load a `token<TAB>valence` lexicon file. Lines starting with `#` and
/// blank lines are skipped; tokens fold to lowercase; duplicates are
/// rejected.
pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let content = fs::read_to_string(path).map_err(|e| LexiconError::Io(e.to_string()))?;
    let mut lexicon = Lexicon::new();
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (token, valence) = trimmed.split_once('\t').ok_or_else(|| LexiconError::Parse {
            line: lineno,
            msg: "expected token<TAB>valence".into(),
        })?;
        let valence: f64 = valence.trim().parse().map_err(|_| LexiconError::Parse {
            line: lineno,
            msg: format!("invalid valence {:?}", valence.trim()),
        })?;
        if !valence.is_finite() {
            return Err(LexiconError::Parse {
                line: lineno,
                msg: "valence must be finite".into(),
            });
        }
        lexicon.insert(token.trim(), valence).map_err(|e| match e {
            LexiconError::DuplicateToken(t) => LexiconError::DuplicateToken(t),
            LexiconError::Parse { msg, .. } => LexiconError::Parse { line: lineno, msg },
            other => other,
        })?;
    }
    Ok(lexicon)
}

/// Split on Unicode whitespace, strip non-alphanumeric characters from both
/// ends of each token, and fold to lowercase. No stemming, no negation or
/// booster handling: this scorer is a deliberately plain baseline.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if token.is_empty() {
            None
        } else {
            Some(token.to_lowercase())
        }
    })
}

/// Sum matched valences s and squash: s / sqrt(s^2 + 15). Text with no
/// lexicon hits scores exactly 0.
pub fn compound_score(text: &str, lexicon: &Lexicon) -> CompoundScore {
    let s: f64 = tokenize(text).filter_map(|t| lexicon.valence(&t)).sum();
    if s == 0.0 {
        return CompoundScore(0.0);
    }
    CompoundScore(s / (s * s + ALPHA).sqrt())
}

/// Threshold a compound score into the three labels. The band
/// [-0.1, 0.1] is closed: both endpoints classify as Neutral.
pub fn classify_compound(score: CompoundScore) -> SentimentLabel {
    let v = score.value();
    if v > NEUTRAL_BAND {
        SentimentLabel::Positive
    } else if v < -NEUTRAL_BAND {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}
