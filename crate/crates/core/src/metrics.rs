//! Classification metrics against majority gold labels, and the
//! distributional comparison of model-human versus human-human agreement.

use crate::label::SentimentLabel;
use crate::mann_whitney::{
    mann_whitney_u, Alternative, MannWhitneyError, MannWhitneyResult,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and gold vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    EmptySample,
}

/// Fraction of predictions equal to gold.
pub fn accuracy(preds: &[SentimentLabel], gold: &[SentimentLabel]) -> Result<f64, MetricsError> {
    if preds.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), gold.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let correct = preds.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// One-vs-rest metrics for a single label. Zero-denominator cells carry the
/// value 0 with the matching `*_defined` flag cleared, so metric grids stay
/// rectangular without hiding the undefined case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub precision_defined: bool,
    pub recall: f64,
    pub recall_defined: bool,
    pub f1: f64,
    pub f1_defined: bool,
    /// Gold-standard occurrences of this label.
    pub support: usize,
}

/// Per-label precision/recall/F1 plus overall accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub per_label: Vec<LabelMetrics>,
    pub accuracy: f64,
    pub n: usize,
}

/// Compute per-class precision, recall, and F1 from aligned label vectors.
pub fn per_class_prf(
    preds: &[SentimentLabel],
    gold: &[SentimentLabel],
) -> Result<ClassMetrics, MetricsError> {
    if preds.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), gold.len()));
    }
    if preds.is_empty() {
        return Err(MetricsError::EmptySample);
    }

    let mut per_label = Vec::with_capacity(3);
    for label in SentimentLabel::ALL {
        let tp = preds
            .iter()
            .zip(gold)
            .filter(|(p, g)| **p == label && **g == label)
            .count() as f64;
        let predicted = preds.iter().filter(|p| **p == label).count() as f64;
        let support = gold.iter().filter(|g| **g == label).count();

        let precision_defined = predicted > 0.0;
        let precision = if precision_defined { tp / predicted } else { 0.0 };
        let recall_defined = support > 0;
        let recall = if recall_defined { tp / support as f64 } else { 0.0 };
        let f1_defined = precision + recall > 0.0;
        let f1 = if f1_defined {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_label.push(LabelMetrics {
            label,
            precision,
            precision_defined,
            recall,
            recall_defined,
            f1,
            f1_defined,
            support,
        });
    }

    Ok(ClassMetrics {
        per_label,
        accuracy: accuracy(preds, gold)?,
        n: preds.len(),
    })
}

/// Outcome of comparing model-human agreement against human-human agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoSignificantDifference,
    SignificantDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementComparison {
    pub mann_whitney: MannWhitneyResult,
    pub alpha: f64,
    pub verdict: Verdict,
}

/// Two-sided Mann-Whitney U over the two kappa distributions. The verdict is
/// "no statistically significant difference" iff p > alpha.
pub fn compare_llm_human_agreement(
    human_pair_kappas: &[f64],
    model_human_kappas: &[f64],
    alpha: f64,
) -> Result<AgreementComparison, MannWhitneyError> {
    let mann_whitney =
        mann_whitney_u(human_pair_kappas, model_human_kappas, Alternative::TwoSided)?;
    let verdict = if mann_whitney.p_value > alpha {
        Verdict::NoSignificantDifference
    } else {
        Verdict::SignificantDifference
    };
    Ok(AgreementComparison {
        mann_whitney,
        alpha,
        verdict,
    })
}
