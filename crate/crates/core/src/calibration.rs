//! Confidence calibration: reliability binning with expected calibration
//! error, confidence-concentration diagnostics, and selective accuracy.

use crate::label::SentimentLabel;
use crate::prediction::Prediction;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("predictions without confidence: {0:?}")]
    MissingConfidence(Vec<String>),
    #[error("need at least 2 bins, got {0}")]
    InvalidBins(usize),
}

/// A prediction that carries a confidence and its correctness against gold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidentPrediction {
    pub post_id: String,
    pub confidence: f64,
    pub correct: bool,
}

/// One reliability bin. `mean_confidence` and `accuracy` are None for empty
/// bins so plots can show honest gaps instead of interpolated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Binned confidence-versus-accuracy summary.
///
/// Bins are equal width over [0, 1], right-inclusive, with the first bin
/// closed on both ends. ECE is the count-weighted mean absolute gap between
/// bin accuracy and bin mean confidence over non-empty bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<ReliabilityBin>,
    pub ece: f64,
    pub n_total: usize,
    /// Fraction of predictions with confidence strictly above the threshold.
    pub concentration_mass: f64,
    pub concentration_threshold: f64,
    pub concentration_flagged: bool,
}

/// Default confidence threshold for the concentration diagnostic.
pub const DEFAULT_CONCENTRATION_CONF: f64 = 0.8;
/// Default mass threshold above which the distribution counts as
/// concentrated (and therefore uninformative for quality assessment).
pub const DEFAULT_CONCENTRATION_MASS: f64 = 0.9;

/// Pair predictions with gold labels, demanding a confidence on every one.
pub fn collect_confident(
    predictions: &[Prediction],
    gold: impl Fn(&str) -> Option<SentimentLabel>,
) -> Result<Vec<ConfidentPrediction>, CalibrationError> {
    let missing: Vec<String> = predictions
        .iter()
        .filter(|p| p.confidence.is_none())
        .map(|p| p.post_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CalibrationError::MissingConfidence(missing));
    }
    Ok(predictions
        .iter()
        .filter_map(|p| {
            gold(&p.post_id).map(|g| ConfidentPrediction {
                post_id: p.post_id.clone(),
                confidence: p.confidence.expect("checked above"),
                correct: p.label == g,
            })
        })
        .collect())
}

fn bin_index(confidence: f64, n_bins: usize) -> usize {
    if confidence <= 0.0 {
        return 0;
    }
    // Right-inclusive bins: c lands in bin ceil(c * n) - 1.
    let idx = (confidence * n_bins as f64).ceil() as usize;
    idx.saturating_sub(1).min(n_bins - 1)
}

/// Equal-width reliability binning with ECE and the concentration
/// diagnostic at its default thresholds.
pub fn bin_reliability(
    predictions: &[ConfidentPrediction],
    n_bins: usize,
) -> Result<CalibrationReport, CalibrationError> {
    if n_bins < 2 {
        return Err(CalibrationError::InvalidBins(n_bins));
    }
    let mut counts = vec![0usize; n_bins];
    let mut conf_sums = vec![0.0f64; n_bins];
    let mut correct = vec![0usize; n_bins];
    for p in predictions {
        let idx = bin_index(p.confidence, n_bins);
        counts[idx] += 1;
        conf_sums[idx] += p.confidence;
        if p.correct {
            correct[idx] += 1;
        }
    }

    let n_total = predictions.len();
    let width = 1.0 / n_bins as f64;
    let mut bins = Vec::with_capacity(n_bins);
    let mut ece = 0.0;
    for i in 0..n_bins {
        let (mean_confidence, accuracy) = if counts[i] > 0 {
            let mean = conf_sums[i] / counts[i] as f64;
            let acc = correct[i] as f64 / counts[i] as f64;
            ece += counts[i] as f64 / n_total as f64 * (acc - mean).abs();
            (Some(mean), Some(acc))
        } else {
            (None, None)
        };
        bins.push(ReliabilityBin {
            lo: i as f64 * width,
            hi: (i + 1) as f64 * width,
            count: counts[i],
            mean_confidence,
            accuracy,
        });
    }

    let mass = concentration_mass(predictions, DEFAULT_CONCENTRATION_CONF);
    Ok(CalibrationReport {
        bins,
        ece,
        n_total,
        concentration_mass: mass,
        concentration_threshold: DEFAULT_CONCENTRATION_CONF,
        concentration_flagged: mass > DEFAULT_CONCENTRATION_MASS,
    })
}

fn concentration_mass(predictions: &[ConfidentPrediction], threshold_conf: f64) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().filter(|p| p.confidence > threshold_conf).count() as f64
        / predictions.len() as f64
}

/// True iff the fraction of predictions with confidence strictly above
/// `threshold_conf` strictly exceeds `threshold_mass`. A flagged
/// distribution is too concentrated to rank prediction quality.
pub fn concentration_flag(
    predictions: &[ConfidentPrediction],
    threshold_conf: f64,
    threshold_mass: f64,
) -> bool {
    debug_assert!(threshold_conf > 0.0 && threshold_conf < 1.0);
    concentration_mass(predictions, threshold_conf) > threshold_mass
}

/// One point of the selective accuracy curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectivePoint {
    pub confidence_cutoff: f64,
    /// Fraction of predictions with confidence >= cutoff.
    pub coverage: f64,
    /// Accuracy over the kept subset; None when nothing is kept.
    pub accuracy: Option<f64>,
}

/// Coverage and accuracy when only predictions at or above each cutoff in
/// {0.0, 0.05, ..., 1.0} are kept.
pub fn selective_accuracy_curve(predictions: &[ConfidentPrediction]) -> Vec<SelectivePoint> {
    (0..=20)
        .map(|step| {
            let cutoff = step as f64 * 0.05;
            let kept: Vec<&ConfidentPrediction> = predictions
                .iter()
                .filter(|p| p.confidence >= cutoff)
                .collect();
            let coverage = if predictions.is_empty() {
                0.0
            } else {
                kept.len() as f64 / predictions.len() as f64
            };
            let accuracy = if kept.is_empty() {
                None
            } else {
                Some(kept.iter().filter(|p| p.correct).count() as f64 / kept.len() as f64)
            };
            SelectivePoint {
                confidence_cutoff: cutoff,
                coverage,
                accuracy,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn cp(confidence: f64, correct: bool) -> ConfidentPrediction {
        ConfidentPrediction {
            post_id: String::new(),
            confidence,
            correct,
        }
    }

    #[test]
    fn bin_index_respects_right_inclusive_edges() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0, "0.1 belongs to the closed first bin");
        assert_eq!(bin_index(0.1 + 1e-12, 10), 1);
        assert_eq!(bin_index(0.95, 10), 9);
        assert_eq!(bin_index(1.0, 10), 9);
    }

    #[test]
    fn all_correct_and_fully_confident_has_zero_ece() {
        let preds: Vec<_> = (0..50).map(|_| cp(1.0, true)).collect();
        let report = bin_reliability(&preds, 10).unwrap();
        assert_eq!(report.ece, 0.0);
        let top = report.bins.last().unwrap();
        assert_eq!(top.count, 50);
        assert_eq!(top.accuracy, Some(1.0));
        assert_eq!(report.bins.iter().filter(|b| b.count > 0).count(), 1);
    }

    #[test]
    fn fully_confident_half_right_has_ece_half() {
        let preds: Vec<_> = (0..100).map(|i| cp(1.0, i % 2 == 0)).collect();
        let report = bin_reliability(&preds, 10).unwrap();
        assert!((report.ece - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_bins_are_undefined_not_zero() {
        let preds = vec![cp(0.95, true), cp(0.05, false)];
        let report = bin_reliability(&preds, 10).unwrap();
        assert_eq!(report.bins[5].count, 0);
        assert_eq!(report.bins[5].accuracy, None);
        assert_eq!(report.bins[5].mean_confidence, None);
        // Counts sum to the total.
        let total: usize = report.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, report.n_total);
    }

    #[test]
    fn mean_confidence_stays_inside_each_bin() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let preds: Vec<_> = (0..500)
            .map(|_| cp(rng.gen::<f64>(), rng.gen::<bool>()))
            .collect();
        let report = bin_reliability(&preds, 10).unwrap();
        for bin in report.bins.iter().filter(|b| b.count > 0) {
            let mean = bin.mean_confidence.unwrap();
            assert!(mean >= bin.lo - 1e-12 && mean <= bin.hi + 1e-12);
        }
    }

    #[test]
    fn planted_per_bin_accuracy_gives_small_ece() {
        // Construct each bin so accuracy equals its mean confidence exactly.
        let mut preds = Vec::new();
        for bin in 0..10 {
            let conf = bin as f64 / 10.0 + 0.05;
            let n = 100;
            let correct_n = (conf * n as f64).round() as usize;
            for i in 0..n {
                preds.push(cp(conf, i < correct_n));
            }
        }
        let report = bin_reliability(&preds, 10).unwrap();
        assert!(report.ece < 0.02, "ece = {}", report.ece);
    }

    #[test]
    fn bernoulli_confidence_draws_calibrate_at_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let preds: Vec<_> = (0..10_000)
            .map(|_| {
                let conf: f64 = rng.gen();
                cp(conf, rng.gen::<f64>() < conf)
            })
            .collect();
        let report = bin_reliability(&preds, 10).unwrap();
        assert!(report.ece < 0.03, "ece = {}", report.ece);
    }

    #[test]
    fn ece_invariant_under_permutation() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let mut preds: Vec<_> = (0..200)
            .map(|_| cp(rng.gen::<f64>(), rng.gen::<bool>()))
            .collect();
        let before = bin_reliability(&preds, 10).unwrap().ece;
        preds.reverse();
        let after = bin_reliability(&preds, 10).unwrap().ece;
        assert!((before - after).abs() < 1e-12, "{before} vs {after}");
    }

    #[test]
    fn concentration_flag_cases() {
        let concentrated: Vec<_> = (0..100).map(|_| cp(0.95, true)).collect();
        assert!(concentration_flag(&concentrated, 0.8, 0.9));

        let mut rng = ChaCha20Rng::seed_from_u64(18);
        let uniform: Vec<_> = (0..1000).map(|_| cp(rng.gen(), true)).collect();
        assert!(!concentration_flag(&uniform, 0.8, 0.9));

        // Exactly the threshold mass above the threshold: strict, so false.
        let mut exact = Vec::new();
        for i in 0..10 {
            exact.push(cp(if i < 9 { 0.9 } else { 0.5 }, true));
        }
        assert!(!concentration_flag(&exact, 0.8, 0.9));
    }

    #[test]
    fn invalid_bins_rejected() {
        assert_eq!(
            bin_reliability(&[], 1),
            Err(CalibrationError::InvalidBins(1))
        );
    }

    #[test]
    fn selective_curve_endpoints_and_monotonicity() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let preds: Vec<_> = (0..300)
            .map(|_| cp(rng.gen::<f64>(), rng.gen::<bool>()))
            .collect();
        let overall = preds.iter().filter(|p| p.correct).count() as f64 / preds.len() as f64;
        let curve = selective_accuracy_curve(&preds);
        assert_eq!(curve.len(), 21);
        assert_eq!(curve[0].coverage, 1.0);
        assert_eq!(curve[0].accuracy, Some(overall));
        for w in curve.windows(2) {
            assert!(w[1].coverage <= w[0].coverage + 1e-15);
        }
    }

    #[test]
    fn selective_curve_empty_subset_is_undefined() {
        let preds = vec![cp(0.3, true)];
        let curve = selective_accuracy_curve(&preds);
        let above = curve.iter().find(|p| p.confidence_cutoff > 0.31).unwrap();
        assert_eq!(above.coverage, 0.0);
        assert_eq!(above.accuracy, None);
    }

    #[test]
    fn planted_two_population_curve() {
        // High-confidence half 95% correct, low half 60% correct: at the
        // separating cutoff the curve accuracy is the high half's rate.
        let mut preds = Vec::new();
        for i in 0..200 {
            preds.push(cp(0.9, i % 100 < 95));
        }
        for i in 0..200 {
            preds.push(cp(0.2, i % 100 < 60));
        }
        let curve = selective_accuracy_curve(&preds);
        let at_half = curve
            .iter()
            .find(|p| (p.confidence_cutoff - 0.5).abs() < 1e-9)
            .unwrap();
        assert_eq!(at_half.coverage, 0.5);
        assert!((at_half.accuracy.unwrap() - 0.95).abs() < 1e-12);
        assert!((curve[0].accuracy.unwrap() - 0.775).abs() < 1e-12);
    }

    #[test]
    fn collect_confident_reports_missing_ids() {
        use crate::prediction::Prediction;
        let preds = vec![
            Prediction {
                post_id: "p1".into(),
                model_id: "m".into(),
                label: SentimentLabel::Positive,
                confidence: Some(0.8),
                cached: false,
                lenient_parse: false,
            },
            Prediction {
                post_id: "p2".into(),
                model_id: "m".into(),
                label: SentimentLabel::Negative,
                confidence: None,
                cached: false,
                lenient_parse: false,
            },
        ];
        match collect_confident(&preds, |_| Some(SentimentLabel::Positive)) {
            Err(CalibrationError::MissingConfidence(ids)) => assert_eq!(ids, vec!["p2"]),
            other => panic!("expected MissingConfidence, got {other:?}"),
        }
    }
}
