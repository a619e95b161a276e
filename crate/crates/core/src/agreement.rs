//! Chance-corrected agreement coefficients (Cohen's kappa, Scott's pi,
//! Fleiss' kappa) with asymptotic z-tests against the null of no agreement,
//! majority consensus labeling, and the added-annotator comparison.

use crate::corpus::AnnotationMatrix;
use crate::label::SentimentLabel;
use crate::normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("label vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label vectors must be non-empty")]
    Empty,
    #[error("tie on items {0:?} with tie policy Error")]
    TieEncountered(Vec<String>),
    #[error("predictions do not cover the matrix items: {missing} missing, {extra} extra")]
    CoverageMismatch { missing: usize, extra: usize },
}

/// A kappa-family coefficient with its null-hypothesis test.
///
/// `kappa = (p_o - p_e) / (1 - p_e)` except in the degenerate case where
/// every cell holds the same single category (`p_e = 1`): chance-corrected
/// agreement is undefined there, so `kappa` is reported as 0 with
/// `degenerate` set instead of NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
    /// Standard error under the null hypothesis kappa = 0.
    pub standard_error: f64,
    pub z: f64,
    /// Two-sided p-value from the standard normal.
    pub p_value: f64,
    /// Set when p_e = 1 made the coefficient undefined (reported as 0).
    pub degenerate: bool,
}

impl KappaResult {
    fn from_components(p_o: f64, p_e: f64, null_variance: f64) -> KappaResult {
        if 1.0 - p_e <= f64::EPSILON {
            return KappaResult {
                kappa: 0.0,
                p_o,
                p_e,
                standard_error: 0.0,
                z: 0.0,
                p_value: 1.0,
                degenerate: true,
            };
        }
        let kappa = (p_o - p_e) / (1.0 - p_e);
        let standard_error = null_variance.max(0.0).sqrt();
        let z = if standard_error > 0.0 { kappa / standard_error } else { 0.0 };
        KappaResult {
            kappa,
            p_o,
            p_e,
            standard_error,
            z,
            p_value: normal::two_sided_p(z),
            degenerate: false,
        }
    }
}

/// True iff the coefficient is significant at `alpha` (strict inequality).
pub fn significance(result: &KappaResult, alpha: f64) -> bool {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    result.p_value < alpha
}

/// Fraction of positions where the two raters assigned the same label.
pub fn pairwise_agreement(
    a: &[SentimentLabel],
    b: &[SentimentLabel],
) -> Result<f64, AgreementError> {
    check_pair(a, b)?;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.len() as f64)
}

fn check_pair(a: &[SentimentLabel], b: &[SentimentLabel]) -> Result<(), AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    Ok(())
}

fn marginals(v: &[SentimentLabel]) -> [f64; 3] {
    let mut counts = [0usize; 3];
    for label in v {
        counts[label.index()] += 1;
    }
    counts.map(|c| c as f64 / v.len() as f64)
}

/// Cohen's kappa: expected agreement from the two raters' own marginals.
///
/// The null standard error is the classical Fleiss-Cohen-Everitt variance
/// for testing kappa = 0:
/// `var0 = [p_e + p_e^2 - sum_c pa_c * pb_c * (pa_c + pb_c)] / (n (1 - p_e)^2)`.
pub fn cohen_kappa(
    a: &[SentimentLabel],
    b: &[SentimentLabel],
) -> Result<KappaResult, AgreementError> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let p_o = pairwise_agreement(a, b)?;
    let ma = marginals(a);
    let mb = marginals(b);
    let p_e: f64 = (0..3).map(|c| ma[c] * mb[c]).sum();
    let cross: f64 = (0..3).map(|c| ma[c] * mb[c] * (ma[c] + mb[c])).sum();
    let denom = 1.0 - p_e;
    let null_variance = if denom > f64::EPSILON {
        (p_e + p_e * p_e - cross) / (n * denom * denom)
    } else {
        0.0
    };
    Ok(KappaResult::from_components(p_o, p_e, null_variance))
}

/// Scott's pi: expected agreement from the pooled marginal distribution.
/// Identical to the two-rater specialization of Fleiss' kappa.
pub fn scott_pi(a: &[SentimentLabel], b: &[SentimentLabel]) -> Result<KappaResult, AgreementError> {
    check_pair(a, b)?;
    let n = a.len();
    let p_o = pairwise_agreement(a, b)?;
    let mut pooled = [0usize; 3];
    for label in a.iter().chain(b) {
        pooled[label.index()] += 1;
    }
    let pooled = pooled.map(|c| c as f64 / (2 * n) as f64);
    let p_e: f64 = pooled.iter().map(|p| p * p).sum();
    let null_variance = fleiss_null_variance(n, 2, &pooled, p_e);
    Ok(KappaResult::from_components(p_o, p_e, null_variance))
}

/// Fleiss' null variance for the multi-rater kappa:
/// `var0 = 2 [P_e - (2r-3) P_e^2 + 2 (r-2) sum p_c^3] / (N r (r-1) (1-P_e)^2)`
/// with N items and r raters per item.
fn fleiss_null_variance(n_items: usize, n_raters: usize, pooled: &[f64; 3], p_e: f64) -> f64 {
    let big_n = n_items as f64;
    let r = n_raters as f64;
    let denom = 1.0 - p_e;
    if denom <= f64::EPSILON {
        return 0.0;
    }
    let p3: f64 = pooled.iter().map(|p| p * p * p).sum();
    2.0 * (p_e - (2.0 * r - 3.0) * p_e * p_e + 2.0 * (r - 2.0) * p3)
        / (big_n * r * (r - 1.0) * denom * denom)
}

/// Fleiss' kappa over a complete items × raters matrix.
pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> KappaResult {
    let n_items = matrix.n_items();
    let n_raters = matrix.n_raters();
    debug_assert!(n_items >= 1 && n_raters >= 2, "matrix construction enforces shape");

    let r = n_raters as f64;
    let mut pooled_counts = [0usize; 3];
    let mut p_o_sum = 0.0;
    for i in 0..n_items {
        let mut item_counts = [0usize; 3];
        for label in matrix.row(i) {
            item_counts[label.index()] += 1;
            pooled_counts[label.index()] += 1;
        }
        let same_pairs: f64 = item_counts.iter().map(|&c| (c * (c.max(1) - 1)) as f64).sum();
        p_o_sum += same_pairs / (r * (r - 1.0));
    }
    let p_o = p_o_sum / n_items as f64;
    let pooled = pooled_counts.map(|c| c as f64 / (n_items * n_raters) as f64);
    let p_e: f64 = pooled.iter().map(|p| p * p).sum();
    let null_variance = fleiss_null_variance(n_items, n_raters, &pooled, p_e);
    KappaResult::from_components(p_o, p_e, null_variance)
}

/// How to treat items where no label reaches a strict plurality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Report the item as unresolved and keep going.
    MarkUnresolved,
    /// Fail with the offending item ids.
    Error,
}

/// Majority consensus per item: the label with strictly the most votes,
/// or unresolved under a tie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityOutcome {
    /// Per item (matrix order): the consensus label, or None when tied.
    pub labels: Vec<Option<SentimentLabel>>,
    pub tie_policy: TiePolicy,
    pub n_unresolved: usize,
}

impl MajorityOutcome {
    /// Items with a consensus, as (item index, label).
    pub fn resolved(&self) -> impl Iterator<Item = (usize, SentimentLabel)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i, l)))
    }
}

/// Compute majority labels for every item of a complete matrix.
pub fn majority_label(
    matrix: &AnnotationMatrix,
    tie_policy: TiePolicy,
) -> Result<MajorityOutcome, AgreementError> {
    let mut labels = Vec::with_capacity(matrix.n_items());
    let mut tied_items = Vec::new();
    for i in 0..matrix.n_items() {
        let mut counts = [0usize; 3];
        for label in matrix.row(i) {
            counts[label.index()] += 1;
        }
        let best = *counts.iter().max().unwrap();
        let winners: Vec<usize> =
            (0..3).filter(|&c| counts[c] == best).collect();
        if winners.len() == 1 {
            labels.push(Some(SentimentLabel::ALL[winners[0]]));
        } else {
            labels.push(None);
            tied_items.push(matrix.items()[i].clone());
        }
    }
    if !tied_items.is_empty() && tie_policy == TiePolicy::Error {
        return Err(AgreementError::TieEncountered(tied_items));
    }
    Ok(MajorityOutcome {
        n_unresolved: tied_items.len(),
        labels,
        tie_policy,
    })
}

/// The Table-1 style comparison: overall Fleiss' kappa of the human panel,
/// and again with one model appended as an extra rater column.
/// `predictions` must cover exactly the matrix items (id -> label).
pub fn overall_kappa_with_added(
    matrix: &AnnotationMatrix,
    predictions: &std::collections::HashMap<String, SentimentLabel>,
) -> Result<(KappaResult, KappaResult), AgreementError> {
    let column = aligned_column(matrix, predictions)?;
    let baseline = fleiss_kappa(matrix);
    let augmented_matrix = matrix
        .with_added_rater("added", &column)
        .expect("aligned column has matrix length");
    Ok((baseline, fleiss_kappa(&augmented_matrix)))
}

/// Align an id-keyed prediction map with the matrix item order, demanding
/// exact coverage.
pub fn aligned_column(
    matrix: &AnnotationMatrix,
    predictions: &std::collections::HashMap<String, SentimentLabel>,
) -> Result<Vec<SentimentLabel>, AgreementError> {
    let missing = matrix
        .items()
        .iter()
        .filter(|it| !predictions.contains_key(*it))
        .count();
    let extra = predictions
        .keys()
        .filter(|id| matrix.items().binary_search(id).is_err())
        .count();
    if missing > 0 || extra > 0 {
        return Err(AgreementError::CoverageMismatch { missing, extra });
    }
    Ok(matrix.items().iter().map(|it| predictions[it]).collect())
}

/// Pairwise grids over raters and models, per-column agreement with the
/// majority, and the panel's overall Fleiss' kappa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementMatrixReport {
    /// Human raters first (matrix order), then models in the given order.
    pub column_ids: Vec<String>,
    pub percent_agreement: Vec<Vec<f64>>,
    pub pairwise_kappa: Vec<Vec<f64>>,
    /// Cohen's kappa of each column against the majority labels, skipping
    /// unresolved items; None when no item was resolved.
    pub kappa_with_majority: Vec<Option<f64>>,
    /// Fleiss' kappa of the human panel only.
    pub overall_fleiss: KappaResult,
    pub n_unresolved: usize,
}

/// Build the full agreement report for a human panel plus model columns.
/// `model_columns` are (model id, labels aligned to matrix items).
pub fn build_agreement_report(
    matrix: &AnnotationMatrix,
    model_columns: &[(String, Vec<SentimentLabel>)],
    tie_policy: TiePolicy,
) -> Result<AgreementMatrixReport, AgreementError> {
    let mut column_ids: Vec<String> = matrix.raters().to_vec();
    let mut columns: Vec<Vec<SentimentLabel>> =
        (0..matrix.n_raters()).map(|r| matrix.column(r)).collect();
    for (id, labels) in model_columns {
        if labels.len() != matrix.n_items() {
            return Err(AgreementError::LengthMismatch(labels.len(), matrix.n_items()));
        }
        column_ids.push(id.clone());
        columns.push(labels.clone());
    }

    let k = columns.len();
    let mut percent = vec![vec![0.0; k]; k];
    let mut kappa = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let p = pairwise_agreement(&columns[i], &columns[j])?;
            let kap = cohen_kappa(&columns[i], &columns[j])?.kappa;
            percent[i][j] = p;
            percent[j][i] = p;
            kappa[i][j] = kap;
            kappa[j][i] = kap;
        }
    }

    let majority = majority_label(matrix, tie_policy)?;
    let resolved: Vec<(usize, SentimentLabel)> = majority.resolved().collect();
    let gold: Vec<SentimentLabel> = resolved.iter().map(|(_, l)| *l).collect();
    let kappa_with_majority = columns
        .iter()
        .map(|col| {
            if gold.is_empty() {
                return None;
            }
            let subset: Vec<SentimentLabel> = resolved.iter().map(|(i, _)| col[*i]).collect();
            cohen_kappa(&subset, &gold).ok().map(|r| r.kappa)
        })
        .collect();

    Ok(AgreementMatrixReport {
        column_ids,
        percent_agreement: percent,
        pairwise_kappa: kappa,
        kappa_with_majority,
        overall_fleiss: fleiss_kappa(matrix),
        n_unresolved: majority.n_unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_matrix, Annotation, AnnotationSet, Post, PostLevel, PostSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use SentimentLabel::{Negative as Neg, Neutral as Neu, Positive as Pos};

    fn matrix_from(labels: &[&[SentimentLabel]]) -> AnnotationMatrix {
        let posts = PostSet::from_posts(
            (0..labels.len())
                .map(|i| Post {
                    id: format!("p{i:03}"),
                    text: "t".into(),
                    level: PostLevel::L0,
                    community: "c".into(),
                })
                .collect(),
        )
        .unwrap();
        let mut anns = Vec::new();
        for (i, row) in labels.iter().enumerate() {
            for (r, &label) in row.iter().enumerate() {
                anns.push(Annotation {
                    post_id: format!("p{i:03}"),
                    rater_id: format!("A{r}"),
                    label,
                });
            }
        }
        build_matrix(&AnnotationSet::from_annotations(anns).unwrap(), &posts).unwrap()
    }

    fn random_labels(rng: &mut ChaCha20Rng, n: usize, dist: &[f64; 3]) -> Vec<SentimentLabel> {
        (0..n)
            .map(|_| {
                let x: f64 = rng.gen();
                if x < dist[0] {
                    Neg
                } else if x < dist[0] + dist[1] {
                    Neu
                } else {
                    Pos
                }
            })
            .collect()
    }

    #[test]
    fn pairwise_agreement_basics() {
        let a = vec![Pos, Neg, Neu, Pos];
        assert_eq!(pairwise_agreement(&a, &a).unwrap(), 1.0);
        let b = vec![Neg, Pos, Pos, Neu];
        assert_eq!(pairwise_agreement(&a, &b).unwrap(), 0.0);
        let c = vec![Pos, Neg, Neu, Neg];
        assert_eq!(pairwise_agreement(&a, &c).unwrap(), 0.75);
        assert!(matches!(
            pairwise_agreement(&a, &[Pos]),
            Err(AgreementError::LengthMismatch(4, 1))
        ));
    }

    #[test]
    fn cohen_kappa_perfect_agreement() {
        let a = vec![Pos, Neg, Neu, Pos, Neg];
        let r = cohen_kappa(&a, &a).unwrap();
        assert!((r.kappa - 1.0).abs() < 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn cohen_kappa_disjoint_constant_raters() {
        // a all-Positive, b all-Negative: p_o = 0, p_e = 0, kappa = 0.
        let a = vec![Pos; 6];
        let b = vec![Neg; 6];
        let r = cohen_kappa(&a, &b).unwrap();
        assert_eq!(r.p_o, 0.0);
        assert_eq!(r.p_e, 0.0);
        assert_eq!(r.kappa, 0.0);
    }

    #[test]
    fn cohen_kappa_hand_example() {
        // a=(P,P,N,N), b=(P,N,N,N): p_o = 0.75, p_e = 0.5, kappa = 0.5.
        let a = vec![Pos, Pos, Neg, Neg];
        let b = vec![Pos, Neg, Neg, Neg];
        let r = cohen_kappa(&a, &b).unwrap();
        assert!((r.p_o - 0.75).abs() < 1e-15);
        assert!((r.p_e - 0.5).abs() < 1e-15);
        assert!((r.kappa - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cohen_kappa_degenerate_single_category() {
        let a = vec![Neu; 4];
        let r = cohen_kappa(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn cohen_null_z_is_standard_normal_under_independence() {
        // Calibration of the null variance: z over independent raters
        // should be approximately N(0, 1).
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let dist = [0.5, 0.3, 0.2];
        let mut zs = Vec::new();
        for _ in 0..2000 {
            let a = random_labels(&mut rng, 150, &dist);
            let b = random_labels(&mut rng, 150, &dist);
            let r = cohen_kappa(&a, &b).unwrap();
            if !r.degenerate {
                zs.push(r.z);
            }
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.1, "null z mean {mean}");
        assert!((0.85..1.15).contains(&var), "null z variance {var}");
        let reject = zs.iter().filter(|z| z.abs() > 1.959963984540054).count() as f64 / n;
        assert!((0.03..0.075).contains(&reject), "null rejection rate {reject}");
    }

    #[test]
    fn fleiss_null_z_is_standard_normal_under_independence() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let dist = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let mut zs = Vec::new();
        for _ in 0..600 {
            let rows: Vec<Vec<SentimentLabel>> =
                (0..200).map(|_| random_labels(&mut rng, 4, &dist)).collect();
            let rows_ref: Vec<&[SentimentLabel]> = rows.iter().map(|r| r.as_slice()).collect();
            let r = fleiss_kappa(&matrix_from(&rows_ref));
            if !r.degenerate {
                zs.push(r.z);
            }
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1.0);
        // The estimator itself carries a small O(1/N) negative bias, so the
        // mean bound is looser than the variance bound.
        assert!(mean.abs() < 0.2, "null z mean {mean}");
        assert!((0.8..1.2).contains(&var), "null z variance {var}");
    }

    #[test]
    fn fleiss_kappa_perfect_agreement() {
        let m = matrix_from(&[&[Pos, Pos, Pos], &[Neg, Neg, Neg], &[Neu, Neu, Neu]]);
        let r = fleiss_kappa(&m);
        assert!((r.kappa - 1.0).abs() < 1e-12);
        assert_eq!(r.p_o, 1.0);
        assert!(r.p_e < 1.0);
    }

    #[test]
    fn fleiss_two_raters_equals_scott_pi() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(2..40);
            let a = random_labels(&mut rng, n, &[0.4, 0.35, 0.25]);
            let b = random_labels(&mut rng, n, &[0.2, 0.3, 0.5]);
            let rows: Vec<Vec<SentimentLabel>> =
                (0..n).map(|i| vec![a[i], b[i]]).collect();
            let rows_ref: Vec<&[SentimentLabel]> = rows.iter().map(|r| r.as_slice()).collect();
            let fleiss = fleiss_kappa(&matrix_from(&rows_ref));
            let scott = scott_pi(&a, &b).unwrap();
            assert_eq!(fleiss.kappa, scott.kappa, "exact two-rater identity");
            assert_eq!(fleiss.p_o, scott.p_o);
            assert_eq!(fleiss.p_e, scott.p_e);
        }
    }

    #[test]
    fn kappa_invariant_under_item_permutation_and_relabeling() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let n = 30;
        let a = random_labels(&mut rng, n, &[0.4, 0.3, 0.3]);
        let b = random_labels(&mut rng, n, &[0.3, 0.4, 0.3]);
        let base = cohen_kappa(&a, &b).unwrap();

        // Permute items.
        let mut order: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = rng.gen_range(i..n);
            order.swap(i, j);
        }
        let pa: Vec<_> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<_> = order.iter().map(|&i| b[i]).collect();
        let permuted = cohen_kappa(&pa, &pb).unwrap();
        assert!((base.kappa - permuted.kappa).abs() < 1e-12);

        // Relabel with a bijection Neg->Pos, Neu->Neg, Pos->Neu.
        let relabel = |l: SentimentLabel| match l {
            Neg => Pos,
            Neu => Neg,
            Pos => Neu,
        };
        let ra: Vec<_> = a.iter().map(|&l| relabel(l)).collect();
        let rb: Vec<_> = b.iter().map(|&l| relabel(l)).collect();
        let relabeled = cohen_kappa(&ra, &rb).unwrap();
        assert!((base.kappa - relabeled.kappa).abs() < 1e-12);
    }

    #[test]
    fn significance_rules() {
        let mut r = KappaResult::from_components(0.9, 0.3, 0.0004);
        r.p_value = 0.0004;
        assert!(significance(&r, 0.05));
        r.p_value = 0.05;
        assert!(!significance(&r, 0.05), "boundary is strict");
        r.z = 0.0;
        r.p_value = 1.0;
        assert!(!significance(&r, 0.05));
    }

    #[test]
    fn majority_label_cases() {
        let m = matrix_from(&[
            &[Pos, Pos, Pos, Neg, Neu], // strict plurality -> Positive
            &[Pos, Pos, Neg, Neg, Neu], // 2-2-1 tie -> unresolved
            &[Neg, Neg, Neg, Neg, Neg], // unanimity
        ]);
        let outcome = majority_label(&m, TiePolicy::MarkUnresolved).unwrap();
        assert_eq!(outcome.labels, vec![Some(Pos), None, Some(Neg)]);
        assert_eq!(outcome.n_unresolved, 1);

        match majority_label(&m, TiePolicy::Error) {
            Err(AgreementError::TieEncountered(items)) => assert_eq!(items, vec!["p001"]),
            other => panic!("expected TieEncountered, got {other:?}"),
        }
    }

    #[test]
    fn added_rater_direction_on_planted_panels() {
        // Appending a high-agreement rater raises overall kappa; appending a
        // uniform-random one lowers it. Simulation oracle, direction only.
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n_items = 200;
        let mut up = 0;
        let mut down = 0;
        let reps = 20;
        for _ in 0..reps {
            let truth = random_labels(&mut rng, n_items, &[0.3, 0.2, 0.5]);
            let noisy = |rng: &mut ChaCha20Rng, eps: f64, truth: &[SentimentLabel]| {
                truth
                    .iter()
                    .map(|&t| {
                        if rng.gen::<f64>() < eps {
                            let others: Vec<_> =
                                SentimentLabel::ALL.iter().filter(|&&l| l != t).collect();
                            *others[rng.gen_range(0..2)]
                        } else {
                            t
                        }
                    })
                    .collect::<Vec<_>>()
            };
            let rows: Vec<Vec<SentimentLabel>> = {
                let raters: Vec<Vec<SentimentLabel>> =
                    (0..5).map(|_| noisy(&mut rng, 0.3, &truth)).collect();
                (0..n_items).map(|i| raters.iter().map(|r| r[i]).collect()).collect()
            };
            let rows_ref: Vec<&[SentimentLabel]> = rows.iter().map(|r| r.as_slice()).collect();
            let m = matrix_from(&rows_ref);

            let good = noisy(&mut rng, 0.05, &truth);
            let random = random_labels(&mut rng, n_items, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
            let base = fleiss_kappa(&m).kappa;
            let with_good = fleiss_kappa(&m.with_added_rater("good", &good).unwrap()).kappa;
            let with_rand = fleiss_kappa(&m.with_added_rater("rand", &random).unwrap()).kappa;
            if with_good > base {
                up += 1;
            }
            if with_rand < base {
                down += 1;
            }
        }
        assert_eq!(up, reps, "high-agreement rater should raise kappa");
        assert_eq!(down, reps, "uniform-random rater should lower kappa");
    }

    #[test]
    fn overall_kappa_with_added_checks_coverage() {
        let m = matrix_from(&[&[Pos, Pos], &[Neg, Neu]]);
        let mut preds = std::collections::HashMap::new();
        preds.insert("p000".to_string(), Pos);
        assert!(matches!(
            overall_kappa_with_added(&m, &preds),
            Err(AgreementError::CoverageMismatch { missing: 1, extra: 0 })
        ));
        preds.insert("p001".to_string(), Neg);
        let (base, augmented) = overall_kappa_with_added(&m, &preds).unwrap();
        assert!(base.kappa.is_finite() && augmented.kappa.is_finite());
    }

    #[test]
    fn duplicating_a_rater_is_well_defined() {
        let m = matrix_from(&[&[Pos, Pos], &[Neg, Neg], &[Neu, Pos]]);
        let col = m.column(0);
        let augmented = m.with_added_rater("copy", &col).unwrap();
        let r = fleiss_kappa(&augmented);
        assert!(r.kappa.is_finite());
        assert!(r.kappa >= fleiss_kappa(&m).kappa);
    }

    #[test]
    fn agreement_report_grids_are_symmetric() {
        let m = matrix_from(&[
            &[Pos, Pos, Neg],
            &[Neg, Neu, Neg],
            &[Neu, Neu, Neu],
            &[Pos, Neg, Pos],
        ]);
        let model = vec![Pos, Neg, Neu, Pos];
        let report =
            build_agreement_report(&m, &[("model-x".into(), model)], TiePolicy::MarkUnresolved)
                .unwrap();
        assert_eq!(report.column_ids.len(), 4);
        for i in 0..4 {
            assert_eq!(report.percent_agreement[i][i], 1.0);
            for j in 0..4 {
                assert_eq!(report.percent_agreement[i][j], report.percent_agreement[j][i]);
                assert_eq!(report.pairwise_kappa[i][j], report.pairwise_kappa[j][i]);
            }
        }
    }

    #[test]
    fn kappa_at_most_one_and_one_iff_perfect() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(1..25);
            let a = random_labels(&mut rng, n, &[0.4, 0.3, 0.3]);
            let b = random_labels(&mut rng, n, &[0.4, 0.3, 0.3]);
            let r = cohen_kappa(&a, &b).unwrap();
            assert!(r.kappa <= 1.0 + 1e-12);
            if !r.degenerate {
                assert_eq!(r.kappa == 1.0, r.p_o == 1.0 && r.p_e < 1.0);
            }
        }
    }
}
