//! Core library for codebook-guided sentiment annotation and its statistical
//! validation: corpus handling, prompt construction, a lexicon baseline,
//! agreement coefficients, classification metrics, and confidence calibration.

pub mod agreement;
pub mod calibration;
pub mod codebook;
pub mod corpus;
pub mod label;
pub mod lexicon;
pub mod mann_whitney;
pub mod metrics;
pub(crate) mod normal;
pub mod prediction;
pub mod prompt;

pub use crate::agreement::{
    build_agreement_report, cohen_kappa, fleiss_kappa, majority_label, overall_kappa_with_added,
    pairwise_agreement, scott_pi, significance, AgreementError, AgreementMatrixReport,
    KappaResult, MajorityOutcome, TiePolicy,
};
pub use crate::calibration::{
    bin_reliability, collect_confident, concentration_flag, selective_accuracy_curve,
    CalibrationError, CalibrationReport, ConfidentPrediction,
};
pub use crate::codebook::{
    parse_codebook, parse_codebook_str, Codebook, CodebookError, CodebookExample, LabelDef,
};
pub use crate::corpus::{
    build_matrix, load_annotations, load_posts, stratified_sample, write_annotations, write_posts,
    Annotation, AnnotationMatrix, AnnotationSet, CorpusError, FileFormat, Post, PostLevel,
    PostSet,
};
pub use crate::label::SentimentLabel;
pub use crate::lexicon::{
    classify_compound, compound_score, load_lexicon, CompoundScore, Lexicon, LexiconError,
};
pub use crate::mann_whitney::{
    mann_whitney_u, mann_whitney_u_with, Alternative, MannWhitneyResult, MwMethod,
};
pub use crate::metrics::{
    accuracy, compare_llm_human_agreement, per_class_prf, AgreementComparison, ClassMetrics,
    LabelMetrics, MetricsError, Verdict,
};
pub use crate::prediction::{read_predictions, write_predictions, Prediction, PredictionSet};
pub use crate::prompt::{
    build_prompt, select_examples, ExampleSelection, PromptMode, PromptSpec, PromptText,
};
