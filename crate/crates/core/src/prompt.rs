//! Deterministic prompt compilation from the codebook: a fixed instruction
//! block, all label definitions and rules, the output schema, and (for
//! few-shot prompts) an appended block of worked examples.
//!
//! The instruction, confidence, and schema wordings live in versioned
//! template files under `templates/` so rendered prompts are auditable
//! artifacts.

use crate::codebook::{Codebook, CodebookError, CodebookExample};
use crate::corpus::Post;
use crate::label::SentimentLabel;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const INSTRUCTION: &str = include_str!("../templates/instruction.txt");
const CONFIDENCE_INSTRUCTION: &str = include_str!("../templates/confidence.txt");
const SCHEMA: &str = include_str!("../templates/schema.txt");
const SCHEMA_CONFIDENCE: &str = include_str!("../templates/schema_confidence.txt");

/// Markers fencing the post text inside the user message, so instructions
/// and post content cannot be confused.
pub const POST_OPEN: &str = "<<<POST";
pub const POST_CLOSE: &str = "POST>>>";

/// Zero-shot (rules only) or few-shot (rules plus k worked examples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot { k: usize },
}

/// How few-shot examples are drawn from the codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleSelection {
    /// The first k examples in document order (the authors curated it).
    CodebookOrder,
    /// Per-label quotas as equal as possible, uniform within each label.
    StratifiedByLabel { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub confidence_enabled: bool,
    pub example_selection: ExampleSelection,
}

impl PromptSpec {
    pub fn zero_shot() -> PromptSpec {
        PromptSpec {
            mode: PromptMode::ZeroShot,
            confidence_enabled: false,
            example_selection: ExampleSelection::CodebookOrder,
        }
    }

    pub fn few_shot(k: usize) -> PromptSpec {
        PromptSpec {
            mode: PromptMode::FewShot { k },
            confidence_enabled: false,
            example_selection: ExampleSelection::CodebookOrder,
        }
    }

    pub fn with_confidence(mut self) -> PromptSpec {
        self.confidence_enabled = true;
        self
    }

    /// Tag appended to model ids produced under this spec.
    pub fn model_id_suffix(&self) -> &'static str {
        match self.mode {
            PromptMode::ZeroShot => "",
            PromptMode::FewShot { .. } => "-fs",
        }
    }
}

/// A rendered prompt: a system part (instructions, codebook, schema, and
/// examples when few-shot) and a user part (the fenced post).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptText {
    pub system: String,
    pub user: String,
    pub confidence_enabled: bool,
    pub few_shot: bool,
}

impl PromptText {
    /// Single-document rendering for dumping to disk and cache digests.
    pub fn full_text(&self) -> String {
        format!("--- system ---\n{}\n--- user ---\n{}", self.system, self.user)
    }
}

/// Select `k` examples under a policy. `CodebookOrder` takes the first k;
/// `StratifiedByLabel` balances label quotas (largest remainder, canonical
/// label order on ties) and draws uniformly within each label. Selected
/// examples are always returned in document order.
pub fn select_examples(
    codebook: &Codebook,
    k: usize,
    policy: ExampleSelection,
) -> Result<Vec<CodebookExample>, CodebookError> {
    let available = codebook.examples.len();
    if k == 0 || k > available {
        return Err(CodebookError::TooFewExamples {
            requested: k,
            available,
        });
    }
    match policy {
        ExampleSelection::CodebookOrder => Ok(codebook.examples[..k].to_vec()),
        ExampleSelection::StratifiedByLabel { seed } => {
            let per_label: Vec<Vec<usize>> = SentimentLabel::ALL
                .iter()
                .map(|&l| {
                    codebook
                        .examples
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| e.gold_label == l)
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let avail: Vec<usize> = per_label.iter().map(|v| v.len()).collect();
            let quotas = balanced_quotas(k, &avail);

            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut selected: Vec<usize> = Vec::with_capacity(k);
            for (indices, &quota) in per_label.iter().zip(&quotas) {
                let mut pool = indices.clone();
                for i in 0..quota {
                    let j = rng.gen_range(i..pool.len());
                    pool.swap(i, j);
                }
                selected.extend_from_slice(&pool[..quota]);
            }
            selected.sort_unstable();
            Ok(selected.iter().map(|&i| codebook.examples[i].clone()).collect())
        }
    }
}

/// Split `k` into per-label quotas as equal as possible, capped by each
/// label's availability; surplus spills to labels with spare capacity in
/// canonical label order.
fn balanced_quotas(k: usize, avail: &[usize]) -> Vec<usize> {
    let groups = avail.len();
    let base = k / groups;
    let extra = k % groups;
    let mut quotas: Vec<usize> = (0..groups)
        .map(|i| base + usize::from(i < extra))
        .collect();

    let mut surplus = 0;
    for (quota, &cap) in quotas.iter_mut().zip(avail) {
        if *quota > cap {
            surplus += *quota - cap;
            *quota = cap;
        }
    }
    while surplus > 0 {
        let mut placed = false;
        for (quota, &cap) in quotas.iter_mut().zip(avail) {
            if surplus > 0 && *quota < cap {
                *quota += 1;
                surplus -= 1;
                placed = true;
            }
        }
        debug_assert!(placed, "caller checked k <= total availability");
        if !placed {
            break;
        }
    }
    quotas
}

/// Compile the prompt for one post. Byte-deterministic for fixed inputs;
/// the few-shot system text extends the zero-shot system text by exactly
/// the example block.
pub fn build_prompt(
    codebook: &Codebook,
    post: &Post,
    spec: &PromptSpec,
) -> Result<PromptText, CodebookError> {
    let mut system = String::new();
    system.push_str(INSTRUCTION.trim_end());
    system.push_str("\n\n[LABELS]\n");
    for def in &codebook.labels {
        let _ = writeln!(system, "Label: {}", def.label.display_name());
        let _ = writeln!(system, "Definition: {}", def.definition);
        if !def.decision_rules.is_empty() {
            system.push_str("Decision rules:\n");
            for rule in &def.decision_rules {
                let _ = writeln!(system, "- {rule}");
            }
        }
        if !def.inclusion_criteria.is_empty() {
            system.push_str("Include:\n");
            for item in &def.inclusion_criteria {
                let _ = writeln!(system, "- {item}");
            }
        }
        if !def.exclusion_criteria.is_empty() {
            system.push_str("Exclude:\n");
            for item in &def.exclusion_criteria {
                let _ = writeln!(system, "- {item}");
            }
        }
        system.push('\n');
    }

    system.push_str("[RULES]\n");
    for rule in &codebook.global_rules {
        let _ = writeln!(system, "- {rule}");
    }

    system.push_str("\n[OUTPUT]\n");
    if spec.confidence_enabled {
        system.push_str(CONFIDENCE_INSTRUCTION.trim_end());
        system.push('\n');
        system.push_str(SCHEMA_CONFIDENCE.trim_end());
    } else {
        system.push_str(SCHEMA.trim_end());
    }
    system.push('\n');

    if let PromptMode::FewShot { k } = spec.mode {
        let examples = select_examples(codebook, k, spec.example_selection)?;
        system.push_str("\n[EXAMPLES]\n");
        for (i, example) in examples.iter().enumerate() {
            let _ = writeln!(system, "Example {}:", i + 1);
            let _ = writeln!(system, "Text: {}", example.text);
            let _ = writeln!(system, "Label: {}", example.gold_label.display_name());
            if !example.rationale.is_empty() {
                let _ = writeln!(system, "Rationale: {}", example.rationale);
            }
            system.push('\n');
        }
    }

    let user = format!(
        "Classify the sentiment of the following post.\n\n{POST_OPEN}\n{}\n{POST_CLOSE}\n",
        post.text
    );

    Ok(PromptText {
        system,
        user,
        confidence_enabled: spec.confidence_enabled,
        few_shot: matches!(spec.mode, PromptMode::FewShot { .. }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::parse_codebook_str;
    use crate::corpus::PostLevel;

    const DEMO: &str = "\
[LABEL Positive]
definition: Expresses relief, gratitude, improvement, or encouragement.
rule: Thanks directed at the community count as positive.

[LABEL Negative]
definition: Expresses worry, frustration, deterioration, or distress.

[LABEL Neutral]
definition: Conveys information or questions without evaluative tone.

[RULES]
- Judge the overall tone of the whole post.

[EXAMPLE]
text: Feeling so much better since the new inhaler.
label: positive
rationale: Improvement and relief.

[EXAMPLE]
text: How long does the referral usually take?
label: neutral
rationale: Plain question.

[EXAMPLE]
text: Another flare-up, I am exhausted.
label: negative
rationale: Distress dominates.

[EXAMPLE]
text: Thanks all, your pacing tips really helped.
label: positive
rationale: Gratitude with benefit.

[EXAMPLE]
text: Posting the clinic phone number for reference.
label: neutral
rationale: Informational only.

[EXAMPLE]
text: Scared about the biopsy next week.
label: negative
rationale: Explicit fear.
";

    fn codebook() -> Codebook {
        parse_codebook_str(DEMO).unwrap()
    }

    fn post() -> Post {
        Post {
            id: "p1".into(),
            text: "Slept badly but the new routine is helping a bit.".into(),
            level: PostLevel::L0,
            community: "demo".into(),
        }
    }

    #[test]
    fn zero_shot_contains_definitions_and_no_examples() {
        let prompt = build_prompt(&codebook(), &post(), &PromptSpec::zero_shot()).unwrap();
        for label in SentimentLabel::ALL {
            assert!(prompt.system.contains(label.display_name()));
            assert!(prompt.system.contains(label.name()), "schema lists {label}");
        }
        assert!(!prompt.system.contains("[EXAMPLES]"));
        assert!(!prompt.system.contains("Example 1:"));
        assert!(prompt.user.contains(POST_OPEN) && prompt.user.contains(POST_CLOSE));
        assert!(prompt.user.contains(&post().text));
    }

    #[test]
    fn prompts_are_byte_deterministic() {
        let spec = PromptSpec::few_shot(3).with_confidence();
        let a = build_prompt(&codebook(), &post(), &spec).unwrap();
        let b = build_prompt(&codebook(), &post(), &spec).unwrap();
        assert_eq!(a.full_text(), b.full_text());
    }

    #[test]
    fn few_shot_system_extends_zero_shot_system() {
        let cb = codebook();
        let zero = build_prompt(&cb, &post(), &PromptSpec::zero_shot()).unwrap();
        let few = build_prompt(&cb, &post(), &PromptSpec::few_shot(4)).unwrap();
        assert!(few.system.starts_with(&zero.system), "shared prefix");
        let appended = &few.system[zero.system.len()..];
        assert_eq!(appended.matches("Text: ").count(), 4);
        assert_eq!(zero.user, few.user);
    }

    #[test]
    fn few_shot_all_examples_keep_codebook_order() {
        let cb = codebook();
        let few = build_prompt(&cb, &post(), &PromptSpec::few_shot(6)).unwrap();
        let mut last = 0;
        for example in &cb.examples {
            let pos = few.system.find(&example.text).expect("example rendered");
            assert!(pos > last, "examples out of order");
            last = pos;
        }
    }

    #[test]
    fn confidence_flag_appends_instruction_and_schema() {
        let plain = build_prompt(&codebook(), &post(), &PromptSpec::zero_shot()).unwrap();
        let confident = build_prompt(
            &codebook(),
            &post(),
            &PromptSpec::zero_shot().with_confidence(),
        )
        .unwrap();
        assert!(!plain.system.contains("confidence"));
        assert!(confident.system.contains("\"confidence\""));
        assert!(confident.confidence_enabled);
    }

    #[test]
    fn select_examples_codebook_order() {
        let cb = codebook();
        let picked = select_examples(&cb, 2, ExampleSelection::CodebookOrder).unwrap();
        assert_eq!(picked[0], cb.examples[0]);
        assert_eq!(picked[1], cb.examples[1]);
    }

    #[test]
    fn select_examples_stratified_equal_quota() {
        // 6 examples, 2 per label, k=3: exactly one per label.
        let cb = codebook();
        for seed in [0u64, 1, 7, 99] {
            let picked =
                select_examples(&cb, 3, ExampleSelection::StratifiedByLabel { seed }).unwrap();
            assert_eq!(picked.len(), 3);
            for label in SentimentLabel::ALL {
                assert_eq!(
                    picked.iter().filter(|e| e.gold_label == label).count(),
                    1,
                    "seed {seed}"
                );
            }
        }
    }

    #[test]
    fn select_examples_stratified_spills_over_capped_labels() {
        // One label exhausted: its shortfall goes to the others.
        let cb = codebook();
        let picked =
            select_examples(&cb, 5, ExampleSelection::StratifiedByLabel { seed: 3 }).unwrap();
        assert_eq!(picked.len(), 5);
        for label in SentimentLabel::ALL {
            let n = picked.iter().filter(|e| e.gold_label == label).count();
            assert!(n >= 1 && n <= 2);
        }
    }

    #[test]
    fn select_examples_rejects_bad_k() {
        let cb = codebook();
        assert_eq!(
            select_examples(&cb, 0, ExampleSelection::CodebookOrder),
            Err(CodebookError::TooFewExamples { requested: 0, available: 6 })
        );
        assert_eq!(
            select_examples(&cb, 7, ExampleSelection::CodebookOrder),
            Err(CodebookError::TooFewExamples { requested: 7, available: 6 })
        );
    }

    #[test]
    fn model_id_suffix_matches_mode() {
        assert_eq!(PromptSpec::zero_shot().model_id_suffix(), "");
        assert_eq!(PromptSpec::few_shot(2).model_id_suffix(), "-fs");
    }
}
