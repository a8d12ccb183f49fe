use alloc::vec::Vec;

use rand::Rng as _;

use super::AnswerSpace;
use crate::rng::Rng;

/// Uniform guess over all `classes` answer classes.
pub fn random_baseline(classes: usize, rng: &mut Rng) -> usize {
    if classes <= 1 {
        return 0;
    }
    rng.random_range(0..classes)
}

/// Answer family implied by a question's leading words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerKind {
    Binary,
    Numeric,
    Open,
}

const BINARY_LEADS: [&str; 9] = ["do", "does", "did", "is", "are", "was", "would", "will", "can"];

pub fn answer_kind(question: &str) -> AnswerKind {
    let mut words = question.split_whitespace().map(|w| w.to_ascii_lowercase());
    match (words.next().as_deref(), words.next().as_deref()) {
        (Some("how"), Some("many")) => AnswerKind::Numeric,
        (Some(w), _) if BINARY_LEADS.contains(&w) => AnswerKind::Binary,
        _ => AnswerKind::Open,
    }
}

/// Classes admissible for `question`, and whether the rule had to fall back
/// to the whole space because no admissible class exists.
pub fn constrained_classes(question: &str, space: &AnswerSpace) -> (Vec<usize>, bool) {
    let keep = |label: &str| match answer_kind(question) {
        AnswerKind::Binary => label == "yes" || label == "no",
        AnswerKind::Numeric => label.parse::<u64>().is_ok(),
        AnswerKind::Open => true,
    };
    let subset: Vec<usize> = (0..space.len()).filter(|&c| keep(space.labels()[c].as_str())).collect();
    if subset.is_empty() {
        ((0..space.len()).collect(), true)
    } else {
        (subset, false)
    }
}

/// Uniform guess among the classes the question type admits.
pub fn semantic_aware_random(question: &str, space: &AnswerSpace, rng: &mut Rng) -> usize {
    let (subset, fallback) = constrained_classes(question, space);
    if fallback {
        log::warn!("no admissible answer class for {question:?}; guessing over the full space");
    }
    subset[rng.random_range(0..subset.len())]
}
