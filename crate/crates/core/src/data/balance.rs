use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use super::question::QARecord;
use crate::rng;

/// Smallest `k` such that removing `k` of an answer's `count` records out of
/// `total` leaves its frequency strictly below `threshold`.
pub fn min_removal(count: usize, total: usize, threshold: f64) -> usize {
    (0..=count)
        .find(|&k| ((count - k) as f64) < threshold * (total - k) as f64)
        .unwrap_or(count)
}

/// De-correlates answers from their meta-questions.
///
/// Within each meta-question the most frequent answer is downsampled by the
/// minimal number of uniformly chosen records while any answer's frequency
/// is at or above `threshold`; groups left with fewer than two distinct
/// answers are dropped entirely. Survivors keep their input order.
pub fn balance_filter(records: Vec<QARecord>, threshold: f64, seed: u64) -> Vec<QARecord> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups
            .entry(r.meta_key.as_str())
            .or_default()
            .entry(r.answer.as_str())
            .or_default()
            .push(i);
    }
    let mut keep = alloc::vec![false; records.len()];
    for (key, mut answers) in groups {
        let mut r = rng::derive(seed, key);
        loop {
            answers.retain(|_, v| !v.is_empty());
            if answers.len() < 2 {
                break;
            }
            let total: usize = answers.values().map(Vec::len).sum();
            // largest class first; BTreeMap order breaks ties by label
            let worst_key = answers
                .iter()
                .rev()
                .max_by_key(|(_, v)| v.len())
                .map(|(k, _)| *k)
                .expect("at least two answers");
            let worst = answers.get_mut(worst_key).expect("present");
            let c = worst.len();
            if (c as f64) < threshold * total as f64 {
                for v in answers.values() {
                    v.iter().for_each(|&i| keep[i] = true);
                }
                break;
            }
            let k = min_removal(c, total, threshold);
            let mut drop: Vec<usize> = index::sample(&mut r, c, k).into_vec();
            drop.sort_unstable();
            for &d in drop.iter().rev() {
                worst.remove(d);
            }
        }
    }
    records.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect()
}

/// Answer histogram per meta-question, for reporting.
pub fn answer_histogram(records: &[QARecord]) -> BTreeMap<String, BTreeMap<String, usize>> {
    let mut h: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in records {
        *h.entry(r.meta_key.clone()).or_default().entry(r.answer.clone()).or_default() += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Question, TemplateKind, Team};

    fn corpus(spec: &[(&str, &str, usize)]) -> Vec<QARecord> {
        let mut out = Vec::new();
        for &(action, answer, n) in spec {
            for _ in 0..n {
                let q = Question::new(TemplateKind::Effect).team(Team::Left).ordinal(1).action(action);
                out.push(QARecord::new(out.len() as u64, 0, "volleyball", q, answer.into()).unwrap());
            }
        }
        out
    }

    #[test]
    fn minimal_removal_arithmetic() {
        // 5/8 is too many, 3/6 is not strictly lower, 2/5 is
        assert_eq!(min_removal(7, 10, 0.5), 5);
        assert_eq!(min_removal(4, 12, 0.5), 0);
        assert_eq!(min_removal(40, 40, 0.5), 40);
    }

    #[test]
    fn single_answer_groups_vanish() {
        assert!(balance_filter(corpus(&[("spike", "block", 40)]), 0.5, 1).is_empty());
    }

    #[test]
    fn two_answer_groups_cannot_satisfy_a_strict_half() {
        assert!(balance_filter(corpus(&[("spike", "a", 7), ("spike", "b", 3)]), 0.5, 1).is_empty());
    }

    #[test]
    fn balanced_groups_are_untouched() {
        let c = corpus(&[("set", "a", 4), ("set", "b", 4), ("set", "c", 4)]);
        assert_eq!(balance_filter(c.clone(), 0.5, 3), c);
    }

    #[test]
    fn skewed_three_way_group_is_downsampled_minimally() {
        let out = balance_filter(corpus(&[("set", "a", 10), ("set", "b", 3), ("set", "c", 3)]), 0.5, 9);
        let h = answer_histogram(&out);
        let g = &h["What is the effect of set of the team?"];
        // a: (10-k) < (16-k)/2 first holds at k=5
        assert_eq!(g["a"], 5);
        assert_eq!((g["b"], g["c"]), (3, 3));
    }

    #[test]
    fn removal_is_seeded() {
        let c = corpus(&[("set", "a", 10), ("set", "b", 3), ("set", "c", 3)]);
        let ids = |s| balance_filter(c.clone(), 0.5, s).iter().map(|r| r.id).collect::<Vec<_>>();
        assert_eq!(ids(4), ids(4));
    }
}
