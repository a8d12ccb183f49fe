use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::question::QARecord;
use crate::{Error, Result};

/// Closed answer vocabulary; class ids are positions in `labels`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnswerPool {
    labels: Vec<String>,
    counts: Vec<usize>,
}

impl AnswerPool {
    pub fn from_entries(entries: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (i, (l, _)) in entries.iter().enumerate() {
            if seen.insert(l.as_str(), i).is_some() {
                return Err(Error::Data(alloc::format!("duplicate answer label {l}")));
            }
        }
        if entries.is_empty() {
            return Err(Error::Data("empty answer pool".into()));
        }
        let (labels, counts) = entries.into_iter().unzip();
        Ok(AnswerPool { labels, counts })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn label(&self, class: usize) -> Option<&str> {
        self.labels.get(class).map(String::as_str)
    }

    pub fn class_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Keeps answer classes with at least `min_count` records, ordered by
/// descending count then label, and drops the records of the rest.
pub fn build_answer_pool(records: Vec<QARecord>, min_count: usize) -> Result<(AnswerPool, Vec<QARecord>)> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.answer.as_str()).or_default() += 1;
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(l, c)| (l.into(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let pool = AnswerPool::from_entries(entries)?;
    let kept = records.into_iter().filter(|r| pool.class_of(&r.answer).is_some()).collect();
    Ok((pool, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Question, TemplateKind};

    fn records(spec: &[(&str, usize)]) -> Vec<QARecord> {
        let mut out = Vec::new();
        for &(a, n) in spec {
            for _ in 0..n {
                let q = Question::new(TemplateKind::CountAll);
                out.push(QARecord::new(out.len() as u64, 0, "gym", q, a.into()).unwrap());
            }
        }
        out
    }

    #[test]
    fn strict_minimum_boundary() {
        let (pool, kept) = build_answer_pool(records(&[("a", 100), ("b", 31), ("c", 29)]), 30).unwrap();
        assert_eq!(pool.labels(), ["a", "b"]);
        assert_eq!(kept.len(), 131);
        let (pool, _) = build_answer_pool(records(&[("x", 30), ("y", 29)]), 30).unwrap();
        assert_eq!(pool.labels(), ["x"]);
    }

    #[test]
    fn min_count_one_keeps_everything_in_count_order() {
        let (pool, _) = build_answer_pool(records(&[("b", 2), ("a", 2), ("c", 5)]), 1).unwrap();
        assert_eq!(pool.labels(), ["c", "a", "b"]);
        assert_eq!(pool.counts(), [5, 2, 2]);
    }

    #[test]
    fn empty_pool_is_an_error() {
        assert!(build_answer_pool(records(&[("a", 3)]), 30).is_err());
        assert!(build_answer_pool(records(&[("a", 3)]), 0).is_err());
    }
}
