//! A generated corpus in the form the models consume, in memory or on disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aft_core::data::{AnswerPool, Corpus, QARecord};
use aft_core::text::{tokenize, Vocabulary};
use aft_core::train::Sample;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, json_at, CliError, CliResult};
use crate::formats::{
    read_answers, read_features, read_jsonl, write_answers, write_csv, write_features, write_jsonl, EpisodeFeatures,
    ManifestRow, RecordRow,
};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Subset index of a split name.
pub fn split_index(name: &str) -> CliResult<usize> {
    SPLITS
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| CliError::Config(format!("unknown split {name:?}; expected train, val or test")))
}

/// A question with its token ids and answer class.
#[derive(Debug, Clone)]
pub struct Item {
    pub record: QARecord,
    pub tokens: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocabulary,
    pub pool: AnswerPool,
    pub splits: [Vec<Item>; 3],
    pub features: BTreeMap<u64, EpisodeFeatures>,
}

/// Generation summary written next to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    /// Records after generation, sampling, balancing and pooling.
    pub stage_counts: [usize; 4],
    pub episodes: [usize; 3],
    pub questions: [usize; 3],
    pub classes: usize,
    pub vocab_size: usize,
    pub warnings: Vec<String>,
}

impl Dataset {
    /// Tokenises a corpus; the vocabulary comes from the training questions.
    pub fn from_corpus(corpus: &Corpus) -> CliResult<Self> {
        let [train, _, _] = corpus.split.assign(&corpus.records);
        let vocab = Vocabulary::from_questions(train.iter().map(|r| r.text.as_str()));
        let features = corpus
            .episodes
            .iter()
            .map(|e| {
                let id = e.log.episode_id;
                let f = EpisodeFeatures {
                    episode_id: id,
                    appearance: e.appearance.clone(),
                    motion: e.motion.clone(),
                };
                (id, f)
            })
            .collect();
        let parts = corpus.split.assign(&corpus.records);
        let mut splits: [Vec<Item>; 3] = Default::default();
        for (s, records) in parts.into_iter().enumerate() {
            splits[s] = records
                .into_iter()
                .map(|r| item(r, &vocab, &corpus.pool))
                .collect::<CliResult<_>>()?;
        }
        Ok(Dataset {
            vocab,
            pool: corpus.pool.clone(),
            splits,
            features,
        })
    }

    pub fn summary(&self, corpus: &Corpus) -> CorpusSummary {
        CorpusSummary {
            stage_counts: corpus.stage_counts,
            episodes: [corpus.split.train.len(), corpus.split.val.len(), corpus.split.test.len()],
            questions: [0, 1, 2].map(|s| self.splits[s].len()),
            classes: self.pool.len(),
            vocab_size: self.vocab.len(),
            warnings: corpus.split.warnings.clone(),
        }
    }

    /// Writes the dataset files into `dir`, plus the manifest, event logs and
    /// summary of `corpus`.
    pub fn write(&self, dir: &Path, corpus: &Corpus) -> CliResult<()> {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
        for (s, name) in SPLITS.iter().enumerate() {
            let rows = self.splits[s].iter().map(|it| RecordRow::new(&it.record, it.label));
            write_jsonl(&dir.join(format!("{name}.jsonl")), rows)?;
        }
        let feats: Vec<EpisodeFeatures> = self.features.values().cloned().collect();
        write_features(&dir.join("features.bin"), &feats)?;
        let manifest = corpus.episodes.iter().map(|e| {
            let id = e.log.episode_id;
            ManifestRow {
                episode_id: id,
                sport: e.log.sport.clone(),
                split: corpus.split.subset_of(id).map_or("unused", |s| SPLITS[s]).into(),
                frames: e.log.frames,
                events: e.log.events.len(),
            }
        });
        write_csv(&dir.join("manifest.csv"), manifest)?;
        write_jsonl(&dir.join("events.jsonl"), corpus.episodes.iter().map(|e| &e.log))?;
        let vocab_path = dir.join("vocab.txt");
        fs::write(&vocab_path, self.vocab.to_lines()).map_err(io_at(&vocab_path))?;
        write_answers(&dir.join("answers.csv"), &self.pool)?;
        let summary_path = dir.join("corpus.json");
        let summary = serde_json::to_string_pretty(&self.summary(corpus)).map_err(json_at(&summary_path))?;
        fs::write(&summary_path, summary).map_err(io_at(&summary_path))
    }

    /// Loads and validates a dataset written by [`Dataset::write`].
    pub fn load(dir: &Path) -> CliResult<Self> {
        let vocab_path = dir.join("vocab.txt");
        let vocab = Vocabulary::from_lines(&fs::read_to_string(&vocab_path).map_err(io_at(&vocab_path))?)?;
        let pool = read_answers(&dir.join("answers.csv"))?;
        let features = read_features(&dir.join("features.bin"))?;
        let mut splits: [Vec<Item>; 3] = Default::default();
        let mut seen_episodes: BTreeMap<u64, usize> = BTreeMap::new();
        for (s, name) in SPLITS.iter().enumerate() {
            let rows: Vec<RecordRow> = read_jsonl(&dir.join(format!("{name}.jsonl")))?;
            for row in rows {
                let record = row.to_record()?;
                if pool.label(row.class) != Some(row.answer.as_str()) {
                    return Err(CliError::Data(format!("record {}: class {} is not {:?}", row.id, row.class, row.answer)));
                }
                if !features.contains_key(&row.episode_id) {
                    return Err(CliError::Data(format!("record {}: no features for episode {}", row.id, row.episode_id)));
                }
                if *seen_episodes.entry(row.episode_id).or_insert(s) != s {
                    return Err(CliError::Data(format!("episode {} appears in two splits", row.episode_id)));
                }
                splits[s].push(item(record, &vocab, &pool)?);
            }
        }
        Ok(Dataset {
            vocab,
            pool,
            splits,
            features,
        })
    }

    pub fn split(&self, s: usize) -> &[Item] {
        &self.splits[s]
    }

    /// Model inputs of a split, in record order.
    pub fn samples(&self, s: usize) -> Vec<Sample<'_>> {
        self.splits[s]
            .iter()
            .map(|it| {
                let f = &self.features[&it.record.episode_id];
                Sample {
                    appearance: &f.appearance,
                    motion: &f.motion,
                    tokens: it.tokens.clone(),
                    label: it.label,
                }
            })
            .collect()
    }

    /// Frame count and feature widths shared by every episode.
    pub fn feature_dims(&self) -> CliResult<(usize, usize, usize)> {
        let mut dims = self
            .features
            .values()
            .map(|f| (f.appearance.rows(), f.appearance.cols(), f.motion.cols()));
        let first = dims.next().ok_or_else(|| CliError::Data("dataset has no episodes".into()))?;
        if dims.any(|d| d != first) {
            return Err(CliError::Data("episodes disagree on feature dimensions".into()));
        }
        Ok(first)
    }
}

fn item(record: QARecord, vocab: &Vocabulary, pool: &AnswerPool) -> CliResult<Item> {
    let label = pool
        .class_of(&record.answer)
        .ok_or_else(|| CliError::Data(format!("record {}: answer {:?} is not in the pool", record.id, record.answer)))?;
    Ok(Item {
        tokens: tokenize(&record.text, vocab)?,
        label,
        record,
    })
}
