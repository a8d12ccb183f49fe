use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::RngCore;

use super::balance::balance_filter;
use super::event::{CounterRule, SportSpec, TeamMode};
use super::generator::{generate_episode, Episode, EpisodeConfig};
use super::pool::{build_answer_pool, AnswerPool};
use super::question::{generate_qa, QARecord, TemplateKind, TemplateSet};
use super::split::{split_episodes, Split};
use crate::{rng, Error, Result};

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| String::from(*w)).collect()
}

fn rule(action: &str, counter: &str, reason: &str) -> CounterRule {
    CounterRule {
        action: action.into(),
        counter: counter.into(),
        reason: reason.into(),
    }
}

impl SportSpec {
    pub fn volleyball() -> Self {
        SportSpec {
            name: "volleyball".into(),
            mode: TeamMode::TwoTeam,
            actions: words(&["serve", "pass", "set", "spike", "block", "dig"]),
            rules: vec![rule("spike", "block", "blocked"), rule("serve", "dig", "dug")],
            fault_reasons: words(&["out of bounds", "net fault", "foul"]),
        }
    }

    pub fn basketball() -> Self {
        SportSpec {
            name: "basketball".into(),
            mode: TeamMode::TwoTeam,
            actions: words(&["shoot", "pass", "dribble", "rebound", "steal", "block"]),
            rules: vec![rule("shoot", "block", "blocked"), rule("pass", "steal", "stolen")],
            fault_reasons: words(&["out of bounds", "travel", "foul"]),
        }
    }

    pub fn gymnastics() -> Self {
        SportSpec {
            name: "gymnastics".into(),
            mode: TeamMode::SinglePerformer,
            actions: words(&["jump", "turn", "leap", "flip", "balance"]),
            rules: Vec::new(),
            fault_reasons: Vec::new(),
        }
    }

    pub fn defaults() -> Vec<SportSpec> {
        vec![SportSpec::volleyball(), SportSpec::basketball(), SportSpec::gymnastics()]
    }
}

/// Everything needed to regenerate a corpus bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CorpusConfig {
    pub episode: EpisodeConfig,
    pub sports: Vec<SportSpec>,
    pub episodes_per_sport: usize,
    /// Questions kept per episode before balancing (0 keeps all).
    pub questions_per_episode: usize,
    pub balance_threshold: f64,
    pub min_answer_count: usize,
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            episode: EpisodeConfig::default(),
            sports: SportSpec::defaults(),
            episodes_per_sport: 100,
            questions_per_episode: 12,
            balance_threshold: 0.5,
            min_answer_count: 30,
            ratios: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        if self.sports.is_empty() {
            return Err(Error::Config("no sports configured".into()));
        }
        for s in &self.sports {
            s.validate()?;
        }
        if !(self.balance_threshold > 0.0 && self.balance_threshold <= 1.0) {
            return Err(Error::Config("balance threshold must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Seed of the balance filter's removal draws.
    pub fn balance_seed(&self) -> u64 {
        rng::derive(self.seed, "balance").next_u64()
    }

    pub fn sport(&self, name: &str) -> Option<&SportSpec> {
        self.sports.iter().find(|s| s.name == name)
    }
}

/// A generated, balanced and split dataset. `records[i].id == i`, and
/// `episodes[e].log.episode_id == e`.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub episodes: Vec<Episode>,
    pub records: Vec<QARecord>,
    pub pool: AnswerPool,
    pub split: Split,
    /// Record count after each stage: raw, sampled, balanced, pooled.
    pub stage_counts: [usize; 4],
}

impl Corpus {
    /// Class id of each record's answer.
    pub fn labels(&self) -> Vec<usize> {
        self.records
            .iter()
            .map(|r| self.pool.class_of(&r.answer).expect("pooled"))
            .collect()
    }

    /// Records of one subset (0 train, 1 val, 2 test).
    pub fn subset(&self, s: usize) -> Vec<&QARecord> {
        self.records
            .iter()
            .filter(|r| self.split.subset_of(r.episode_id) == Some(s))
            .collect()
    }
}

/// Picks up to `k` questions: a template kind uniformly among those present,
/// then an instance of it, without replacement.
pub fn sample_questions(records: Vec<QARecord>, k: usize, r: &mut rng::Rng) -> Vec<QARecord> {
    if k == 0 || records.len() <= k {
        return records;
    }
    let mut by_kind: BTreeMap<TemplateKind, Vec<QARecord>> = BTreeMap::new();
    for rec in records {
        by_kind.entry(rec.question.kind).or_default().push(rec);
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k && !by_kind.is_empty() {
        let kinds: Vec<TemplateKind> = by_kind.keys().copied().collect();
        let kind = *kinds.choose(r).expect("non-empty");
        let pool = by_kind.get_mut(&kind).expect("present");
        let i = (r.next_u64() % pool.len() as u64) as usize;
        out.push(pool.swap_remove(i));
        if pool.is_empty() {
            by_kind.remove(&kind);
        }
    }
    out.sort_by_key(|q| q.id);
    out
}

/// Generates every episode and its sampled questions, before balancing.
/// Also returns the number of answerable questions before sampling.
pub fn generate_records(config: &CorpusConfig) -> Result<(Vec<Episode>, Vec<QARecord>, usize)> {
    config.validate()?;
    let templates = TemplateSet::all();
    let mut seeds = rng::derive(config.seed, "episodes");
    let mut sampler = rng::derive(config.seed, "questions");
    let mut episodes = Vec::new();
    let mut sampled = Vec::new();
    let mut raw = 0;
    for sport in &config.sports {
        for _ in 0..config.episodes_per_sport {
            let id = episodes.len() as u64;
            let ep = generate_episode(&config.episode, sport, id, seeds.next_u64())?;
            let qa = generate_qa(&ep.log, sport, &templates)?;
            raw += qa.len();
            sampled.extend(sample_questions(qa, config.questions_per_episode, &mut sampler));
            episodes.push(ep);
        }
    }
    for (i, r) in sampled.iter_mut().enumerate() {
        r.id = i as u64;
    }
    Ok((episodes, sampled, raw))
}

/// Generates episodes, answers every template, samples questions, balances
/// per meta-question, builds the answer pool and splits by episode.
pub fn build_corpus(config: &CorpusConfig) -> Result<Corpus> {
    let (episodes, sampled, raw) = generate_records(config)?;
    let n_sampled = sampled.len();
    let balanced = balance_filter(sampled, config.balance_threshold, config.balance_seed());
    let n_balanced = balanced.len();
    let (pool, mut records) = build_answer_pool(balanced, config.min_answer_count)?;
    for (i, r) in records.iter_mut().enumerate() {
        r.id = i as u64;
    }
    let split = split_episodes(
        episodes.iter().map(|e| (e.log.episode_id, e.log.sport.as_str())),
        config.ratios,
        rng::derive(config.seed, "split").next_u64(),
    )?;
    Ok(Corpus {
        stage_counts: [raw, n_sampled, n_balanced, records.len()],
        episodes,
        records,
        pool,
        split,
    })
}
