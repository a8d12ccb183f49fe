//! Synthetic sports episodes with exact event logs, template questions
//! answered by an exhaustive oracle, and the de-correlation pipeline that
//! turns raw QA pairs into a balanced classification corpus.

mod balance;
mod corpus;
mod event;
mod features;
mod generator;
mod oracle;
mod pool;
mod question;
mod split;

pub use balance::{answer_histogram, balance_filter, min_removal};
pub use corpus::{build_corpus, generate_records, sample_questions, Corpus, CorpusConfig};
pub use event::{evaluate_rules, CounterRule, Event, EventLog, Outcome, SportSpec, Team, TeamMode};
pub use features::FeatureBank;
pub use generator::{generate_episode, Episode, EpisodeConfig};
pub use oracle::{counterfactual_success, oracle_answer, resolve_ordinal};
pub use pool::{build_answer_pool, AnswerPool};
pub use question::{generate_qa, meta_question, ordinal_word, QARecord, Question, QuestionType, Relation, TemplateKind, TemplateSet};
pub use split::{split_episodes, stratified_split, Split};
