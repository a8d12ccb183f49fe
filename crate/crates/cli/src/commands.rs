//! The subcommands, callable in-process.

use std::fs;
use std::path::{Path, PathBuf};

use aft_core::data::{answer_histogram, balance_filter, build_answer_pool, build_corpus, generate_records, QARecord};
use aft_core::model::{random_baseline, semantic_aware_random, AnswerSpace};
use aft_core::rng;
use aft_core::train::EpochLog;
use serde::Serialize;

use crate::bench::{bench_attention, BenchReport};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::dataset::{split_index, Dataset, Item, SPLITS};
use crate::error::{csv_at, io_at, json_at, CliError, CliResult};
use crate::focus::{focus_rows, summarize, write_rows, write_summary, FocusSummary};
use crate::formats::{read_jsonl, write_answers, write_jsonl, RecordRow};
use crate::metrics::{metrics_rows, write_metrics, MetricsRow, Prediction};
use crate::models::{resolve_model_config, ModelKind, Trainable};

/// Models `eval` can score: the trainable ones plus the two random baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalModel {
    Trained(ModelKind),
    Random,
    Semantic,
}

impl std::str::FromStr for EvalModel {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "random" => Ok(EvalModel::Random),
            "semantic" => Ok(EvalModel::Semantic),
            other => other.parse().map(EvalModel::Trained).map_err(|_| {
                CliError::Config(format!("unknown model {s:?}; expected aft, dense, blind, random or semantic"))
            }),
        }
    }
}

impl EvalModel {
    pub fn name(self) -> &'static str {
        match self {
            EvalModel::Trained(k) => k.name(),
            EvalModel::Random => "random",
            EvalModel::Semantic => "semantic",
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_at(dir))
}

/// Records the resolved configuration a command ran with.
fn log_run(cfg: &RunConfig, command: &str, extra: serde_json::Value) -> CliResult<()> {
    create_dir(&cfg.out)?;
    let path = cfg.out.join(format!("{command}.run.json"));
    let body = serde_json::json!({
        "command": command,
        "config": cfg,
        "details": extra,
    });
    let text = serde_json::to_string_pretty(&body).map_err(json_at(&path))?;
    fs::write(&path, text).map_err(io_at(&path))
}

pub fn gen(cfg: &RunConfig) -> CliResult<Dataset> {
    let corpus = build_corpus(&cfg.data)?;
    for w in &corpus.split.warnings {
        log::warn!("{w}");
    }
    let data = Dataset::from_corpus(&corpus)?;
    let dir = cfg.data_dir();
    data.write(&dir, &corpus)?;
    let summary = data.summary(&corpus);
    log::info!(
        "wrote {} / {} / {} questions over {} classes to {}",
        summary.questions[0],
        summary.questions[1],
        summary.questions[2],
        summary.classes,
        dir.display()
    );
    log_run(cfg, "gen", serde_json::to_value(&summary).expect("summary serialises"))?;
    Ok(data)
}

pub fn checkpoint_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join(format!("{kind}.ckpt"))
}

pub fn train_log_path(out: &Path, kind: ModelKind) -> PathBuf {
    out.join(format!("{kind}_log.csv"))
}

/// Trains one model on `data`, writing its epoch log and best checkpoint
/// under `cfg.out`.
pub fn train_on(cfg: &RunConfig, data: &Dataset, kind: ModelKind) -> CliResult<(Trainable, Vec<EpochLog>)> {
    let model_cfg = resolve_model_config(&cfg.model, data)?;
    let mut model = Trainable::init(kind, &model_cfg, cfg.train.seed)?;
    let train_set = data.samples(0);
    let val_set = data.samples(1);
    if train_set.is_empty() {
        return Err(CliError::Data("the training split is empty".into()));
    }
    create_dir(&cfg.out)?;
    let log_path = train_log_path(&cfg.out, kind);
    let mut log = csv::Writer::from_path(&log_path).map_err(csv_at(&log_path))?;
    log.write_record(["epoch", "train_loss", "train_accuracy", "val_accuracy"])
        .map_err(csv_at(&log_path))?;
    log.flush().map_err(io_at(&log_path))?;
    let mut write_err = None;
    let report = model.train(&train_set, &val_set, &cfg.train, |e| {
        log::info!(
            "{kind} epoch {}: loss {:.4}, train {:.4}, val {:.4}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            e.val_accuracy
        );
        let row = [e.epoch.to_string(), e.train_loss.to_string(), e.train_accuracy.to_string(), e.val_accuracy.to_string()];
        if let Err(err) = log.write_record(&row).and_then(|_| log.flush().map_err(csv::Error::from)) {
            write_err.get_or_insert(err);
        }
    })?;
    if let Some(err) = write_err {
        return Err(csv_at(&log_path)(err));
    }
    if let Some(bad) = report.epochs.iter().find(|e| !e.train_loss.is_finite()) {
        return Err(CliError::Numeric(format!("non-finite training loss in epoch {}", bad.epoch)));
    }
    checkpoint::save(&checkpoint_path(&cfg.out, kind), &model, report.best_epoch)?;
    log_run(
        cfg,
        &format!("train-{kind}"),
        serde_json::json!({
            "model": model_cfg,
            "best_epoch": report.best_epoch,
            "best_val_accuracy": report.best_val_accuracy,
        }),
    )?;
    Ok((model, report.epochs))
}

pub fn train(cfg: &RunConfig, kind: ModelKind) -> CliResult<(Trainable, Vec<EpochLog>)> {
    let data = Dataset::load(&cfg.data_dir())?;
    train_on(cfg, &data, kind)
}

/// Loads a checkpoint and checks it against the dataset's vocabulary and
/// answer pool.
pub fn load_compatible(path: &Path, data: &Dataset) -> CliResult<Trainable> {
    let (model, _) = checkpoint::load(path)?;
    let c = model.config();
    if c.classes != data.pool.len() {
        return Err(CliError::Config(format!(
            "checkpoint has {} answer classes but the pool has {}",
            c.classes,
            data.pool.len()
        )));
    }
    if c.vocab_size != data.vocab.len() {
        return Err(CliError::Config(format!(
            "checkpoint vocabulary has {} tokens but the dataset has {}",
            c.vocab_size,
            data.vocab.len()
        )));
    }
    Ok(model)
}

/// Predictions of `model` on `items`, in order.
pub fn predictions(model: EvalModel, trained: Option<&Trainable>, data: &Dataset, split: usize, seed: u64) -> CliResult<Vec<Prediction>> {
    let items: &[Item] = data.split(split);
    if items.is_empty() {
        return Err(CliError::Data(format!("the {} split is empty", SPLITS[split])));
    }
    let predicted: Vec<usize> = match model {
        EvalModel::Trained(_) => trained.expect("trained model supplied").predict(&data.samples(split))?,
        EvalModel::Random => {
            let mut r = rng::derive(seed, "random-baseline");
            items.iter().map(|_| random_baseline(data.pool.len(), &mut r)).collect()
        }
        EvalModel::Semantic => {
            let space = AnswerSpace::from_pool(&data.pool)?;
            let mut r = rng::derive(seed, "semantic-baseline");
            items
                .iter()
                .map(|it| semantic_aware_random(&it.record.text, &space, &mut r))
                .collect()
        }
    };
    Ok(items
        .iter()
        .zip(predicted)
        .map(|(it, p)| Prediction {
            id: it.record.id,
            question_type: it.record.question_type,
            sport: it.record.sport.clone(),
            predicted: p,
            gold: it.label,
        })
        .collect())
}

pub fn eval_dir(out: &Path, model: EvalModel, split: &str) -> PathBuf {
    out.join("eval").join(format!("{}-{split}", model.name()))
}

pub fn eval(cfg: &RunConfig, model: EvalModel, split: &str) -> CliResult<Vec<MetricsRow>> {
    let s = split_index(split)?;
    let data = Dataset::load(&cfg.data_dir())?;
    let trained = match model {
        EvalModel::Trained(kind) => Some(load_compatible(&checkpoint_path(&cfg.out, kind), &data)?),
        _ => None,
    };
    let preds = predictions(model, trained.as_ref(), &data, s, cfg.train.seed)?;
    let rows = metrics_rows(split, &preds)?;
    let dir = eval_dir(&cfg.out, model, split);
    create_dir(&dir)?;
    write_metrics(&dir.join("metrics.csv"), &rows)?;
    write_jsonl(&dir.join("predictions.jsonl"), &preds)?;
    for r in &rows {
        log::info!(
            "{} {} {}/{}: accuracy {:.4}, macro F1 {:.4} over {}",
            model.name(),
            r.split,
            r.question_type,
            r.sport,
            r.accuracy,
            r.macro_f1,
            r.count
        );
    }
    log_run(cfg, &format!("eval-{}-{split}", model.name()), serde_json::json!({ "rows": rows.len() }))?;
    Ok(rows)
}

pub fn bench(cfg: &RunConfig) -> CliResult<BenchReport> {
    let report = bench_attention(&cfg.bench)?;
    create_dir(&cfg.out)?;
    let path = cfg.out.join("bench.json");
    let text = serde_json::to_string_pretty(&report).map_err(json_at(&path))?;
    fs::write(&path, text).map_err(io_at(&path))?;
    log::info!(
        "banded {} vs dense {} scores; {:.3} s vs {:.3} s ({:.2}x)",
        report.banded_scores,
        report.dense_scores,
        report.banded_seconds,
        report.dense_seconds,
        report.speedup
    );
    log_run(cfg, "bench", serde_json::Value::Null)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub input: usize,
    pub balanced: usize,
    pub pooled: usize,
    pub classes: usize,
    pub meta_questions: usize,
    /// The ten most frequent answers after pooling, with their counts.
    pub top_answers: Vec<(String, usize)>,
}

/// Runs the balance filter and answer pool on `input` (records in the
/// split-file format) or on freshly generated questions.
pub fn balance(cfg: &RunConfig, input: Option<&Path>) -> CliResult<BalanceReport> {
    let records: Vec<QARecord> = match input {
        Some(path) => read_jsonl::<RecordRow>(path)?
            .iter()
            .map(RecordRow::to_record)
            .collect::<CliResult<_>>()?,
        None => generate_records(&cfg.data)?.1,
    };
    let n = records.len();
    let balanced = balance_filter(records, cfg.data.balance_threshold, cfg.data.balance_seed());
    let n_balanced = balanced.len();
    let (pool, kept) = build_answer_pool(balanced, cfg.data.min_answer_count)?;
    let dir = cfg.out.join("balance");
    create_dir(&dir)?;
    write_jsonl(
        &dir.join("balanced.jsonl"),
        kept.iter().map(|r| RecordRow::new(r, pool.class_of(&r.answer).expect("pooled"))),
    )?;
    write_answers(&dir.join("answers.csv"), &pool)?;
    let meta_questions = answer_histogram(&kept).len();
    let report = BalanceReport {
        input: n,
        balanced: n_balanced,
        pooled: kept.len(),
        classes: pool.len(),
        meta_questions,
        top_answers: pool.labels().iter().cloned().zip(pool.counts().iter().copied()).take(10).collect(),
    };
    let path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(json_at(&path))?;
    fs::write(&path, text).map_err(io_at(&path))?;
    log::info!("{n} questions -> {n_balanced} balanced -> {} pooled in {} classes", kept.len(), pool.len());
    log_run(cfg, "balance", serde_json::to_value(&report).expect("report serialises"))?;
    Ok(report)
}

/// Writes `focus_weights.csv` and `focus_summary.csv` for a trained AFT
/// model over one split.
pub fn focus_dump(cfg: &RunConfig, split: &str) -> CliResult<Vec<FocusSummary>> {
    let s = split_index(split)?;
    let data = Dataset::load(&cfg.data_dir())?;
    let model = load_compatible(&checkpoint_path(&cfg.out, ModelKind::Aft), &data)?;
    let rows = focus_rows(&model, data.split(s))?;
    let summary = summarize(&rows);
    let focal = model.config().focal.lengths().to_vec();
    write_rows(&cfg.out.join("focus_weights.csv"), &focal, &rows)?;
    write_summary(&cfg.out.join("focus_summary.csv"), &focal, &summary)?;
    for g in &summary {
        log::info!("{} ({}): mean alpha {:?}", g.group, g.count, g.mean_alpha);
    }
    log_run(cfg, &format!("focus-dump-{split}"), serde_json::Value::Null)?;
    Ok(summary)
}
