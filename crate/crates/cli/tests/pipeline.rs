mod common;

use std::fs;

use aft_cli::commands::{self, EvalModel};
use aft_cli::dataset::Dataset;
use aft_cli::focus::{focus_rows, summarize, COUNTING};
use aft_cli::formats::read_jsonl;
use aft_cli::metrics::{metrics_rows, read_metrics, Prediction};
use aft_cli::models::{ModelKind, Trainable};
use aft_cli::{checkpoint, CliError};

#[test]
fn generate_train_evaluate_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(dir.path());
    let generated = commands::gen(&cfg).unwrap();
    for f in ["train.jsonl", "val.jsonl", "test.jsonl", "features.bin", "manifest.csv", "events.jsonl", "vocab.txt", "answers.csv", "corpus.json"] {
        assert!(cfg.data_dir().join(f).is_file(), "missing {f}");
    }

    let loaded = Dataset::load(&cfg.data_dir()).unwrap();
    assert_eq!(loaded.vocab, generated.vocab);
    assert_eq!(loaded.pool, generated.pool);
    assert_eq!(loaded.features, generated.features);
    for s in 0..3 {
        let a: Vec<_> = loaded.split(s).iter().map(|i| (&i.record, &i.tokens, i.label)).collect();
        let b: Vec<_> = generated.split(s).iter().map(|i| (&i.record, &i.tokens, i.label)).collect();
        assert_eq!(a, b);
    }

    for kind in ModelKind::ALL {
        let (model, logs) = commands::train(&cfg, kind).unwrap();
        assert_eq!(logs.len(), 2);
        let log = fs::read_to_string(commands::train_log_path(&cfg.out, kind)).unwrap();
        assert_eq!(log.lines().count(), 3, "{log}");

        let (back, header) = checkpoint::load(&commands::checkpoint_path(&cfg.out, kind)).unwrap();
        assert_eq!(header.kind, kind);
        assert_eq!(back.store, model.store);

        let rows = commands::eval(&cfg, EvalModel::Trained(kind), "test").unwrap();
        let edir = commands::eval_dir(&cfg.out, EvalModel::Trained(kind), "test");
        assert_eq!(read_metrics(&edir.join("metrics.csv")).unwrap(), rows);
        // Metrics recomputed from the persisted predictions are identical.
        let preds: Vec<Prediction> = read_jsonl(&edir.join("predictions.jsonl")).unwrap();
        assert_eq!(metrics_rows("test", &preds).unwrap(), rows);
        assert_eq!(rows[0].count, loaded.split(2).len());
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy) && (0.0..=1.0).contains(&r.macro_f1)));
    }

    for baseline in [EvalModel::Random, EvalModel::Semantic] {
        let rows = commands::eval(&cfg, baseline, "val").unwrap();
        assert_eq!(rows[0].question_type, "all");
        assert_eq!(rows[0].sport, "all");
    }

    let summary = commands::focus_dump(&cfg, "test").unwrap();
    let csv = fs::read_to_string(cfg.out.join("focus_weights.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "id,question_type,counting,alpha_f2,alpha_f4,alpha_f24");
    for line in lines {
        let alpha: f64 = line.split(',').skip(3).map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((alpha - 1.0).abs() < 1e-6);
    }
    assert!(summary.iter().any(|s| s.group == COUNTING));

    let report = commands::bench(&cfg).unwrap();
    assert_eq!(report.dense_scores, 64 * 64);
    assert!(cfg.out.join("bench.json").is_file());

    let fresh = commands::balance(&cfg, None).unwrap();
    assert!(fresh.pooled <= fresh.balanced && fresh.balanced <= fresh.input);
    // With every answer pooled, balanced output is a fixed point.
    let mut loose = cfg.clone();
    loose.data.min_answer_count = 1;
    let first = commands::balance(&loose, None).unwrap();
    let input = dir.path().join("balanced.jsonl");
    fs::copy(cfg.out.join("balance/balanced.jsonl"), &input).unwrap();
    let again = commands::balance(&loose, Some(&input)).unwrap();
    assert_eq!((again.input, again.balanced, again.pooled), (first.pooled, first.pooled, first.pooled));
}

#[test]
fn untrained_gate_gives_uniform_focus() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(dir.path());
    let data = commands::gen(&cfg).unwrap();
    let m = aft_cli::models::resolve_model_config(&cfg.model, &data).unwrap();
    let model = Trainable::init(ModelKind::Aft, &m, 3).unwrap();
    let rows = focus_rows(&model, data.split(0)).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        for a in &r.alpha {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
    }
    for s in summarize(&rows) {
        assert!(s.mean_alpha.iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-12));
    }
}

#[test]
fn zero_epochs_keep_the_initialisation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::tiny_config(dir.path());
    cfg.train.epochs = 0;
    let data = commands::gen(&cfg).unwrap();
    let (trained, logs) = commands::train_on(&cfg, &data, ModelKind::Aft).unwrap();
    assert!(logs.is_empty());
    let m = aft_cli::models::resolve_model_config(&cfg.model, &data).unwrap();
    let init = Trainable::init(ModelKind::Aft, &m, cfg.train.seed).unwrap();
    assert_eq!(trained.store, init.store);
}

#[test]
fn training_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(dir.path());
    let data = commands::gen(&cfg).unwrap();
    let (a, la) = commands::train_on(&cfg, &data, ModelKind::Aft).unwrap();
    let (b, lb) = commands::train_on(&cfg, &data, ModelKind::Aft).unwrap();
    assert_eq!(la, lb);
    assert_eq!(a.store, b.store);
}

#[test]
fn class_count_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::tiny_config(dir.path());
    let data = commands::gen(&cfg).unwrap();
    cfg.model.classes = data.pool.len() + 1;
    let err = commands::train(&cfg, ModelKind::Blind).unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn checkpoint_for_another_pool_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::tiny_config(dir.path());
    commands::gen(&cfg).unwrap();
    commands::train(&cfg, ModelKind::Blind).unwrap();
    let mut other = common::tiny_config(dir.path());
    other.data.min_answer_count = 1;
    commands::gen(&other).unwrap();
    let err = commands::eval(&other, EvalModel::Trained(ModelKind::Blind), "test").unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err}");
}

#[test]
fn empty_split_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::tiny_config(dir.path());
    cfg.data.ratios = [1.0, 0.0, 0.0];
    commands::gen(&cfg).unwrap();
    let err = commands::eval(&cfg, EvalModel::Random, "test").unwrap_err();
    assert!(matches!(err, CliError::Data(_)), "{err}");
}
