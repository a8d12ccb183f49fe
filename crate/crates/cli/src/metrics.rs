//! Evaluation rows and their CSV form.

use std::collections::BTreeSet;
use std::path::Path;

use aft_core::data::QuestionType;
use aft_core::metrics::{accuracy, macro_f1};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::formats::{read_csv, write_csv};

pub const ALL: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub split: String,
    pub question_type: String,
    pub sport: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub count: usize,
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: u64,
    pub question_type: QuestionType,
    pub sport: String,
    pub predicted: usize,
    pub gold: usize,
}

fn row(split: &str, qt: &str, sport: &str, preds: &[&Prediction]) -> CliResult<MetricsRow> {
    let p: Vec<usize> = preds.iter().map(|x| x.predicted).collect();
    let g: Vec<usize> = preds.iter().map(|x| x.gold).collect();
    Ok(MetricsRow {
        split: split.into(),
        question_type: qt.into(),
        sport: sport.into(),
        accuracy: accuracy(&p, &g)?,
        macro_f1: macro_f1(&p, &g)?,
        count: preds.len(),
    })
}

/// The overall row, then one row per question type and one per sport
/// present in `preds`. Fails on an empty split.
pub fn metrics_rows(split: &str, preds: &[Prediction]) -> CliResult<Vec<MetricsRow>> {
    let all: Vec<&Prediction> = preds.iter().collect();
    let mut rows = vec![row(split, ALL, ALL, &all)?];
    for qt in QuestionType::ALL {
        let sub: Vec<&Prediction> = preds.iter().filter(|p| p.question_type == qt).collect();
        if !sub.is_empty() {
            rows.push(row(split, qt.name(), ALL, &sub)?);
        }
    }
    let sports: BTreeSet<&str> = preds.iter().map(|p| p.sport.as_str()).collect();
    for sport in sports {
        let sub: Vec<&Prediction> = preds.iter().filter(|p| p.sport == sport).collect();
        rows.push(row(split, ALL, sport, &sub)?);
    }
    Ok(rows)
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> CliResult<()> {
    write_csv(path, rows)
}

pub fn read_metrics(path: &Path) -> CliResult<Vec<MetricsRow>> {
    read_csv(path)
}
