//! Per-question focus weights and their group means.

use std::path::Path;

use aft_core::data::QuestionType;
use serde::{Deserialize, Serialize};

use crate::dataset::Item;
use crate::error::{csv_at, io_at, CliError, CliResult};
use crate::models::Trainable;

/// Group name of counting questions in the summary.
pub const COUNTING: &str = "counting";

#[derive(Debug, Clone, PartialEq)]
pub struct FocusRow {
    pub id: u64,
    pub question_type: QuestionType,
    pub counting: bool,
    pub alpha: Vec<f64>,
}

/// Mean focus weights of one question group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSummary {
    pub group: String,
    pub count: usize,
    pub mean_alpha: Vec<f64>,
}

impl FocusSummary {
    /// Index of the largest mean weight (lowest index on ties).
    pub fn dominant(&self) -> usize {
        aft_core::tensor::kernels::argmax(&self.mean_alpha)
    }
}

pub fn focus_rows(model: &Trainable, items: &[Item]) -> CliResult<Vec<FocusRow>> {
    items
        .iter()
        .map(|it| {
            let alpha = model
                .focus_weights(&it.tokens)?
                .ok_or_else(|| CliError::Config(format!("a {} model has no focus gate", model.kind)))?;
            Ok(FocusRow {
                id: it.record.id,
                question_type: it.record.question_type,
                counting: it.record.question.kind.is_counting(),
                alpha,
            })
        })
        .collect()
}

/// One summary per question type present, then the counting questions.
pub fn summarize(rows: &[FocusRow]) -> Vec<FocusSummary> {
    let mut out = Vec::new();
    let mut push = |group: &str, sel: Vec<&FocusRow>| {
        if let Some(first) = sel.first() {
            let mut mean = vec![0.0; first.alpha.len()];
            for r in &sel {
                for (m, a) in mean.iter_mut().zip(&r.alpha) {
                    *m += a;
                }
            }
            mean.iter_mut().for_each(|m| *m /= sel.len() as f64);
            out.push(FocusSummary {
                group: group.into(),
                count: sel.len(),
                mean_alpha: mean,
            });
        }
    };
    for qt in QuestionType::ALL {
        push(qt.name(), rows.iter().filter(|r| r.question_type == qt).collect());
    }
    push(COUNTING, rows.iter().filter(|r| r.counting).collect());
    out
}

fn alpha_header(focal: &[usize]) -> impl Iterator<Item = String> + '_ {
    focal.iter().map(|f| format!("alpha_f{f}"))
}

pub fn write_rows(path: &Path, focal: &[usize], rows: &[FocusRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_at(path))?;
    let header: Vec<String> = ["id", "question_type", "counting"]
        .into_iter()
        .map(String::from)
        .chain(alpha_header(focal))
        .collect();
    w.write_record(&header).map_err(csv_at(path))?;
    for r in rows {
        let mut rec = vec![r.id.to_string(), r.question_type.name().to_string(), r.counting.to_string()];
        rec.extend(r.alpha.iter().map(|a| a.to_string()));
        w.write_record(&rec).map_err(csv_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

pub fn write_summary(path: &Path, focal: &[usize], summary: &[FocusSummary]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_at(path))?;
    let header: Vec<String> = ["group", "count"].into_iter().map(String::from).chain(alpha_header(focal)).collect();
    w.write_record(&header).map_err(csv_at(path))?;
    for s in summary {
        let mut rec = vec![s.group.clone(), s.count.to_string()];
        rec.extend(s.mean_alpha.iter().map(|a| a.to_string()));
        w.write_record(&rec).map_err(csv_at(path))?;
    }
    w.flush().map_err(io_at(path))
}
