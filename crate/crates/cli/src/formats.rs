//! On-disk layouts of a generated dataset.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use aft_core::data::{AnswerPool, EventLog, QARecord, QuestionType};
use aft_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, json_at, CliError, CliResult};

pub const FEATURE_MAGIC: &[u8; 8] = b"AFTFEAT1";

/// One line of `{train,val,test}.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub id: u64,
    pub episode_id: u64,
    pub sport: String,
    pub question_type: QuestionType,
    pub question: String,
    pub answer: String,
    pub class: usize,
}

impl RecordRow {
    pub fn new(r: &QARecord, class: usize) -> Self {
        RecordRow {
            id: r.id,
            episode_id: r.episode_id,
            sport: r.sport.clone(),
            question_type: r.question_type,
            question: r.text.clone(),
            answer: r.answer.clone(),
            class,
        }
    }

    /// Re-parses the question and checks the stored type against it.
    pub fn to_record(&self) -> CliResult<QARecord> {
        let r = QARecord::from_parts(self.id, self.episode_id, &self.question, &self.sport, &self.answer)?;
        if r.question_type != self.question_type {
            return Err(CliError::Data(format!(
                "record {}: stored type {} but the question is {}",
                self.id,
                self.question_type.name(),
                r.question_type.name()
            )));
        }
        Ok(r)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, &row).map_err(json_at(path))?;
        w.write_all(b"\n").map_err(io_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(row);
    }
    Ok(out)
}

/// Frame features of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeFeatures {
    pub episode_id: u64,
    pub appearance: Tensor,
    pub motion: Tensor,
}

/// Writes every episode into one file: the magic, then for each episode a
/// little-endian `u64` id, `u32` frame count, appearance and motion widths,
/// and the row-major `f64` appearance then motion values.
pub fn write_features(path: &Path, episodes: &[EpisodeFeatures]) -> CliResult<()> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io_at(path));
    put(FEATURE_MAGIC)?;
    for e in episodes {
        let (n, da, dm) = (e.appearance.rows(), e.appearance.cols(), e.motion.cols());
        put(&e.episode_id.to_le_bytes())?;
        for x in [n, da, dm] {
            put(&u32::try_from(x).expect("dimension fits u32").to_le_bytes())?;
        }
        for x in e.appearance.data().iter().chain(e.motion.data()) {
            put(&x.to_le_bytes())?;
        }
    }
    w.flush().map_err(io_at(path))
}

pub fn read_features(path: &Path) -> CliResult<BTreeMap<u64, EpisodeFeatures>> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    let bad = |m: &str| CliError::Data(format!("{}: {m}", path.display()));
    let mut r = &bytes[..];
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != FEATURE_MAGIC {
        return Err(bad("not a feature file"));
    }
    let mut out = BTreeMap::new();
    while !r.is_empty() {
        let id = u64::from_le_bytes(take(&mut r).ok_or_else(|| bad("truncated episode header"))?);
        let mut dims = [0usize; 3];
        for d in &mut dims {
            *d = u32::from_le_bytes(take(&mut r).ok_or_else(|| bad("truncated episode header"))?) as usize;
        }
        let [n, da, dm] = dims;
        let mut floats = |count: usize| -> CliResult<Vec<f64>> {
            (0..count)
                .map(|_| take(&mut r).map(f64::from_le_bytes).ok_or_else(|| bad("truncated feature data")))
                .collect()
        };
        let appearance = Tensor::matrix(n, da, floats(n * da)?)?;
        let motion = Tensor::matrix(n, dm, floats(n * dm)?)?;
        if !appearance.is_finite() || !motion.is_finite() {
            return Err(bad(&format!("episode {id} has non-finite features")));
        }
        if out
            .insert(id, EpisodeFeatures { episode_id: id, appearance, motion })
            .is_some()
        {
            return Err(bad(&format!("episode {id} appears twice")));
        }
    }
    Ok(out)
}

fn take<const N: usize>(r: &mut &[u8]) -> Option<[u8; N]> {
    if r.len() < N {
        return None;
    }
    let (head, rest) = r.split_at(N);
    *r = rest;
    head.try_into().ok()
}

/// One line of `manifest.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub episode_id: u64,
    pub sport: String,
    pub split: String,
    pub frames: usize,
    pub events: usize,
}

/// One line of `answers.csv`; the row order is the class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRow {
    pub class: usize,
    pub label: String,
    pub count: usize,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::error::csv_at(path))?;
    for row in rows {
        w.serialize(row).map_err(crate::error::csv_at(path))?;
    }
    w.flush().map_err(io_at(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(crate::error::csv_at(path))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(crate::error::csv_at(path))
}

pub fn write_answers(path: &Path, pool: &AnswerPool) -> CliResult<()> {
    write_csv(
        path,
        pool.labels().iter().zip(pool.counts()).enumerate().map(|(class, (label, &count))| AnswerRow {
            class,
            label: label.clone(),
            count,
        }),
    )
}

pub fn read_answers(path: &Path) -> CliResult<AnswerPool> {
    let rows: Vec<AnswerRow> = read_csv(path)?;
    for (i, r) in rows.iter().enumerate() {
        if r.class != i {
            return Err(CliError::Data(format!("{}: class ids must run 0, 1, 2, ...", path.display())));
        }
    }
    Ok(AnswerPool::from_entries(rows.into_iter().map(|r| (r.label, r.count)).collect())?)
}

/// Event logs, one JSON object per line.
pub fn read_events(path: &Path) -> CliResult<Vec<EventLog>> {
    let logs: Vec<EventLog> = read_jsonl(path)?;
    for l in &logs {
        l.validate()?;
    }
    Ok(logs)
}
