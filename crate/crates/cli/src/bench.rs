//! Banded versus dense attention: exact score counts and wall time.

use std::time::Instant;

use aft_core::attention::{afa, banded_score_count, dense_attention_oracle, dense_score_count, FocalSet, FocusWeights};
use aft_core::tensor::init;
use aft_core::{rng, Tensor};
use serde::{Deserialize, Serialize};

use crate::config::BenchConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub focal: FocalSet,
    pub heads: usize,
    pub d: usize,
    pub repetitions: usize,
    /// Query-key scores per head.
    pub banded_scores: u64,
    pub dense_scores: u64,
    pub score_ratio: f64,
    /// Median seconds for all heads, after one warm-up pass.
    pub banded_seconds: f64,
    pub dense_seconds: f64,
    pub speedup: f64,
}

/// Times uniform-focus banded attention against the dense reference on
/// random per-head inputs, on the calling thread.
pub fn bench_attention(cfg: &BenchConfig) -> CliResult<BenchReport> {
    if cfg.n < 2 || cfg.repetitions < 3 {
        return Err(CliError::Config("bench needs n >= 2 and at least 3 repetitions".into()));
    }
    if cfg.heads == 0 || cfg.d % cfg.heads != 0 {
        return Err(CliError::Config("bench width must be divisible by its head count".into()));
    }
    let dh = cfg.d / cfg.heads;
    let mut r = rng::derive(cfg.seed, "bench");
    let mut inputs: Vec<[Tensor; 3]> = Vec::with_capacity(cfg.heads);
    for _ in 0..cfg.heads {
        let mut m = || init::uniform(cfg.n, dh, 1.0, &mut r);
        inputs.push([m()?, m()?, m()?]);
    }
    let alpha = FocusWeights::uniform(cfg.focal.len());

    let banded = || -> CliResult<()> {
        for [q, k, v] in &inputs {
            std::hint::black_box(afa(q, k, v, &alpha, &cfg.focal)?);
        }
        Ok(())
    };
    let dense = || -> CliResult<()> {
        for [q, k, v] in &inputs {
            std::hint::black_box(dense_attention_oracle(q, k, v)?);
        }
        Ok(())
    };
    let banded_seconds = median_seconds(cfg.repetitions, banded)?;
    let dense_seconds = median_seconds(cfg.repetitions, dense)?;
    let banded_scores = banded_score_count(cfg.n, &cfg.focal);
    let dense_scores = dense_score_count(cfg.n);
    Ok(BenchReport {
        n: cfg.n,
        focal: cfg.focal.clone(),
        heads: cfg.heads,
        d: cfg.d,
        repetitions: cfg.repetitions,
        banded_scores,
        dense_scores,
        score_ratio: dense_scores as f64 / banded_scores as f64,
        banded_seconds,
        dense_seconds,
        speedup: dense_seconds / banded_seconds,
    })
}

fn median_seconds(reps: usize, mut run: impl FnMut() -> CliResult<()>) -> CliResult<f64> {
    run()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        run()?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok(if reps % 2 == 1 {
        times[reps / 2]
    } else {
        0.5 * (times[reps / 2 - 1] + times[reps / 2])
    })
}
