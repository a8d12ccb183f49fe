//! Seeded parameter initialisers.

use alloc::vec;
use rand::Rng as _;

use super::{ParamId, ParamStore, Tensor};
use crate::rng::Rng;
use crate::Result;

/// Glorot-uniform `out × in` weight matrix.
pub fn weight(store: &mut ParamStore, name: &str, out: usize, inp: usize, rng: &mut Rng) -> Result<ParamId> {
    let limit = libm::sqrt(6.0 / (inp + out) as f64);
    let data = (0..out * inp).map(|_| rng.random_range(-limit..limit)).collect();
    store.insert(name, Tensor::matrix(out, inp, data)?)
}

/// `rows × cols` table with entries uniform in `±scale`.
pub fn table(store: &mut ParamStore, name: &str, rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Result<ParamId> {
    store.insert(name, uniform(rows, cols, scale, rng)?)
}

/// Unregistered `rows × cols` matrix with entries uniform in `±scale`.
pub fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Result<Tensor> {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Tensor::matrix(rows, cols, data)
}

pub fn zeros(store: &mut ParamStore, name: &str, cols: usize) -> Result<ParamId> {
    store.insert(name, Tensor::matrix(1, cols, vec![0.0; cols])?)
}

pub fn ones(store: &mut ParamStore, name: &str, cols: usize) -> Result<ParamId> {
    store.insert(name, Tensor::matrix(1, cols, vec![1.0; cols])?)
}
