use alloc::vec::Vec;

use crate::tensor::kernels::{dot, softmax_in_place};
use crate::{Error, Result, Tensor};

/// Strictly increasing focal lengths (band radii in frames).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<usize>", into = "Vec<usize>"))]
pub struct FocalSet(Vec<usize>);

impl FocalSet {
    pub fn new(lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::Config("focal set is empty".into()));
        }
        if lengths[0] == 0 || lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(alloc::format!(
                "focal lengths must be positive and strictly increasing, got {lengths:?}"
            )));
        }
        Ok(FocalSet(lengths))
    }

    pub fn lengths(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("non-empty")
    }

    /// Index of the first focal length whose band covers a whole sequence of `n`.
    pub fn full_width_index(&self, n: usize) -> Option<usize> {
        self.0.iter().position(|&f| f + 1 >= n)
    }
}

impl TryFrom<Vec<usize>> for FocalSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        FocalSet::new(v)
    }
}

impl From<FocalSet> for Vec<usize> {
    fn from(f: FocalSet) -> Self {
        f.0
    }
}

/// Inclusive index band `lo..=hi` around a query position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRange {
    pub lo: usize,
    pub hi: usize,
}

impl BandRange {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }
}

/// Neighbours of `j` within distance `f`, clipped to `0..n`.
pub fn band_index_set(j: usize, f: usize, n: usize) -> Result<BandRange> {
    if j >= n {
        return Err(Error::Index {
            what: "query position",
            index: j,
            bound: n,
        });
    }
    if f == 0 {
        return Err(Error::Config("focal length must be at least 1".into()));
    }
    Ok(BandRange {
        lo: j.saturating_sub(f),
        hi: (j + f).min(n - 1),
    })
}

/// Mixture weights over a focal set.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusWeights(Vec<f64>);

const SIMPLEX_TOL: f64 = 1e-6;

impl FocusWeights {
    /// Accepts any point of the closed simplex, so a focus can be frozen
    /// one-hot. Weights produced by [`focus_weights`] are strictly interior.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let w = FocusWeights(values);
        w.validate()?;
        Ok(w)
    }

    #[cfg(test)]
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        FocusWeights(values)
    }

    /// One-hot weights selecting the `index`-th of `len` foci.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::Index {
                what: "focus",
                index,
                bound: len,
            });
        }
        let mut v = alloc::vec![0.0; len];
        v[index] = 1.0;
        Ok(FocusWeights(v))
    }

    pub fn uniform(len: usize) -> Self {
        FocusWeights(alloc::vec![1.0 / len as f64; len])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Simplex("no weights".into()));
        }
        if self.0.iter().any(|&a| !a.is_finite() || a < 0.0) {
            return Err(Error::Simplex(alloc::format!("negative or non-finite weight in {:?}", self.0)));
        }
        let s: f64 = self.0.iter().sum();
        if libm::fabs(s - 1.0) > SIMPLEX_TOL {
            return Err(Error::Simplex(alloc::format!("weights sum to {s}")));
        }
        Ok(())
    }

    /// True when every weight lies strictly inside `(0, 1)`.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&a| a > 0.0 && a < 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `softmax(gate · w + bias)` with `gate: |F| × d`.
pub fn focus_weights(w: &[f64], gate: &Tensor, bias: &[f64]) -> Result<FocusWeights> {
    if gate.cols() != w.len() || gate.rows() != bias.len() {
        return Err(Error::shape("focus_weights", gate.shape(), &[w.len(), bias.len()]));
    }
    let mut logits: Vec<f64> = (0..gate.rows()).map(|f| dot(gate.row(f), w) + bias[f]).collect();
    softmax_in_place(&mut logits);
    Ok(FocusWeights(logits))
}
