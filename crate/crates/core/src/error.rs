use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core, the models and the data pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("index {index} out of range for {what} of size {bound}")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("masked softmax over an empty support")]
    EmptySupport,
    #[error("backward called on a non-scalar node of shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("focus weights are not on the simplex: {0}")]
    Simplex(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("unknown question template: {0}")]
    UnknownTemplate(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
