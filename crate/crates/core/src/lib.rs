//! Auto-focus attention over frame sequences, the question-answering models
//! built on it, and a synthetic sports-episode QA corpus with exact answers.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and wall-clock timing live in the companion `aft-cli` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![deny(rust_2018_idioms, unused_must_use)]

extern crate alloc;

mod error;
pub use error::{Error, Result};

pub mod attention;
pub mod data;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod text;
pub mod train;

pub use tensor::{Graph, NodeId, ParamId, ParamStore, Tensor};
