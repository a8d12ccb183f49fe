//! Auto-focus attention: banded softmax attention at several focal lengths,
//! mixed by question-conditioned weights.

pub mod afa;
mod bench;
mod encoder;
mod focal;
mod multihead;

pub use afa::{afa, band_attention, dense_attention_oracle, AfaCache};
pub use bench::{banded_score_count, dense_score_count};
pub use encoder::{aft_encoder_forward, AftEncoder, EncoderConfig, EncoderOutput, Focus, LayerParams};
pub use focal::{band_index_set, focus_weights, BandRange, FocalSet, FocusWeights};
pub use multihead::{multi_head_afa, multi_head_dense, AttentionParams};
