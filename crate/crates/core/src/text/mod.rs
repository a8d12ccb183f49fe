//! Question tokenisation and the bidirectional recurrent question encoder.

mod encoder;
mod vocab;

pub use encoder::{encode_question, GruParams, QuestionEncoding, TextEncoder, TextEncoderNodes};
pub use vocab::{tokenize, tokenize_words, Vocabulary, PAD, UNK};
