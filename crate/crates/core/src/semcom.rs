//! Semantic communication over noisy links.
//!
//! A sentence or triple list travels through:
//!
//! 1. [`text`]: preprocessing and the vocabulary that maps tokens to ids;
//! 2. [`frame`]: fixed-width id packing into a length-prefixed, CRC-protected frame;
//! 3. [`coding`]: channel coding (none, repetition-3, Hamming(7,4)) and BPSK;
//! 4. [`channel`]: AWGN, Rician and Rayleigh channels with perfect-CSI equalization;
//! 5. the inverse path back to tokens.
//!
//! [`pipeline`] wires the stages together behind the [`pipeline::SemanticCodec`]
//! boundary, [`metrics`] scores the result with BLEU, PSNR and MSSIM, and
//! [`image`] holds grayscale payloads used as the raw-image baseline.

use thiserror::Error;

pub mod channel;
pub mod coding;
pub mod frame;
pub mod image;
pub mod metrics;
pub mod pipeline;
pub mod text;

pub use channel::{transmit, ChannelKind, ChannelSpec};
pub use coding::{channel_decode, channel_encode, ChannelCode, DecodedFrame, ModulatedFrame};
pub use frame::BitFrame;
pub use image::ImagePayload;
pub use metrics::{bleu, mssim, psnr};
pub use pipeline::{semantic_decode, semantic_decode_triples, semantic_encode, semantic_encode_triples};
pub use text::{build_vocabulary, preprocess_corpus, Vocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum SemcomError {
    #[error("corpus is empty after preprocessing")]
    EmptyCorpus,
    #[error("nothing to encode")]
    EmptyInput,
    #[error("{0} tokens exceed the 16-bit length prefix")]
    FrameOverflow(usize),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("frame was encoded with {encoded} but decoded with {requested}")]
    CodeMismatch {
        encoded: ChannelCode,
        requested: ChannelCode,
    },
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("BLEU weights must be nonnegative and sum to 1")]
    InvalidWeights,
    #[error("reference is empty")]
    EmptyReference,
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown channel code {0:?}")]
    UnknownCode(String),
}

pub type Result<T> = std::result::Result<T, SemcomError>;
