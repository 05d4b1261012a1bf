//! End-to-end transmission of sentences, triple lists and raw images.

use super::channel::{transmit, ChannelSpec};
use super::coding::{channel_decode, channel_encode, decode_bits, demodulate, encode_bits, modulate, ChannelCode, ModulatedFrame, Modulation};
use super::frame::{pack_ids, unpack_ids, BitFrame};
use super::image::ImagePayload;
use super::text::Vocabulary;
use super::{Result, SemcomError};
use crate::semantics::SemanticTriple;

/// The boundary between tokens and frames; a learned codec can replace
/// [`VocabCodec`] here.
pub trait SemanticCodec {
    fn encode(&self, tokens: &[String]) -> Result<BitFrame>;
    fn decode(&self, frame: &BitFrame) -> Vec<String>;
}

/// Fixed-width vocabulary id codec.
#[derive(Debug, Clone)]
pub struct VocabCodec<'a> {
    pub vocab: &'a Vocabulary,
}

impl SemanticCodec for VocabCodec<'_> {
    fn encode(&self, tokens: &[String]) -> Result<BitFrame> {
        semantic_encode(tokens, self.vocab)
    }

    fn decode(&self, frame: &BitFrame) -> Vec<String> {
        semantic_decode(frame, self.vocab)
    }
}

/// Maps tokens to `bit_width`-bit ids; unknown tokens become `<unk>`.
pub fn semantic_encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Result<BitFrame> {
    if tokens.is_empty() {
        return Err(SemcomError::EmptyInput);
    }
    let n = u16::try_from(tokens.len()).map_err(|_| SemcomError::FrameOverflow(tokens.len()))?;
    let ids: Vec<u32> = tokens.iter().map(|t| vocab.id(t.as_ref())).collect();
    Ok(BitFrame::new(n, pack_ids(&ids, vocab.bit_width())))
}

/// Flattens triples in subject, relation, object order and encodes them.
pub fn semantic_encode_triples(triples: &[SemanticTriple], vocab: &Vocabulary) -> Result<BitFrame> {
    let tokens: Vec<&str> = triples.iter().flat_map(|t| t.tokens()).collect();
    semantic_encode(&tokens, vocab)
}

/// Reads every whole id in the payload; ids past the vocabulary become `<unk>`.
///
/// The count comes from the payload length rather than the prefix, so a
/// corrupted prefix cannot truncate or extend the output.
pub fn semantic_decode(frame: &BitFrame, vocab: &Vocabulary) -> Vec<String> {
    unpack_ids(&frame.payload, vocab.bit_width())
        .into_iter()
        .map(|id| vocab.token(id).to_string())
        .collect()
}

/// Regroups decoded tokens in threes, dropping an incomplete trailing group.
pub fn semantic_decode_triples(frame: &BitFrame, vocab: &Vocabulary) -> Vec<SemanticTriple> {
    semantic_decode(frame, vocab)
        .chunks_exact(3)
        .map(|c| SemanticTriple::new(c[0].clone(), c[1].clone(), c[2].clone()))
        .collect()
}

/// A coded link over one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub code: ChannelCode,
    pub channel: ChannelSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub tokens: Vec<String>,
    pub crc_ok: bool,
    /// Channel symbols spent (one coded bit per BPSK symbol).
    pub coded_bits: usize,
}

impl Link {
    pub fn new(code: ChannelCode, channel: ChannelSpec) -> Self {
        Self { code, channel }
    }

    /// Sends a frame and returns what the receiver recovers.
    pub fn deliver(&self, frame: &BitFrame, codec: &dyn SemanticCodec, seed: u64) -> Result<Delivery> {
        let tx = channel_encode(frame, self.code);
        let coded_bits = tx.symbols.len();
        let rx = transmit(&tx, &self.channel, seed)?;
        match channel_decode(&rx, self.code) {
            Ok(d) => Ok(Delivery { tokens: codec.decode(&d.frame), crc_ok: d.crc_ok, coded_bits }),
            // A frame that verifies yet is inconsistent counts as lost.
            Err(SemcomError::MalformedFrame(_)) => Ok(Delivery { tokens: Vec::new(), crc_ok: false, coded_bits }),
            Err(e) => Err(e),
        }
    }

    pub fn send_tokens<S: AsRef<str>>(&self, tokens: &[S], vocab: &Vocabulary, seed: u64) -> Result<Delivery> {
        let owned: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
        let codec = VocabCodec { vocab };
        self.deliver(&codec.encode(&owned)?, &codec, seed)
    }

    /// Sends triples; returns the regrouped triples and the delivery record.
    pub fn send_triples(&self, triples: &[SemanticTriple], vocab: &Vocabulary, seed: u64) -> Result<(Vec<SemanticTriple>, Delivery)> {
        let frame = semantic_encode_triples(triples, vocab)?;
        let d = self.deliver(&frame, &VocabCodec { vocab }, seed)?;
        let triples = d
            .tokens
            .chunks_exact(3)
            .map(|c| SemanticTriple::new(c[0].clone(), c[1].clone(), c[2].clone()))
            .collect();
        Ok((triples, d))
    }

    /// Sends raw 8-bit pixels without framing; returns the received image and
    /// the coded bit count.
    pub fn send_image(&self, img: &ImagePayload, seed: u64) -> Result<(ImagePayload, usize)> {
        let bits = img.to_bits();
        let frame = ModulatedFrame {
            symbols: modulate(&encode_bits(&bits, self.code)),
            scheme: Modulation::Bpsk,
            code: self.code,
            frame_bits: bits.len(),
        };
        let coded_bits = frame.symbols.len();
        let rx = transmit(&frame, &self.channel, seed)?;
        let back = decode_bits(&demodulate(&rx.symbols), self.code, bits.len());
        Ok((ImagePayload::from_bits(img.width, img.height, &back)?, coded_bits))
    }
}
