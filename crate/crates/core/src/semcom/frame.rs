//! Length-prefixed, CRC-protected bit frames.
//!
//! On the wire a frame is `length_prefix` (16 bits, big-endian), the payload
//! bits, then a CRC-16/CCITT-FALSE over prefix and payload (16 bits).

use super::{Result, SemcomError};

pub const PREFIX_BITS: usize = 16;
pub const CRC_BITS: usize = 16;
/// Bits added around every payload.
pub const OVERHEAD_BITS: usize = PREFIX_BITS + CRC_BITS;

/// A frame of 0/1 payload bits with its token count and checksum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    pub length_prefix: u16,
    pub payload: Vec<u8>,
    pub crc: u16,
}

impl BitFrame {
    /// Builds a frame and computes its CRC.
    pub fn new(length_prefix: u16, payload: Vec<u8>) -> Self {
        debug_assert!(payload.iter().all(|b| *b <= 1));
        let crc = crc16_bits(prefix_bits(length_prefix).iter().chain(&payload).copied());
        Self { length_prefix, payload, crc }
    }

    /// Whether the stored CRC matches prefix and payload.
    pub fn crc_ok(&self) -> bool {
        let expect = crc16_bits(
            prefix_bits(self.length_prefix)
                .iter()
                .chain(&self.payload)
                .copied(),
        );
        expect == self.crc
    }

    /// Total serialized length in bits.
    pub fn bit_len(&self) -> usize {
        self.payload.len() + OVERHEAD_BITS
    }

    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bit_len());
        out.extend(prefix_bits(self.length_prefix));
        out.extend(&self.payload);
        out.extend(word_bits(self.crc));
        out
    }

    /// Splits a serialized frame without checking the CRC.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() < OVERHEAD_BITS {
            return Err(SemcomError::MalformedFrame(format!(
                "{} bits is shorter than the {OVERHEAD_BITS}-bit header and trailer",
                bits.len()
            )));
        }
        let end = bits.len() - CRC_BITS;
        Ok(Self {
            length_prefix: bits_word(&bits[..PREFIX_BITS]),
            payload: bits[PREFIX_BITS..end].to_vec(),
            crc: bits_word(&bits[end..]),
        })
    }
}

fn prefix_bits(v: u16) -> [u8; 16] {
    word_bits(v)
}

fn word_bits(v: u16) -> [u8; 16] {
    std::array::from_fn(|i| ((v >> (15 - i)) & 1) as u8)
}

fn bits_word(bits: &[u8]) -> u16 {
    bits.iter().fold(0u16, |acc, b| (acc << 1) | (*b & 1) as u16)
}

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF) over a bit stream, MSB first.
pub fn crc16_bits(bits: impl IntoIterator<Item = u8>) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for b in bits {
        let top = ((crc >> 15) as u8) ^ (b & 1);
        crc <<= 1;
        if top == 1 {
            crc ^= 0x1021;
        }
    }
    crc
}

/// Packs ids as fixed-width big-endian fields.
pub fn pack_ids(ids: &[u32], width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(ids.len() * width);
    for id in ids {
        for i in (0..width).rev() {
            out.push(((id >> i) & 1) as u8);
        }
    }
    out
}

/// Reads `bits.len() / width` ids; trailing bits are ignored.
pub fn unpack_ids(bits: &[u8], width: usize) -> Vec<u32> {
    if width == 0 {
        return Vec::new();
    }
    bits.chunks_exact(width)
        .map(|c| c.iter().fold(0u32, |acc, b| (acc << 1) | (*b & 1) as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::seq::index::sample;
    use rand::Rng;

    fn byte_bits(bytes: &[u8]) -> Vec<u8> {
        bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect()
    }

    #[test]
    fn crc_check_value() {
        assert_eq!(crc16_bits(byte_bits(b"123456789")), 0x29B1);
    }

    #[test]
    fn frame_round_trip() {
        let f = BitFrame::new(3, pack_ids(&[5, 1, 7], 3));
        assert!(f.crc_ok());
        let back = BitFrame::from_bits(&f.to_bits()).unwrap();
        assert_eq!(back, f);
        assert_eq!(unpack_ids(&back.payload, 3), vec![5, 1, 7]);
        assert!(BitFrame::from_bits(&[0; 31]).is_err());
    }

    #[test]
    fn single_flip_always_detected() {
        let f = BitFrame::new(4, pack_ids(&[9, 2, 3, 14], 4));
        let bits = f.to_bits();
        for i in 0..bits.len() {
            let mut b = bits.clone();
            b[i] ^= 1;
            assert!(!BitFrame::from_bits(&b).unwrap().crc_ok(), "flip at {i}");
        }
    }

    #[test]
    fn false_accept_rate_under_random_corruption() {
        // Flip 16 random positions per trial; a CRC-16 should pass about 2^-16 of them.
        let trials = 1_000_000u32;
        let mut rng = seeded(0xC2C);
        let mut accepted = 0u32;
        for _ in 0..trials {
            let n_tok = rng.random_range(1..=12u16);
            let ids: Vec<u32> = (0..n_tok).map(|_| rng.random_range(0..64)).collect();
            let mut bits = BitFrame::new(n_tok, pack_ids(&ids, 6)).to_bits();
            for i in sample(&mut rng, bits.len(), 16) {
                bits[i] ^= 1;
            }
            if BitFrame::from_bits(&bits).unwrap().crc_ok() {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        assert!(rate <= 4.0 / 32768.0, "false-accept rate {rate}");
    }
}
