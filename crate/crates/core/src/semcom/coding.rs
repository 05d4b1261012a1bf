//! Channel codes and BPSK mapping.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::frame::BitFrame;
use super::{Result, SemcomError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ChannelCode {
    None,
    Repetition3,
    #[default]
    Hamming74,
}

impl ChannelCode {
    /// Coded length for `n` information bits.
    pub fn coded_len(self, n: usize) -> usize {
        match self {
            ChannelCode::None => n,
            ChannelCode::Repetition3 => 3 * n,
            ChannelCode::Hamming74 => n.div_ceil(4) * 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelCode::None => "none",
            ChannelCode::Repetition3 => "repetition3",
            ChannelCode::Hamming74 => "hamming74",
        }
    }
}

impl fmt::Display for ChannelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelCode {
    type Err = SemcomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ChannelCode::None),
            "repetition3" => Ok(ChannelCode::Repetition3),
            "hamming74" => Ok(ChannelCode::Hamming74),
            other => Err(SemcomError::UnknownCode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulation {
    #[default]
    Bpsk,
}

/// Unit-power symbols plus the side information the receiver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedFrame {
    pub symbols: Vec<Complex64>,
    pub scheme: Modulation,
    pub code: ChannelCode,
    /// Uncoded frame length in bits, used to strip code padding.
    pub frame_bits: usize,
}

impl ModulatedFrame {
    pub fn average_power(&self) -> f64 {
        if self.symbols.is_empty() {
            return 0.0;
        }
        self.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.symbols.len() as f64
    }
}

// Codeword layout [p1, p2, d1, p3, d2, d3, d4], so the syndrome is the
// 1-based position of a single error.
fn hamming_encode_block(d: [u8; 4]) -> [u8; 7] {
    let p1 = d[0] ^ d[1] ^ d[3];
    let p2 = d[0] ^ d[2] ^ d[3];
    let p3 = d[1] ^ d[2] ^ d[3];
    [p1, p2, d[0], p3, d[1], d[2], d[3]]
}

fn hamming_decode_block(mut c: [u8; 7]) -> [u8; 4] {
    let s1 = c[0] ^ c[2] ^ c[4] ^ c[6];
    let s2 = c[1] ^ c[2] ^ c[5] ^ c[6];
    let s3 = c[3] ^ c[4] ^ c[5] ^ c[6];
    let pos = (s1 | (s2 << 1) | (s3 << 2)) as usize;
    if pos != 0 {
        c[pos - 1] ^= 1;
    }
    [c[2], c[4], c[5], c[6]]
}

pub fn encode_bits(bits: &[u8], code: ChannelCode) -> Vec<u8> {
    match code {
        ChannelCode::None => bits.to_vec(),
        ChannelCode::Repetition3 => bits.iter().flat_map(|b| [*b; 3]).collect(),
        ChannelCode::Hamming74 => bits
            .chunks(4)
            .flat_map(|c| {
                let mut d = [0u8; 4];
                d[..c.len()].copy_from_slice(c);
                hamming_encode_block(d)
            })
            .collect(),
    }
}

/// Hard-decision decoding back to `n_bits` information bits.
pub fn decode_bits(coded: &[u8], code: ChannelCode, n_bits: usize) -> Vec<u8> {
    let mut out: Vec<u8> = match code {
        ChannelCode::None => coded.to_vec(),
        ChannelCode::Repetition3 => coded
            .chunks_exact(3)
            .map(|c| u8::from(c[0] + c[1] + c[2] >= 2))
            .collect(),
        ChannelCode::Hamming74 => coded
            .chunks_exact(7)
            .flat_map(|c| hamming_decode_block(c.try_into().expect("chunk of 7")))
            .collect(),
    };
    out.truncate(n_bits);
    out
}

/// BPSK: bit 0 maps to +1, bit 1 to -1.
pub fn modulate(bits: &[u8]) -> Vec<Complex64> {
    bits.iter()
        .map(|b| Complex64::new(if *b == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

/// Hard decision on the real part.
pub fn demodulate(symbols: &[Complex64]) -> Vec<u8> {
    symbols.iter().map(|s| u8::from(s.re < 0.0)).collect()
}

/// Codes the serialized frame and maps it to BPSK symbols.
pub fn channel_encode(frame: &BitFrame, code: ChannelCode) -> ModulatedFrame {
    let bits = frame.to_bits();
    ModulatedFrame {
        symbols: modulate(&encode_bits(&bits, code)),
        scheme: Modulation::Bpsk,
        code,
        frame_bits: bits.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub frame: BitFrame,
    pub crc_ok: bool,
}

/// Demodulates, corrects, and verifies the CRC.
///
/// A frame that fails its CRC is returned with `crc_ok = false` so callers can
/// still salvage tokens. A frame whose CRC verifies but whose length prefix
/// cannot describe the payload is malformed.
pub fn channel_decode(received: &ModulatedFrame, code: ChannelCode) -> Result<DecodedFrame> {
    if received.code != code {
        return Err(SemcomError::CodeMismatch {
            encoded: received.code,
            requested: code,
        });
    }
    let expected = code.coded_len(received.frame_bits);
    if received.symbols.len() != expected {
        return Err(SemcomError::MalformedFrame(format!(
            "{} symbols received, {expected} expected for a {}-bit frame",
            received.symbols.len(),
            received.frame_bits
        )));
    }
    let bits = decode_bits(&demodulate(&received.symbols), code, received.frame_bits);
    let frame = BitFrame::from_bits(&bits)?;
    let crc_ok = frame.crc_ok();
    if crc_ok {
        let n = frame.length_prefix as usize;
        let len = frame.payload.len();
        if (n == 0 && len != 0) || (n != 0 && len % n != 0) {
            return Err(SemcomError::MalformedFrame(format!(
                "length prefix {n} does not divide {len} payload bits"
            )));
        }
    }
    Ok(DecodedFrame { frame, crc_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semcom::frame::pack_ids;

    #[test]
    fn code_lengths() {
        assert_eq!(encode_bits(&[1, 0, 1, 1], ChannelCode::Hamming74).len(), 7);
        assert_eq!(encode_bits(&[1, 0, 1], ChannelCode::None).len(), 3);
        let f = BitFrame::new(1, vec![1, 0, 1, 1]);
        let m = channel_encode(&f, ChannelCode::None);
        assert_eq!(m.symbols.len(), f.bit_len());
        let h = channel_encode(&f, ChannelCode::Hamming74);
        assert_eq!(h.symbols.len(), 7 * 9);
    }

    #[test]
    fn constant_frame_has_unit_power() {
        let s = modulate(&[0; 64]);
        assert!(s.iter().all(|x| *x == Complex64::new(1.0, 0.0)));
        let m = channel_encode(&BitFrame::new(0, vec![]), ChannelCode::Hamming74);
        assert_eq!(m.average_power(), 1.0);
    }

    #[test]
    fn noiseless_round_trip_every_code() {
        let f = BitFrame::new(3, pack_ids(&[3, 9, 1], 5));
        for code in [ChannelCode::None, ChannelCode::Repetition3, ChannelCode::Hamming74] {
            let d = channel_decode(&channel_encode(&f, code), code).unwrap();
            assert!(d.crc_ok);
            assert_eq!(d.frame, f);
        }
    }

    #[test]
    fn hamming_corrects_every_single_flip() {
        for data in 0u8..16 {
            let d = std::array::from_fn(|i| (data >> i) & 1);
            let c = hamming_encode_block(d);
            assert_eq!(hamming_decode_block(c), d);
            for i in 0..7 {
                let mut e = c;
                e[i] ^= 1;
                assert_eq!(hamming_decode_block(e), d);
            }
        }
    }

    #[test]
    fn double_flips_leave_residual_errors_the_crc_catches() {
        // Oracle: distance 3 means every double flip decodes to a wrong word.
        let f = BitFrame::new(2, pack_ids(&[5, 6], 4));
        let clean = channel_encode(&f, ChannelCode::Hamming74);
        let n_blocks = clean.symbols.len() / 7;
        for block in 0..n_blocks {
            for i in 0..7 {
                for j in (i + 1)..7 {
                    let mut m = clean.clone();
                    m.symbols[block * 7 + i] = -m.symbols[block * 7 + i];
                    m.symbols[block * 7 + j] = -m.symbols[block * 7 + j];
                    match channel_decode(&m, ChannelCode::Hamming74) {
                        Ok(d) => {
                            assert_ne!(d.frame, f);
                            assert!(!d.crc_ok);
                        }
                        Err(SemcomError::MalformedFrame(_)) => unreachable!("crc cannot verify here"),
                        Err(e) => panic!("{e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn decode_errors() {
        let f = BitFrame::new(1, vec![1, 0]);
        let m = channel_encode(&f, ChannelCode::None);
        assert!(matches!(
            channel_decode(&m, ChannelCode::Hamming74),
            Err(SemcomError::CodeMismatch { .. })
        ));
        let mut short = m.clone();
        short.symbols.pop();
        assert!(matches!(channel_decode(&short, ChannelCode::None), Err(SemcomError::MalformedFrame(_))));
        // Valid checksum, but a prefix of 3 cannot describe 2 payload bits.
        let bad = channel_encode(&BitFrame::new(3, vec![1, 0]), ChannelCode::None);
        assert!(matches!(channel_decode(&bad, ChannelCode::None), Err(SemcomError::MalformedFrame(_))));
    }

    #[test]
    fn code_names_round_trip() {
        for c in [ChannelCode::None, ChannelCode::Repetition3, ChannelCode::Hamming74] {
            assert_eq!(c.as_str().parse::<ChannelCode>().unwrap(), c);
        }
        assert!("turbo".parse::<ChannelCode>().is_err());
    }
}
