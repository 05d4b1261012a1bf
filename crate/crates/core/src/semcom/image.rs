//! 8-bit grayscale images and binary PGM (P5) I/O.

use rand::Rng;

use super::{Result, SemcomError};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<u8>,
}

impl ImagePayload {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(SemcomError::InvalidImage(format!(
                "{width}x{height} needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Raw bit cost at 8 bits per pixel.
    pub fn bit_len(&self) -> usize {
        self.pixels.len() * 8
    }

    /// Pixels as MSB-first bits.
    pub fn to_bits(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| (0..8).rev().map(move |i| (p >> i) & 1))
            .collect()
    }

    pub fn from_bits(width: usize, height: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != width * height * 8 {
            return Err(SemcomError::InvalidImage(format!("{} bits for a {width}x{height} image", bits.len())));
        }
        let pixels = bits
            .chunks_exact(8)
            .map(|c| c.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1)))
            .collect();
        Self::new(width, height, pixels)
    }

    /// A smooth synthetic aerial-like scene: gradients plus a few bright blobs.
    pub fn synthetic(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(0.0..width as f64),
                    rng.random_range(0.0..height as f64),
                    rng.random_range(3.0..(width.max(height).max(16) as f64 / 4.0)),
                    rng.random_range(40.0..110.0),
                )
            })
            .collect();
        let gx = rng.random_range(0.3..1.2);
        let gy = rng.random_range(0.3..1.2);
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let mut v = 40.0 + gx * x as f64 + gy * y as f64;
                for (cx, cy, r, amp) in &blobs {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    v += amp * (-d2 / (2.0 * r * r)).exp();
                }
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        Self { width, height, pixels }
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(&self.pixels);
        out
    }

    /// Parses binary PGM with maxval at most 255; `#` comments are allowed in the header.
    pub fn from_pgm(data: &[u8]) -> Result<Self> {
        let bad = |m: &str| SemcomError::InvalidImage(m.to_string());
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < data.len() && !data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated PGM header"));
            }
            fields.push(std::str::from_utf8(&data[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        if fields[0] != "P5" {
            return Err(bad("not a binary PGM (P5)"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
        let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(bad("only 8-bit PGM is supported"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let raster = data.get(pos..pos + w * h).ok_or_else(|| bad("truncated raster"))?;
        Self::new(w, h, raster.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = ImagePayload::synthetic(64, 48, 3);
        assert_eq!(ImagePayload::from_pgm(&img.to_pgm()).unwrap(), img);
        let mut with_comment = b"P5\n# aerial\n2 1\n255\n".to_vec();
        with_comment.extend([7, 9]);
        assert_eq!(ImagePayload::from_pgm(&with_comment).unwrap().pixels, vec![7, 9]);
        assert!(ImagePayload::from_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(ImagePayload::from_pgm(b"P5\n4 4\n255\n\x01").is_err());
    }

    #[test]
    fn bits_round_trip() {
        let img = ImagePayload::synthetic(9, 7, 11);
        let bits = img.to_bits();
        assert_eq!(bits.len(), img.bit_len());
        assert_eq!(ImagePayload::from_bits(9, 7, &bits).unwrap(), img);
        assert!(ImagePayload::new(3, 3, vec![0; 8]).is_err());
    }
}
