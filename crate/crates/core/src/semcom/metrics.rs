//! Text and image fidelity metrics.

use std::collections::HashMap;

use super::image::ImagePayload;
use super::{Result, SemcomError};

pub const DEFAULT_BLEU_WEIGHTS: [f64; 4] = [0.25; 4];

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

/// Sentence BLEU with clipped n-gram precisions and the standard brevity
/// penalty `exp(min(0, 1 - Tr/Tc))`.
///
/// `weights[i]` applies to (i+1)-grams. A zero precision for any n-gram order
/// with positive weight yields 0; no smoothing is applied.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(candidate: &[S], reference: &[T], weights: &[f64]) -> Result<f64> {
    let wsum: f64 = weights.iter().sum();
    if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (wsum - 1.0).abs() > 1e-9 {
        return Err(SemcomError::InvalidWeights);
    }
    if reference.is_empty() {
        return Err(SemcomError::EmptyReference);
    }
    if candidate.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        let n = i + 1;
        if candidate.len() < n {
            return Ok(0.0);
        }
        let cand = ngram_counts(candidate, n);
        let refc = ngram_counts(reference, n);
        let clipped: usize = cand
            .iter()
            .map(|(g, c)| (*c).min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return Ok(0.0);
        }
        let total = candidate.len() + 1 - n;
        log_sum += w * (clipped as f64 / total as f64).ln();
    }
    let tc = candidate.len() as f64;
    let tr = reference.len() as f64;
    let bp = (1.0 - tr / tc).min(0.0);
    Ok((bp + log_sum).exp().clamp(0.0, 1.0))
}

fn check_dims(a: &ImagePayload, b: &ImagePayload) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(SemcomError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    Ok(())
}

/// Mean squared error between equally sized images.
pub fn mse(a: &ImagePayload, b: &ImagePayload) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.pixels.len().max(1) as f64;
    Ok(a.pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        / n)
}

/// `10 log10(255^2 / MSE)`; `+inf` for identical images.
pub fn psnr(a: &ImagePayload, b: &ImagePayload) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / m).log10())
}

const SSIM_WINDOW: usize = 8;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Mean SSIM over every 8x8 window (stride 1) with uniform weighting.
///
/// Images smaller than the window use one window covering the whole image.
pub fn mssim(a: &ImagePayload, b: &ImagePayload) -> Result<f64> {
    check_dims(a, b)?;
    if a.pixels.is_empty() {
        return Err(SemcomError::InvalidImage("empty image".into()));
    }
    let ww = SSIM_WINDOW.min(a.width);
    let wh = SSIM_WINDOW.min(a.height);
    let n = (ww * wh) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(a.height - wh) {
        for x0 in 0..=(a.width - ww) {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + wh {
                let row = y * a.width;
                for x in x0..x0 + ww {
                    let p = a.pixels[row + x] as f64;
                    let q = b.pixels[row + x] as f64;
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2))
                / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn bleu_identity_and_brevity() {
        let r = toks("the drone carries the parcel to the depot");
        assert_eq!(bleu(&r, &r, &DEFAULT_BLEU_WEIGHTS).unwrap(), 1.0);
        let c = &r[..5];
        let want = (1.0 - r.len() as f64 / c.len() as f64).exp();
        assert!((bleu(c, &r, &DEFAULT_BLEU_WEIGHTS).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bleu_edge_cases() {
        let r = toks("a b c d");
        let empty: Vec<&str> = vec![];
        assert_eq!(bleu(&empty, &r, &DEFAULT_BLEU_WEIGHTS).unwrap(), 0.0);
        assert_eq!(bleu(&toks("x y z w"), &r, &DEFAULT_BLEU_WEIGHTS).unwrap(), 0.0);
        assert_eq!(bleu(&toks("a b c"), &r, &DEFAULT_BLEU_WEIGHTS).unwrap(), 0.0);
        assert!(bleu(&r, &empty, &DEFAULT_BLEU_WEIGHTS).is_err());
        assert!(bleu(&r, &r, &[0.5, 0.6]).is_err());
        // Unigram-only BLEU on a permutation is not penalized.
        assert_eq!(bleu(&toks("d c b a"), &r, &[1.0]).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn bleu_in_unit_interval(
            c in proptest::collection::vec(0u8..6, 0..15),
            r in proptest::collection::vec(0u8..6, 1..15),
        ) {
            let c: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            let r: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            let b = bleu(&c, &r, &DEFAULT_BLEU_WEIGHTS).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }

    fn img(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> u8) -> ImagePayload {
        let px = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect::<Vec<u8>>();
        ImagePayload::new(w, h, px).unwrap()
    }

    #[test]
    fn image_metrics_identity() {
        let a = img(16, 16, |x, y| (x * 13 + y * 7) as u8);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!((mssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_offset_psnr() {
        let a = img(8, 8, |_, _| 100);
        let b = img(8, 8, |_, _| 101);
        assert!((psnr(&a, &b).unwrap() - 48.1308036).abs() < 1e-6);
    }

    #[test]
    fn image_metric_errors_and_symmetry() {
        let a = img(8, 8, |_, _| 0);
        let b = img(8, 9, |_, _| 0);
        assert!(psnr(&a, &b).is_err());
        assert!(mssim(&a, &b).is_err());
        let mut rng = seeded(4);
        for _ in 0..20 {
            let p = img(12, 10, |_, _| rng.random());
            let q = img(12, 10, |x, _| x as u8 * 20);
            assert_eq!(psnr(&p, &q).unwrap(), psnr(&q, &p).unwrap());
            let s = mssim(&p, &q).unwrap();
            assert!((-1.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn noise_lowers_mssim() {
        let a = img(32, 32, |x, y| ((x + y) * 4) as u8);
        let mut rng = seeded(9);
        let b = img(32, 32, |x, y| (((x + y) * 4) as i32 + rng.random_range(-40..=40)).clamp(0, 255) as u8);
        assert!(mssim(&a, &b).unwrap() < 0.9);
    }
}
