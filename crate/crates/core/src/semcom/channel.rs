//! Additive-noise and flat-fading channels.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::coding::ModulatedFrame;
use super::{Result, SemcomError};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Awgn,
    Rician,
    Rayleigh,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [ChannelKind::Awgn, ChannelKind::Rician, ChannelKind::Rayleigh];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rician => "rician",
            ChannelKind::Rayleigh => "rayleigh",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = SemcomError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelKind::Awgn),
            "rician" => Ok(ChannelKind::Rician),
            "rayleigh" => Ok(ChannelKind::Rayleigh),
            other => Err(SemcomError::InvalidChannel(format!("unknown kind {other:?}"))),
        }
    }
}

/// Channel parameters. `snr_db = +inf` is the noiseless sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub snr_db: f64,
    /// Line-of-sight to scattered power ratio; used only by [`ChannelKind::Rician`].
    pub rician_k: f64,
}

pub const DEFAULT_SNR_DB: f64 = 9.0;
pub const DEFAULT_RICIAN_K: f64 = 3.0;

impl ChannelSpec {
    pub fn new(kind: ChannelKind, snr_db: f64) -> Self {
        Self { kind, snr_db, rician_k: DEFAULT_RICIAN_K }
    }

    pub fn awgn(snr_db: f64) -> Self {
        Self::new(ChannelKind::Awgn, snr_db)
    }

    pub fn noiseless(kind: ChannelKind) -> Self {
        Self::new(kind, f64::INFINITY)
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(SemcomError::InvalidChannel(format!("snr_db {} is not usable", self.snr_db)));
        }
        if self.kind == ChannelKind::Rician && !(self.rician_k.is_finite() && self.rician_k >= 0.0) {
            return Err(SemcomError::InvalidChannel(format!("rician_k {} must be finite and >= 0", self.rician_k)));
        }
        Ok(())
    }

    /// Noise power per complex symbol for unit symbol energy.
    pub fn noise_power(&self) -> f64 {
        if self.is_noiseless() {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }

    fn k_factor(&self) -> Option<f64> {
        match self.kind {
            ChannelKind::Awgn => None,
            ChannelKind::Rician => Some(self.rician_k),
            ChannelKind::Rayleigh => Some(0.0),
        }
    }
}

fn complex_gaussian<R: rand::Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// Passes symbols through the channel and equalizes with the true fading gain.
///
/// AWGN: `y = x + n`. Fading: `y = h x + n` with
/// `h = sqrt(K/(K+1)) + sqrt(1/(K+1)) * CN(0, 1)` per symbol, returned as `y / h`.
pub fn transmit(mframe: &ModulatedFrame, channel: &ChannelSpec, rng_seed: u64) -> Result<ModulatedFrame> {
    channel.validate()?;
    let mut out = mframe.clone();
    if channel.is_noiseless() {
        return Ok(out);
    }
    let mut rng = seeded(rng_seed);
    let n0 = channel.noise_power();
    let k = channel.k_factor();
    for s in out.symbols.iter_mut() {
        let h = k.map(|k| {
            let los = (k / (k + 1.0)).sqrt();
            Complex64::new(los, 0.0) + complex_gaussian(&mut rng, 1.0 / (k + 1.0))
        });
        let n = complex_gaussian(&mut rng, n0);
        *s = match h {
            None => *s + n,
            Some(h) => (h * *s + n) / h,
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semcom::coding::{demodulate, modulate, ChannelCode, Modulation};
    use crate::stats::q_function;

    fn frame(bits: &[u8]) -> ModulatedFrame {
        ModulatedFrame {
            symbols: modulate(bits),
            scheme: Modulation::Bpsk,
            code: ChannelCode::None,
            frame_bits: bits.len(),
        }
    }

    fn ber(spec: ChannelSpec, n: usize, seed: u64) -> f64 {
        let bits: Vec<u8> = (0..n).map(|i| (i.wrapping_mul(2654435761) >> 7) as u8 & 1).collect();
        let rx = transmit(&frame(&bits), &spec, seed).unwrap();
        let errs = demodulate(&rx.symbols).iter().zip(&bits).filter(|(a, b)| a != b).count();
        errs as f64 / n as f64
    }

    #[test]
    fn noiseless_is_identity() {
        let f = frame(&[0, 1, 1, 0, 1]);
        for kind in ChannelKind::ALL {
            assert_eq!(transmit(&f, &ChannelSpec::noiseless(kind), 3).unwrap(), f);
        }
    }

    #[test]
    fn awgn_ber_matches_q_function_at_6db() {
        let measured = ber(ChannelSpec::awgn(6.0), 200_000, 17);
        let theory = q_function((2.0 * 10f64.powf(0.6)).sqrt());
        assert!((measured - theory).abs() / theory < 0.1, "{measured} vs {theory}");
    }

    #[test]
    fn rayleigh_ber_matches_closed_form() {
        let g: f64 = 10f64.powf(0.9);
        let theory = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        let measured = ber(ChannelSpec::new(ChannelKind::Rayleigh, 9.0), 200_000, 5);
        assert!((measured - theory).abs() / theory < 0.05, "{measured} vs {theory}");
    }

    #[test]
    fn rician_between_awgn_and_rayleigh() {
        let a = ber(ChannelSpec::awgn(6.0), 200_000, 1);
        let r = ber(ChannelSpec::new(ChannelKind::Rician, 6.0), 200_000, 1);
        let y = ber(ChannelSpec::new(ChannelKind::Rayleigh, 6.0), 200_000, 1);
        assert!(a < r && r < y, "{a} {r} {y}");
    }

    #[test]
    fn deterministic_and_validated() {
        let f = frame(&[0, 1, 0, 1]);
        let spec = ChannelSpec::new(ChannelKind::Rician, 3.0);
        assert_eq!(transmit(&f, &spec, 8).unwrap(), transmit(&f, &spec, 8).unwrap());
        assert!(transmit(&f, &ChannelSpec::awgn(f64::NAN), 1).is_err());
        let mut bad = spec;
        bad.rician_k = -1.0;
        assert!(transmit(&f, &bad, 1).is_err());
        let mut ignored = ChannelSpec::awgn(3.0);
        ignored.rician_k = -1.0;
        assert!(ignored.validate().is_ok());
    }
}
