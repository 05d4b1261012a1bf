//! Elliptic-curve Diffie-Hellman.

use crypto_bigint::U256;
use rand::RngCore;

use super::curve::{CurveParams, ECPoint};
use super::{ChainError, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub private: U256,
    pub public: ECPoint,
}

/// The x-coordinate of the shared point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SharedSecret(pub U256);

/// Uniform private key in `[1, n-1]` by rejection sampling; public = private * G.
pub fn keygen(curve: &CurveParams, rng_seed: u64) -> KeyPair {
    let mut rng = seeded(rng_seed);
    let bits = curve.n.bits_vartime();
    let mask = U256::MAX.wrapping_shr_vartime(256 - bits);
    let private = loop {
        let mut buf = [0u8; 32];
        rng.fill_bytes(&mut buf);
        let k = U256::from_be_slice(&buf) & mask;
        if k != U256::ZERO && k < curve.n {
            break k;
        }
    };
    KeyPair { private, public: curve.mul_unchecked(&private, &curve.g) }
}

impl KeyPair {
    /// Derives the pair for a given private scalar.
    pub fn from_private(curve: &CurveParams, private: U256) -> Result<Self> {
        if private == U256::ZERO || private >= curve.n {
            return Err(ChainError::InvalidArgument("private key outside [1, n-1]".into()));
        }
        Ok(Self { private, public: curve.mul_unchecked(&private, &curve.g) })
    }

    pub fn secret_bytes(secret: &SharedSecret) -> [u8; 32] {
        secret.0.to_be_bytes()
    }
}

/// `x(my_private * their_public)`.
pub fn ecdh(my_private: &U256, their_public: &ECPoint, curve: &CurveParams) -> Result<SharedSecret> {
    if their_public.is_infinity() {
        return Err(ChainError::KeyAgreement("peer public key is the point at infinity".into()));
    }
    let shared = curve
        .scalar_mul(my_private, their_public)
        .map_err(|_| ChainError::KeyAgreement(format!("peer public key {their_public} is off the curve")))?;
    shared
        .x()
        .map(SharedSecret)
        .ok_or_else(|| ChainError::KeyAgreement("shared point is the point at infinity".into()))
}
