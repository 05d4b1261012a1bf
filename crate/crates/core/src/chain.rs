//! Drone blockchain: curve arithmetic, ECDH, Proof-of-Communication
//! endorsement, and the two-layer PoW/PBFT chain model.
//!
//! None of this is constant-time or hardened. It exists to simulate protocol
//! behavior and throughput, not to protect real keys.

use thiserror::Error;

pub mod curve;
pub mod ecdh;
pub mod ledger;
pub mod poc;

pub use curve::{CurveParams, ECPoint};
pub use ecdh::{ecdh, keygen, KeyPair, SharedSecret};
pub use ledger::{pbft_latency, simulate_throughput, AllocationKind, AllocationStrategy, ChainConfig, LayeredChain};
pub use poc::{poc_round, quorum_size, select_proposer, DronePeer, PocOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("curve file: {0}")]
    CurveFile(String),
    #[error("point {0} is not on the curve")]
    OffCurve(String),
    #[error("key agreement failed: {0}")]
    KeyAgreement(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("PBFT committee of {0} is below the minimum of 4")]
    CommitteeTooSmall(usize),
}

pub type Result<T> = std::result::Result<T, ChainError>;
