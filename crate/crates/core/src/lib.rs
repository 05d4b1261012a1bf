//! Seeded simulation suite for semantic UAV logistics.
//!
//! The crate is split by subsystem:
//!
//! - [`semantics`]: scene-graph triples, a synthetic detector, and R@k / mR@k.
//! - [`semcom`]: vocabulary codec, framing, channel coding, fading channels,
//!   and the BLEU / PSNR / MSSIM quality metrics.
//! - [`qrl`]: amplitude-register reinforcement learning for base-station
//!   selection, model aggregation, and an epsilon-greedy baseline.
//! - [`chain`]: short-Weierstrass curve arithmetic, ECDH, Proof-of-Communication
//!   endorsement, and the two-layer PoW/PBFT throughput model.
//! - [`auction`]: the round-based semantic-data auction.
//! - [`harness`]: configuration, topology, experiment runners, and reporting.
//!
//! Every stochastic entry point takes an explicit seed or RNG; nothing reads
//! global randomness.

pub mod auction;
pub mod chain;
pub mod harness;
pub mod qrl;
pub mod rng;
pub mod semantics;
pub mod semcom;
pub mod stats;
