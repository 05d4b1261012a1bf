//! Proof-of-Communication endorsement and proposer selection.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::curve::CurveParams;
use super::ecdh::{ecdh, keygen, KeyPair};
use super::{ChainError, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct DronePeer {
    pub id: usize,
    pub keypair: KeyPair,
    pub endorsement_points: u64,
    /// Chance that this peer fails to confirm a probe message.
    pub probe_failure: f64,
}

impl DronePeer {
    pub fn new(id: usize, curve: &CurveParams, seed: u64, probe_failure: f64) -> Self {
        Self {
            id,
            keypair: keygen(curve, derive_seed(seed, &[id as u64])),
            endorsement_points: 0,
            probe_failure,
        }
    }
}

/// A swarm of `count` peers with ids `0..count` and a shared failure rate.
pub fn make_peers(count: usize, curve: &CurveParams, seed: u64, probe_failure: f64) -> Vec<DronePeer> {
    (0..count).map(|i| DronePeer::new(i, curve, seed, probe_failure)).collect()
}

/// Strict majority `floor(K/2) + 1`.
///
/// For even `K` this is `K/2 + 1`. For odd `K` a bare `floor(K/2)` would not
/// be a majority, so the same strict-majority rule is used for every `K`.
pub fn quorum_size(k: usize) -> Result<usize> {
    if k == 0 {
        return Err(ChainError::InvalidArgument("quorum of zero endorsers".into()));
    }
    Ok(k / 2 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PocOutcome {
    pub authorized: bool,
    pub endorsers: Vec<usize>,
    /// Ids of endorsers that confirmed the probe.
    pub affirmed: Vec<usize>,
    pub quorum: usize,
    pub peers: Vec<DronePeer>,
}

/// One authorization round for `sender -> receiver`, endorsed by every other peer.
///
/// Each endorser runs a real ECDH handshake with the sender (both directions
/// must agree), then confirms the probe with probability `1 - probe_failure`.
/// With a strict majority of confirmations the link is authorized and each
/// confirming endorser earns one point; otherwise nobody does.
pub fn poc_round(sender: usize, receiver: usize, peers: &[DronePeer], curve: &CurveParams, rng_seed: u64) -> Result<PocOutcome> {
    let find = |id: usize| {
        peers
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| ChainError::InvalidArgument(format!("no peer with id {id}")))
    };
    let s = find(sender)?;
    find(receiver)?;
    let endorsers: Vec<usize> = peers.iter().filter(|p| p.id != sender && p.id != receiver).map(|p| p.id).collect();
    let quorum = quorum_size(endorsers.len()).map_err(|_| ChainError::InvalidArgument("no endorsing peers".into()))?;
    let mut rng = seeded(rng_seed);
    let mut affirmed = Vec::new();
    for p in peers.iter().filter(|p| p.id != sender && p.id != receiver) {
        let forward = ecdh(&s.keypair.private, &p.keypair.public, curve)?;
        let backward = ecdh(&p.keypair.private, &s.keypair.public, curve)?;
        let ok = rng.random::<f64>() >= p.probe_failure;
        if forward == backward && ok {
            affirmed.push(p.id);
        }
    }
    let authorized = affirmed.len() >= quorum;
    let mut updated = peers.to_vec();
    if authorized {
        for p in updated.iter_mut().filter(|p| affirmed.contains(&p.id)) {
            p.endorsement_points += 1;
        }
    }
    Ok(PocOutcome { authorized, endorsers, affirmed, quorum, peers: updated })
}

/// Samples a proposer with probability proportional to `1 + points`, so
/// peers without points keep a nonzero chance.
pub fn select_proposer(peers: &[DronePeer], rng_seed: u64) -> Result<&DronePeer> {
    if peers.is_empty() {
        return Err(ChainError::InvalidArgument("no peers to choose from".into()));
    }
    let w: Vec<f64> = peers.iter().map(|p| 1.0 + p.endorsement_points as f64).collect();
    let dist = WeightedIndex::new(&w).expect("weights are at least 1");
    Ok(&peers[dist.sample(&mut seeded(rng_seed))])
}
