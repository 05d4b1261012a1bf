//! The two-layer chain: PBFT blocks inside PoW blocks, and the latency model
//! that paces them.
//!
//! Committee member `i` has a verification cost `v_i` and a link cost `m_i`.
//! With compute shares `x_i` and bandwidth shares `y_i` of the budgets `C`
//! and `B`, one PBFT block takes
//!
//! ```text
//! max_i v_i / (x_i C)  +  max_i c_msg K m_i / (y_i B)
//! ```
//!
//! Under equal shares the second term is `c_msg K^2 max m / B`, the quadratic
//! message cost of PBFT. Member costs come from a seeded per-member stream, so
//! growing the committee appends members without changing existing ones.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{ChainError, Result};
use crate::rng::{derive_seed, seeded};

pub const MIN_COMMITTEE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationKind {
    /// Equal bandwidth per member; compute proportional to verification cost.
    EqualBandwidth,
    /// Equal compute per member; bandwidth proportional to link cost.
    EqualCompute,
    /// Both resources proportional to cost, the exact minimizer of each term.
    Optimal,
}

impl AllocationKind {
    pub const ALL: [AllocationKind; 3] = [AllocationKind::Optimal, AllocationKind::EqualBandwidth, AllocationKind::EqualCompute];

    pub fn as_str(self) -> &'static str {
        match self {
            AllocationKind::EqualBandwidth => "equal_bandwidth",
            AllocationKind::EqualCompute => "equal_compute",
            AllocationKind::Optimal => "optimal",
        }
    }
}

impl fmt::Display for AllocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AllocationKind {
    type Err = ChainError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ChainError::InvalidArgument(format!("unknown allocation strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationStrategy {
    pub kind: AllocationKind,
    pub bandwidth_budget: f64,
    pub compute_budget: f64,
}

impl AllocationStrategy {
    pub fn new(kind: AllocationKind, cfg: &ChainConfig) -> Self {
        Self { kind, bandwidth_budget: cfg.bandwidth_budget, compute_budget: cfg.compute_budget }
    }

    /// Per-member (compute, bandwidth) amounts; each column sums to its budget.
    pub fn shares(&self, members: &[MemberCost]) -> Vec<(f64, f64)> {
        let k = members.len() as f64;
        let sv: f64 = members.iter().map(|m| m.verify).sum();
        let sm: f64 = members.iter().map(|m| m.message).sum();
        let (prop_c, prop_b) = match self.kind {
            AllocationKind::EqualBandwidth => (true, false),
            AllocationKind::EqualCompute => (false, true),
            AllocationKind::Optimal => (true, true),
        };
        members
            .iter()
            .map(|m| {
                let x = if prop_c { m.verify / sv } else { 1.0 / k };
                let y = if prop_b { m.message / sm } else { 1.0 / k };
                (x * self.compute_budget, y * self.bandwidth_budget)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberCost {
    pub verify: f64,
    pub message: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub pbft_per_pow: usize,
    pub tx_per_block: u64,
    pub bandwidth_budget: f64,
    pub compute_budget: f64,
    /// Message cost constant `c_msg`.
    pub c_msg: f64,
    /// Verification costs are drawn from `U[verify_lo, verify_hi]`.
    pub verify_lo: f64,
    pub verify_hi: f64,
    /// Link costs are drawn from `U[1, 1 + message_spread]`.
    pub message_spread: f64,
    pub profile_seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            pbft_per_pow: 30,
            tx_per_block: 100,
            bandwidth_budget: 1000.0,
            compute_budget: 100.0,
            c_msg: 0.33,
            verify_lo: 0.5,
            verify_hi: 1.5,
            message_spread: 0.05,
            profile_seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.bandwidth_budget, self.compute_budget, self.c_msg, self.verify_lo];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0))
            || !(self.verify_hi >= self.verify_lo && self.verify_hi.is_finite())
            || !(self.message_spread >= 0.0 && self.message_spread.is_finite())
            || self.pbft_per_pow == 0
            || self.tx_per_block == 0
        {
            return Err(ChainError::InvalidArgument("chain budgets and costs must be positive and finite".into()));
        }
        Ok(())
    }

    /// Costs of the first `k` committee members.
    pub fn members(&self, k: usize) -> Vec<MemberCost> {
        (0..k)
            .map(|i| {
                let mut rng = seeded(derive_seed(self.profile_seed, &[0xC0, i as u64]));
                let verify = if self.verify_hi > self.verify_lo { rng.random_range(self.verify_lo..self.verify_hi) } else { self.verify_lo };
                let message = 1.0 + self.message_spread * rng.random::<f64>();
                MemberCost { verify, message }
            })
            .collect()
    }
}

/// Latency of one PBFT block for an explicit allocation (compute, bandwidth) per member.
pub fn latency_for_shares(members: &[MemberCost], shares: &[(f64, f64)], c_msg: f64) -> f64 {
    let k = members.len() as f64;
    let verify = members.iter().zip(shares).map(|(m, s)| m.verify / s.0).fold(0.0, f64::max);
    let message = members.iter().zip(shares).map(|(m, s)| c_msg * k * m.message / s.1).fold(0.0, f64::max);
    verify + message
}

/// Seconds to produce one PBFT block with a committee of `k`.
pub fn pbft_latency(k: usize, alloc: &AllocationStrategy, cfg: &ChainConfig) -> Result<f64> {
    if k < MIN_COMMITTEE {
        return Err(ChainError::CommitteeTooSmall(k));
    }
    if !(alloc.bandwidth_budget > 0.0 && alloc.compute_budget > 0.0) {
        return Err(ChainError::InvalidArgument("allocation budgets must be positive".into()));
    }
    cfg.validate()?;
    let members = cfg.members(k);
    Ok(latency_for_shares(&members, &alloc.shares(&members), cfg.c_msg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbftBlock {
    pub height: u64,
    pub sealed_at: f64,
    pub tx_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowBlock {
    pub height: u64,
    pub sealed_at: f64,
    pub pbft: Vec<PbftBlock>,
}

/// PoW blocks sealed over groups of exactly `pbft_per_pow` PBFT blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredChain {
    pub pbft_per_pow: usize,
    pub pow_blocks: Vec<PowBlock>,
    pending: Vec<PbftBlock>,
    next_height: u64,
}

impl LayeredChain {
    pub fn new(pbft_per_pow: usize) -> Self {
        Self { pbft_per_pow, pow_blocks: Vec::new(), pending: Vec::new(), next_height: 0 }
    }

    /// Appends a PBFT block; seals a PoW block when the group is full.
    pub fn push_pbft(&mut self, sealed_at: f64, tx_count: u64) {
        self.pending.push(PbftBlock { height: self.next_height, sealed_at, tx_count });
        self.next_height += 1;
        if self.pending.len() == self.pbft_per_pow {
            let pbft = std::mem::take(&mut self.pending);
            self.pow_blocks.push(PowBlock { height: self.pow_blocks.len() as u64, sealed_at, pbft });
        }
    }

    pub fn pending(&self) -> &[PbftBlock] {
        &self.pending
    }

    /// Transactions in every PBFT block, sealed into PoW or not.
    pub fn committed_tx(&self) -> u64 {
        self.pow_blocks.iter().flat_map(|b| &b.pbft).chain(&self.pending).map(|b| b.tx_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRun {
    pub tx_per_sec: f64,
    pub pbft_latency: f64,
    pub pow_interval: f64,
    pub chain: LayeredChain,
}

/// Event loop: a PBFT block every `pbft_latency`, a PoW seal after every
/// `pbft_per_pow` of them (PoW difficulty tracks `pbft_per_pow * latency`).
/// Throughput counts PBFT-final transactions.
pub fn simulate_throughput(k: usize, alloc: &AllocationStrategy, duration: f64, cfg: &ChainConfig) -> Result<ThroughputRun> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ChainError::InvalidArgument("duration must be positive".into()));
    }
    let lat = pbft_latency(k, alloc, cfg)?;
    let mut chain = LayeredChain::new(cfg.pbft_per_pow);
    let mut n = 1u64;
    loop {
        let t = n as f64 * lat;
        if t > duration * (1.0 + 1e-12) {
            break;
        }
        chain.push_pbft(t, cfg.tx_per_block);
        n += 1;
    }
    Ok(ThroughputRun {
        tx_per_sec: chain.committed_tx() as f64 / duration,
        pbft_latency: lat,
        pow_interval: cfg.pbft_per_pow as f64 * lat,
        chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc(kind: AllocationKind) -> AllocationStrategy {
        AllocationStrategy::new(kind, &ChainConfig::default())
    }

    #[test]
    fn committee_minimum() {
        let cfg = ChainConfig::default();
        assert_eq!(pbft_latency(3, &alloc(AllocationKind::Optimal), &cfg), Err(ChainError::CommitteeTooSmall(3)));
        assert!(pbft_latency(4, &alloc(AllocationKind::Optimal), &cfg).is_ok());
    }

    #[test]
    fn shares_sum_to_budgets() {
        let cfg = ChainConfig::default();
        let m = cfg.members(17);
        for kind in AllocationKind::ALL {
            let s = alloc(kind).shares(&m);
            let c: f64 = s.iter().map(|x| x.0).sum();
            let b: f64 = s.iter().map(|x| x.1).sum();
            assert!((c - cfg.compute_budget).abs() < 1e-9 && (b - cfg.bandwidth_budget).abs() < 1e-9);
            assert!(s.iter().all(|x| x.0 > 0.0 && x.1 > 0.0));
        }
    }

    #[test]
    fn doubling_bandwidth_halves_message_term() {
        let cfg = ChainConfig::default();
        let m = cfg.members(12);
        let a = alloc(AllocationKind::EqualCompute);
        let s1 = a.shares(&m);
        let s2: Vec<_> = s1.iter().map(|(c, b)| (*c, 2.0 * b)).collect();
        let inf: Vec<_> = s1.iter().map(|(c, _)| (*c, f64::INFINITY)).collect();
        let verify = latency_for_shares(&m, &inf, cfg.c_msg);
        let t1 = latency_for_shares(&m, &s1, cfg.c_msg) - verify;
        let t2 = latency_for_shares(&m, &s2, cfg.c_msg) - verify;
        assert!((t1 - 2.0 * t2).abs() < 1e-12);
    }

    #[test]
    fn latency_grows_with_committee() {
        let cfg = ChainConfig::default();
        for kind in AllocationKind::ALL {
            let a = alloc(kind);
            let mut prev = 0.0;
            for k in 4..=60 {
                let l = pbft_latency(k, &a, &cfg).unwrap();
                assert!(l > prev, "{kind} at {k}");
                prev = l;
            }
        }
    }

    #[test]
    fn prefix_consistent_members() {
        let cfg = ChainConfig::default();
        assert_eq!(cfg.members(10)[..], cfg.members(20)[..10]);
    }

    #[test]
    fn throughput_ratio_and_layering() {
        let cfg = ChainConfig { tx_per_block: 100, ..ChainConfig::default() };
        let mut chain = LayeredChain::new(cfg.pbft_per_pow);
        for i in 1..=65 {
            chain.push_pbft(i as f64 * 2.0, 100);
        }
        assert_eq!(chain.pow_blocks.len(), 2);
        assert!(chain.pow_blocks.iter().all(|b| b.pbft.len() == 30));
        assert_eq!(chain.pending().len(), 5);
        // 65 blocks of 100 tx at 2 s each over 130 s is 50 tx/s.
        assert!((chain.committed_tx() as f64 / 130.0 - 50.0).abs() < 1e-12);

        let run = simulate_throughput(10, &alloc(AllocationKind::Optimal), 600.0, &cfg).unwrap();
        let expect = (600.0 / run.pbft_latency).floor() * 100.0 / 600.0;
        assert!((run.tx_per_sec - expect).abs() < 1e-9);
        assert!((run.pow_interval - 30.0 * run.pbft_latency).abs() < 1e-12);
    }

    #[test]
    fn strategy_ordering_each_k() {
        let cfg = ChainConfig::default();
        for k in (5..=50).step_by(5) {
            let l = |kind| pbft_latency(k, &alloc(kind), &cfg).unwrap();
            let (o, b, c) = (l(AllocationKind::Optimal), l(AllocationKind::EqualBandwidth), l(AllocationKind::EqualCompute));
            assert!(o <= b && b < c, "k={k}: {o} {b} {c}");
        }
    }

    #[test]
    fn names_round_trip() {
        for k in AllocationKind::ALL {
            assert_eq!(k.as_str().parse::<AllocationKind>().unwrap(), k);
        }
        assert!("fastest".parse::<AllocationKind>().is_err());
    }
}
