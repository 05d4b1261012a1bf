//! Round-based auction of extracted scene triples to virtual service providers.
//!
//! Each round, every UAV captures a fresh image from a shrinking pool and
//! contributes its triples as supply. Each VSP asks for an all-or-nothing
//! bundle (a triple count per object category) and states one bid price.
//! A triple's category is its subject's category.
//!
//! The mechanism behind [`Mechanism`] is a stand-in: bids are ranked by
//! `b * relatedness^w / volume` and admitted greedily while supply lasts,
//! and each winner pays its critical value, floored at its reserve price.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::rng::{derive_seed, seeded};
use crate::semantics::{generate_scene, PredicateCatalog, SceneGraph, SemanticTriple, SemanticsError};

#[derive(Debug, Error, PartialEq)]
pub enum AuctionError {
    #[error("image pool has {available} images, round needs {needed}")]
    PoolExhausted { available: usize, needed: usize },
    #[error("invalid bid from VSP {0}: {1}")]
    InvalidBid(usize, String),
    #[error("invalid auction config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

pub type Result<T> = std::result::Result<T, AuctionError>;

#[derive(Debug, Clone, PartialEq)]
pub struct VSPBid {
    pub vsp_id: usize,
    /// Requested triple count per category; the keys form `C_n`.
    pub request: BTreeMap<String, usize>,
    pub bid: f64,
    /// Per-triple unit price; the reserve is `unit_price * volume`.
    pub unit_price: f64,
}

impl VSPBid {
    pub fn volume(&self) -> usize {
        self.request.values().sum()
    }

    pub fn reserve(&self) -> f64 {
        self.unit_price * self.volume() as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.request.is_empty() || self.request.values().any(|c| *c == 0) {
            return Err(AuctionError::InvalidBid(self.vsp_id, "request must name categories with positive counts".into()));
        }
        if !(self.bid.is_finite() && self.bid > 0.0) {
            return Err(AuctionError::InvalidBid(self.vsp_id, "bid must be positive".into()));
        }
        if !(self.unit_price.is_finite() && self.unit_price >= 0.0) {
            return Err(AuctionError::InvalidBid(self.vsp_id, "unit price must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One supplied triple: (UAV index, position in that UAV's scene, triple).
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyItem {
    pub uav: usize,
    pub index: usize,
    pub triple: SemanticTriple,
}

/// Supplied triples grouped by category, in UAV then scene order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Supply {
    by_category: BTreeMap<String, Vec<SupplyItem>>,
}

impl Supply {
    pub fn from_scenes(scenes: &[SceneGraph]) -> Self {
        let mut by_category: BTreeMap<String, Vec<SupplyItem>> = BTreeMap::new();
        for (uav, s) in scenes.iter().enumerate() {
            for (index, t) in s.triples().iter().enumerate() {
                by_category
                    .entry(t.subject.clone())
                    .or_default()
                    .push(SupplyItem { uav, index, triple: t.clone() });
            }
        }
        Self { by_category }
    }

    pub fn count(&self, category: &str) -> usize {
        self.by_category.get(category).map_or(0, Vec::len)
    }

    pub fn total(&self) -> usize {
        self.by_category.values().map(Vec::len).sum()
    }

    /// Share of the requested categories that appear in the supply.
    pub fn relatedness(&self, bid: &VSPBid) -> f64 {
        let present = bid.request.keys().filter(|c| self.count(c) > 0).count();
        present as f64 / bid.request.len() as f64
    }
}

pub fn score(bid: &VSPBid, supply: &Supply, relatedness_weight: f64) -> f64 {
    bid.bid * supply.relatedness(bid).powf(relatedness_weight) / bid.volume() as f64
}

fn ranked<'a>(bids: &'a [VSPBid], supply: &Supply, w: f64) -> Vec<(&'a VSPBid, f64)> {
    let mut v: Vec<(&VSPBid, f64)> = bids
        .iter()
        .filter(|b| b.bid >= b.reserve())
        .map(|b| (b, score(b, supply, w)))
        .filter(|(_, s)| *s > 0.0)
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.vsp_id.cmp(&b.0.vsp_id)));
    v
}

fn fits(remaining: &BTreeMap<&str, usize>, bid: &VSPBid) -> bool {
    bid.request.iter().all(|(c, n)| remaining.get(c.as_str()).copied().unwrap_or(0) >= *n)
}

fn take(remaining: &mut BTreeMap<&str, usize>, bid: &VSPBid) {
    for (c, n) in &bid.request {
        *remaining.get_mut(c.as_str()).expect("checked by fits") -= n;
    }
}

fn remaining_counts(supply: &Supply) -> BTreeMap<&str, usize> {
    supply.by_category.iter().map(|(c, v)| (c.as_str(), v.len())).collect()
}

/// Winner determination and pricing, swappable as a unit.
pub trait Mechanism {
    fn determine_winners(&self, bids: &[VSPBid], supply: &Supply) -> Vec<usize>;
    fn price_winners(&self, winners: &[usize], bids: &[VSPBid], supply: &Supply) -> BTreeMap<usize, f64>;
}

/// Greedy by score with critical-value payments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyCritical {
    pub relatedness_weight: f64,
}

impl Default for GreedyCritical {
    fn default() -> Self {
        Self { relatedness_weight: 1.0 }
    }
}

impl Mechanism for GreedyCritical {
    fn determine_winners(&self, bids: &[VSPBid], supply: &Supply) -> Vec<usize> {
        determine_winners(bids, supply, self.relatedness_weight)
    }

    fn price_winners(&self, winners: &[usize], bids: &[VSPBid], supply: &Supply) -> BTreeMap<usize, f64> {
        price_winners(winners, bids, supply, self.relatedness_weight)
    }
}

/// Admits bids at or above reserve in descending score (ties by `vsp_id`)
/// while their whole bundle is still available. Returns winning `vsp_id`s in
/// admission order.
pub fn determine_winners(bids: &[VSPBid], supply: &Supply, relatedness_weight: f64) -> Vec<usize> {
    let mut remaining = remaining_counts(supply);
    let mut winners = Vec::new();
    for (b, _) in ranked(bids, supply, relatedness_weight) {
        if fits(&remaining, b) {
            take(&mut remaining, b);
            winners.push(b.vsp_id);
        }
    }
    winners
}

/// Each winner pays the lowest bid that keeps it winning with every other
/// bid fixed, and never less than its reserve.
///
/// With the others ranked alone, let `J` be the deepest position at which the
/// winner's bundle still fits after the greedy pass over the first `J` others.
/// The critical score is that of the `J`-th other (0 if `J` is past the end),
/// converted back to a price through the winner's relatedness and volume.
pub fn price_winners(winners: &[usize], bids: &[VSPBid], supply: &Supply, relatedness_weight: f64) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for &id in winners {
        let Some(me) = bids.iter().find(|b| b.vsp_id == id) else {
            continue;
        };
        let others: Vec<VSPBid> = bids.iter().filter(|b| b.vsp_id != id).cloned().collect();
        let order = ranked(&others, supply, relatedness_weight);
        let mut remaining = remaining_counts(supply);
        let mut critical = 0.0;
        for (b, s) in &order {
            if !fits(&remaining, me) {
                break;
            }
            // Still winning at this depth; falling below `b` would cost a slot.
            critical = *s;
            if fits(&remaining, b) {
                take(&mut remaining, b);
            }
        }
        if fits(&remaining, me) {
            critical = 0.0;
        }
        let rel = supply.relatedness(me).powf(relatedness_weight);
        let critical_bid = if rel > 0.0 { critical * me.volume() as f64 / rel } else { me.bid };
        out.insert(id, critical_bid.max(me.reserve()).min(me.bid));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winners: Vec<usize>,
    pub allocation: BTreeMap<usize, Vec<SupplyItem>>,
    pub payments: BTreeMap<usize, f64>,
}

/// Hands each winner, in admission order, the earliest unallocated items of each requested category.
pub fn allocate(winners: &[usize], bids: &[VSPBid], supply: &Supply) -> BTreeMap<usize, Vec<SupplyItem>> {
    let mut cursor: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for id in winners {
        let Some(b) = bids.iter().find(|b| b.vsp_id == *id) else {
            continue;
        };
        let mut items = Vec::with_capacity(b.volume());
        for (c, n) in &b.request {
            let start = cursor.entry(c.as_str()).or_insert(0);
            let pool = &supply.by_category[c];
            items.extend_from_slice(&pool[*start..*start + n]);
            *start += n;
        }
        out.insert(*id, items);
    }
    out
}

pub fn run_mechanism(mech: &dyn Mechanism, bids: &[VSPBid], supply: &Supply) -> Result<AuctionOutcome> {
    for b in bids {
        b.validate()?;
    }
    let winners = mech.determine_winners(bids, supply);
    let payments = mech.price_winners(&winners, bids, supply);
    let allocation = allocate(&winners, bids, supply);
    Ok(AuctionOutcome { winners, allocation, payments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuctionConfig {
    pub n_vsps: usize,
    pub n_uavs: usize,
    pub relatedness_weight: f64,
    pub unit_price_range: (f64, f64),
    /// Per-unit valuation range used to draw bids.
    pub value_range: (f64, f64),
    pub max_categories_per_bid: usize,
    pub max_count_per_category: usize,
    pub scene_size: (usize, usize),
}

impl Default for AuctionConfig {
    fn default() -> Self {
        Self {
            n_vsps: 12,
            n_uavs: 20,
            relatedness_weight: 1.0,
            unit_price_range: (0.1, 1.0),
            value_range: (0.1, 1.0),
            max_categories_per_bid: 3,
            max_count_per_category: 3,
            scene_size: (3, 8),
        }
    }
}

impl AuctionConfig {
    pub fn validate(&self) -> Result<()> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi;
        if self.n_uavs == 0
            || self.max_categories_per_bid == 0
            || self.max_count_per_category == 0
            || !range_ok(self.unit_price_range)
            || !range_ok(self.value_range)
            || !(self.relatedness_weight.is_finite() && self.relatedness_weight >= 0.0)
        {
            return Err(AuctionError::InvalidConfig("counts must be positive and price ranges positive".into()));
        }
        Ok(())
    }
}

/// Image ids not yet captured; each round removes `n_uavs` of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePool {
    images: Vec<u64>,
}

impl ImagePool {
    pub fn new(size: usize, seed: u64) -> Self {
        Self { images: (0..size as u64).map(|i| derive_seed(seed, &[0x1A, i])).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Per-round state: supplies, bids and the mechanism's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionRound {
    pub uav_supplies: Vec<SceneGraph>,
    pub bids: Vec<VSPBid>,
    pub outcome: AuctionOutcome,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo { rng.random_range(lo..=hi) } else { lo }
}

/// Draws `n_vsps` bids over the catalog's categories.
pub fn sample_bids(catalog: &PredicateCatalog, cfg: &AuctionConfig, seed: u64) -> Vec<VSPBid> {
    let mut rng = seeded(seed);
    let cats = catalog.object_categories();
    (0..cfg.n_vsps)
        .map(|vsp_id| {
            let k = rng.random_range(1..=cfg.max_categories_per_bid.min(cats.len()));
            let request: BTreeMap<String, usize> = sample(&mut rng, cats.len(), k)
                .into_iter()
                .map(|i| (cats[i].clone(), rng.random_range(1..=cfg.max_count_per_category)))
                .collect();
            let volume = request.values().sum::<usize>() as f64;
            let unit_price = uniform(&mut rng, cfg.unit_price_range);
            let bid = uniform(&mut rng, cfg.value_range) * volume;
            VSPBid { vsp_id, request, bid, unit_price }
        })
        .collect()
}

/// One auction round: each UAV captures a random remaining image, VSPs bid,
/// and the greedy critical-value mechanism clears the market.
pub fn run_round(pool: &mut ImagePool, catalog: &PredicateCatalog, cfg: &AuctionConfig, rng_seed: u64) -> Result<AuctionRound> {
    cfg.validate()?;
    if pool.len() < cfg.n_uavs {
        return Err(AuctionError::PoolExhausted { available: pool.len(), needed: cfg.n_uavs });
    }
    let mut rng = seeded(rng_seed);
    let mut supplies = Vec::with_capacity(cfg.n_uavs);
    for _ in 0..cfg.n_uavs {
        let g = pool.images.swap_remove(rng.random_range(0..pool.images.len()));
        supplies.push(generate_scene(catalog, g, cfg.scene_size)?);
    }
    let bids = sample_bids(catalog, cfg, derive_seed(rng_seed, &[0xB1D]));
    let supply = Supply::from_scenes(&supplies);
    let mech = GreedyCritical { relatedness_weight: cfg.relatedness_weight };
    let outcome = run_mechanism(&mech, &bids, &supply)?;
    Ok(AuctionRound { uav_supplies: supplies, bids, outcome })
}

pub const CSV_HEADER: &str = "round,vsp,won,payment,bid,requested,allocated,seed";

/// One row per bid, with fixed six-decimal prices.
pub fn outcome_rows(round: usize, r: &AuctionRound, seed: u64) -> String {
    let mut out = String::new();
    for b in &r.bids {
        let won = r.outcome.payments.contains_key(&b.vsp_id);
        let pay = r.outcome.payments.get(&b.vsp_id).copied().unwrap_or(0.0);
        let alloc = r.outcome.allocation.get(&b.vsp_id).map_or(0, Vec::len);
        let _ = writeln!(out, "{round},{},{},{pay:.6},{:.6},{},{alloc},{seed}", b.vsp_id, u8::from(won), b.bid, b.volume());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn bid(id: usize, req: &[(&str, usize)], b: f64, unit: f64) -> VSPBid {
        VSPBid {
            vsp_id: id,
            request: req.iter().map(|(c, n)| (c.to_string(), *n)).collect(),
            bid: b,
            unit_price: unit,
        }
    }

    fn supply(counts: &[(&str, usize)]) -> Supply {
        let mut triples = Vec::new();
        for (c, n) in counts {
            for i in 0..*n {
                triples.push(SemanticTriple::new(*c, "on", format!("o{i}")));
            }
        }
        Supply::from_scenes(&[SceneGraph::with_max(triples, 0, 1000).unwrap()])
    }

    #[test]
    fn sole_bidder_pays_reserve() {
        let s = supply(&[("car", 2)]);
        let bids = [bid(0, &[("car", 2)], 1.5, 0.3)];
        let o = run_mechanism(&GreedyCritical::default(), &bids, &s).unwrap();
        assert_eq!(o.winners, vec![0]);
        assert!((o.payments[&0] - 0.6).abs() < 1e-12);
        assert_eq!(o.allocation[&0].len(), 2);
        let empty = run_mechanism(&GreedyCritical::default(), &[], &s).unwrap();
        assert!(empty.winners.is_empty() && empty.payments.is_empty());
    }

    #[test]
    fn disjoint_both_win_and_conflict_goes_to_higher() {
        let s = supply(&[("car", 1), ("tree", 1)]);
        let bids = [bid(0, &[("car", 1)], 1.0, 0.1), bid(1, &[("tree", 1)], 0.5, 0.1)];
        let mut w = determine_winners(&bids, &s, 1.0);
        w.sort();
        assert_eq!(w, vec![0, 1]);
        let rivals = [bid(0, &[("car", 1)], 0.9, 0.1), bid(1, &[("car", 1)], 0.7, 0.1)];
        assert_eq!(determine_winners(&rivals, &s, 1.0), vec![0]);
    }

    #[test]
    fn two_bidder_single_slot_price() {
        // Closed form: the winner pays max(loser's score * own volume / own relatedness, reserve).
        let s = supply(&[("car", 1)]);
        let bids = [bid(0, &[("car", 1)], 0.9, 0.1), bid(1, &[("car", 1)], 0.7, 0.2)];
        let p = price_winners(&[0], &bids, &s, 1.0);
        assert!((p[&0] - 0.7).abs() < 1e-12);
        let high_reserve = [bid(0, &[("car", 1)], 0.9, 0.8), bid(1, &[("car", 1)], 0.7, 0.2)];
        assert!((price_winners(&[0], &high_reserve, &s, 1.0)[&0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn relatedness_penalizes_missing_categories() {
        let s = supply(&[("car", 3)]);
        let b = bid(0, &[("car", 1), ("tree", 1)], 1.0, 0.1);
        assert_eq!(s.relatedness(&b), 0.5);
        assert!((score(&b, &s, 1.0) - 0.25).abs() < 1e-12);
        // It cannot be filled, so it never wins.
        assert!(determine_winners(&[b], &s, 1.0).is_empty());
    }

    /// Exhaustive welfare-maximizing winner set.
    fn brute_force(bids: &[VSPBid], s: &Supply) -> f64 {
        let mut best = 0.0f64;
        for mask in 0u32..(1 << bids.len()) {
            let mut need: BTreeMap<&str, usize> = BTreeMap::new();
            let mut welfare = 0.0;
            for (i, b) in bids.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    if b.bid < b.reserve() {
                        welfare = f64::NEG_INFINITY;
                    }
                    welfare += b.bid;
                    for (c, n) in &b.request {
                        *need.entry(c.as_str()).or_default() += n;
                    }
                }
            }
            if need.iter().all(|(c, n)| s.count(c) >= *n) {
                best = best.max(welfare);
            }
        }
        best
    }

    #[test]
    fn greedy_against_exhaustive_search() {
        let cats = ["a", "b", "c"];
        let mut matched = 0;
        let trials = 300;
        for seed in 0..trials {
            let mut rng = seeded(seed);
            let s = supply(&[("a", rng.random_range(1..4)), ("b", rng.random_range(1..4)), ("c", rng.random_range(1..4))]);
            let bids: Vec<VSPBid> = (0..6)
                .map(|i| {
                    let k = rng.random_range(1..=2);
                    let req: Vec<(&str, usize)> = sample(&mut rng, 3, k).into_iter().map(|j| (cats[j], rng.random_range(1..=2))).collect();
                    bid(i, &req, rng.random_range(0.1..2.0), rng.random_range(0.05..0.3))
                })
                .collect();
            let w = determine_winners(&bids, &s, 1.0);
            let greedy: f64 = bids.iter().filter(|b| w.contains(&b.vsp_id)).map(|b| b.bid).sum();
            let opt = brute_force(&bids, &s);
            assert!(greedy <= opt + 1e-9);
            if (opt - greedy).abs() < 1e-9 {
                matched += 1;
            }
        }
        // Greedy is a heuristic: it is optimal on most but not all small instances.
        assert!(matched as f64 / trials as f64 > 0.6, "greedy optimal on {matched}/{trials}");
        assert!(matched < trials, "expected at least one documented gap");
    }

    #[test]
    fn round_determinism_and_pool_shrink() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let cfg = AuctionConfig::default();
        let mut p1 = ImagePool::new(100, 7);
        let mut p2 = ImagePool::new(100, 7);
        let r1 = run_round(&mut p1, &cat, &cfg, 42).unwrap();
        let r2 = run_round(&mut p2, &cat, &cfg, 42).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(p1.len(), 80);
        run_round(&mut p1, &cat, &cfg, 43).unwrap();
        run_round(&mut p1, &cat, &cfg, 44).unwrap();
        run_round(&mut p1, &cat, &cfg, 45).unwrap();
        run_round(&mut p1, &cat, &cfg, 46).unwrap();
        assert!(p1.is_empty());
        assert_eq!(run_round(&mut p1, &cat, &cfg, 47), Err(AuctionError::PoolExhausted { available: 0, needed: 20 }));
    }

    #[test]
    fn rejects_invalid_bids() {
        let s = supply(&[("a", 1)]);
        assert!(run_mechanism(&GreedyCritical::default(), &[bid(0, &[], 1.0, 0.1)], &s).is_err());
        assert!(run_mechanism(&GreedyCritical::default(), &[bid(0, &[("a", 1)], 0.0, 0.1)], &s).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_invariants(seed in any::<u64>(), n in 1usize..21) {
            let cat = PredicateCatalog::long_tail(10, 8).unwrap();
            let cfg = AuctionConfig { n_vsps: n, ..AuctionConfig::default() };
            let mut pool = ImagePool::new(20, seed);
            let r = run_round(&mut pool, &cat, &cfg, seed).unwrap();
            let o = &r.outcome;
            let mut seen = std::collections::HashSet::new();
            for items in o.allocation.values() {
                for it in items {
                    prop_assert!(seen.insert((it.uav, it.index)));
                }
            }
            for b in &r.bids {
                match o.payments.get(&b.vsp_id) {
                    Some(p) => {
                        prop_assert!(*p <= b.bid + 1e-12);
                        prop_assert!(*p >= b.reserve() - 1e-12);
                        prop_assert_eq!(o.allocation[&b.vsp_id].len(), b.volume());
                    }
                    None => prop_assert!(!o.allocation.contains_key(&b.vsp_id)),
                }
            }
        }

        #[test]
        fn raising_winning_bid_keeps_it_winning(seed in any::<u64>(), bump in 1.0f64..5.0) {
            let cat = PredicateCatalog::long_tail(10, 8).unwrap();
            let cfg = AuctionConfig { n_vsps: 16, ..AuctionConfig::default() };
            let mut pool = ImagePool::new(20, seed);
            let r = run_round(&mut pool, &cat, &cfg, seed).unwrap();
            let supply = Supply::from_scenes(&r.uav_supplies);
            for w in &r.outcome.winners {
                let mut bids = r.bids.clone();
                bids.iter_mut().find(|b| b.vsp_id == *w).unwrap().bid *= bump;
                prop_assert!(determine_winners(&bids, &supply, 1.0).contains(w));
            }
        }

        #[test]
        fn bidding_the_payment_still_wins(seed in any::<u64>()) {
            let cat = PredicateCatalog::long_tail(10, 8).unwrap();
            let cfg = AuctionConfig { n_vsps: 16, ..AuctionConfig::default() };
            let mut pool = ImagePool::new(20, seed);
            let r = run_round(&mut pool, &cat, &cfg, seed).unwrap();
            let supply = Supply::from_scenes(&r.uav_supplies);
            for (w, p) in &r.outcome.payments {
                let mut bids = r.bids.clone();
                let me = bids.iter_mut().find(|b| b.vsp_id == *w).unwrap();
                // Slightly above the critical value must still win.
                me.bid = p * (1.0 + 1e-9) + 1e-12;
                prop_assert!(determine_winners(&bids, &supply, 1.0).contains(w));
            }
        }
    }
}
