//! TOML experiment configuration with one section per module.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HarnessError, Result};
use crate::auction::AuctionConfig;
use crate::chain::ChainConfig;
use crate::qrl::RLConfig;
use crate::semcom::{ChannelCode, ChannelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Number of VSPs bidding per auction round.
    pub n_vsps: usize,
    /// UAVs capturing images per auction round.
    pub n_uavs: usize,
    /// Object categories in the scene catalog.
    pub target_objects: usize,
    pub relatedness_weight: f64,
    pub unit_price_min: f64,
    pub unit_price_max: f64,
    pub bandwidth_hz: f64,
    pub snr_db: f64,
    /// Total period `H`.
    pub period: usize,
    /// Decision interval `h`.
    pub interval: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_vsps: 12,
            n_uavs: 20,
            target_objects: 10,
            relatedness_weight: 1.0,
            unit_price_min: 0.1,
            unit_price_max: 1.0,
            bandwidth_hz: 1000.0,
            snr_db: 9.0,
            period: 1000,
            interval: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QrlSection {
    pub gamma: f64,
    pub learning_rate: f64,
    pub grover_scale: f64,
    pub max_grover_iters: usize,
    pub exploration_weight: f64,
    pub extension_weight: f64,
    pub episodes: usize,
    /// Episode at which the environment switches in the adaptation run.
    pub switch_episode: usize,
    /// Blend toward the shared model on a switch.
    pub blend: f64,
    /// Peers trained natively in each environment to form the shared model.
    pub peers: usize,
    pub drift: f64,
}

impl Default for QrlSection {
    fn default() -> Self {
        let d = RLConfig::default();
        Self {
            gamma: d.gamma,
            learning_rate: d.learning_rate,
            grover_scale: d.grover_scale,
            max_grover_iters: d.max_grover_iters,
            exploration_weight: d.exploration_weight,
            extension_weight: d.extension_weight,
            episodes: d.episodes,
            switch_episode: 1000,
            blend: 1.0,
            peers: 3,
            drift: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffloadSection {
    pub n_uavs: usize,
    pub base_stations: usize,
    /// Tasks a station accepts per decision step.
    pub station_capacity: usize,
    pub outage_prob: f64,
    /// Aggregation rounds; models are shared at the end of each.
    pub periods: usize,
    pub epochs_per_period: usize,
    /// Blend toward the aggregate at each sharing round.
    pub share_blend: f64,
    /// SNR loss toward a station whose node the UAV does not currently cover.
    pub hop_penalty_db: f64,
}

impl Default for OffloadSection {
    fn default() -> Self {
        Self {
            n_uavs: 9,
            base_stations: 4,
            station_capacity: 3,
            outage_prob: 0.1,
            periods: 10,
            epochs_per_period: 5,
            share_blend: 0.5,
            hop_penalty_db: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemcomSection {
    /// Code for the SNR sweeps (BLEU and mR@k curves).
    pub sweep_code: String,
    /// Code for the bit-cost comparison and image runs.
    pub code: String,
    pub channels: Vec<String>,
    pub rician_k: f64,
    pub snr_min: f64,
    pub snr_max: f64,
    pub snr_step: f64,
    /// Sentences sent per sweep point.
    pub sentences: usize,
    pub image_size: usize,
    /// Optional corpus file, one sentence per line; a built-in corpus otherwise.
    pub corpus: Option<String>,
}

impl Default for SemcomSection {
    fn default() -> Self {
        Self {
            sweep_code: "none".into(),
            code: "hamming74".into(),
            channels: ChannelKind::ALL.iter().map(|k| k.as_str().to_string()).collect(),
            rician_k: 3.0,
            snr_min: 0.0,
            snr_max: 18.0,
            snr_step: 2.0,
            sentences: 50,
            image_size: 64,
            corpus: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemanticsSection {
    pub n_predicates: usize,
    pub scene_min: usize,
    pub scene_max: usize,
    /// Scenes evaluated per sweep point.
    pub scenes: usize,
    pub detector_error: f64,
    pub list_length: usize,
    /// Triples in the bit-cost comparison scene.
    pub compare_triples: usize,
}

impl Default for SemanticsSection {
    fn default() -> Self {
        Self { n_predicates: 20, scene_min: 5, scene_max: 12, scenes: 20, detector_error: 0.2, list_length: 100, compare_triples: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub duration_s: f64,
    pub pbft_per_pow: usize,
    pub tx_per_block: u64,
    pub bandwidth_budget: f64,
    pub compute_budget: f64,
    pub message_cost: f64,
    pub message_spread: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        let d = ChainConfig::default();
        Self {
            k_min: 5,
            k_max: 50,
            k_step: 5,
            duration_s: 600.0,
            pbft_per_pow: d.pbft_per_pow,
            tx_per_block: d.tx_per_block,
            bandwidth_budget: d.bandwidth_budget,
            compute_budget: d.compute_budget,
            message_cost: d.c_msg,
            message_spread: d.message_spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuctionSection {
    pub rounds: usize,
    /// Images available before the first round; each round consumes `n_uavs`.
    pub pool_size: usize,
    pub max_categories_per_bid: usize,
    pub max_count_per_category: usize,
    pub scene_min: usize,
    pub scene_max: usize,
}

impl Default for AuctionSection {
    fn default() -> Self {
        Self { rounds: 5, pool_size: 100, max_categories_per_bid: 3, max_count_per_category: 3, scene_min: 3, scene_max: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub replicates: usize,
    pub scenario: ScenarioConfig,
    pub qrl: QrlSection,
    pub offload: OffloadSection,
    pub semcom: SemcomSection,
    pub semantics: SemanticsSection,
    pub chain: ChainSection,
    pub auction: AuctionSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            replicates: 10,
            scenario: ScenarioConfig::default(),
            qrl: QrlSection::default(),
            offload: OffloadSection::default(),
            semcom: SemcomSection::default(),
            semantics: SemanticsSection::default(),
            chain: ChainSection::default(),
            auction: AuctionSection::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Position of `key = ...` inside `[section]`, for validation messages.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = "";
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            continue;
        }
        if current == section && line.split('=').next().is_some_and(|k| k.trim() == key) {
            return Some(i + 1);
        }
    }
    None
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            HarnessError::Validation { line, msg: e.message().to_string() }
        })?;
        cfg.validate().map_err(|(section, key, msg)| HarnessError::Validation { line: key_line(text, section, key), msg: format!("{section}.{key}: {msg}") })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| HarnessError::io(path, e))
    }

    /// Checks every field; errors name the offending `(section, key)`.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        fn need(ok: bool, section: &'static str, key: &'static str, msg: &str) -> std::result::Result<(), (&'static str, &'static str, String)> {
            if ok { Ok(()) } else { Err((section, key, msg.to_string())) }
        }
        let s = &self.scenario;
        need(self.replicates >= 1, "", "replicates", "must be at least 1")?;
        need(s.n_vsps >= 1, "scenario", "n_vsps", "must be at least 1")?;
        need(s.n_uavs >= 1, "scenario", "n_uavs", "must be at least 1")?;
        need(s.target_objects >= 1, "scenario", "target_objects", "must be at least 1")?;
        need(s.relatedness_weight.is_finite() && s.relatedness_weight >= 0.0, "scenario", "relatedness_weight", "must be nonnegative")?;
        need(s.unit_price_min > 0.0 && s.unit_price_min <= s.unit_price_max && s.unit_price_max.is_finite(), "scenario", "unit_price_min", "need 0 < min <= max")?;
        need(s.bandwidth_hz.is_finite() && s.bandwidth_hz > 0.0, "scenario", "bandwidth_hz", "must be positive")?;
        need(!s.snr_db.is_nan() && s.snr_db != f64::NEG_INFINITY, "scenario", "snr_db", "must be a number or +inf")?;
        need(s.interval >= 1 && s.period >= s.interval, "scenario", "interval", "need 1 <= interval <= period")?;

        let q = &self.qrl;
        self.rl_config().validate().map_err(|e| ("qrl", "gamma", e.to_string()))?;
        need(q.episodes >= 1, "qrl", "episodes", "must be at least 1")?;
        need(q.switch_episode >= 1, "qrl", "switch_episode", "must be at least 1")?;
        need((0.0..=1.0).contains(&q.blend), "qrl", "blend", "must be in [0, 1]")?;
        need(q.peers >= 1, "qrl", "peers", "must be at least 1")?;
        need(q.drift.is_finite() && q.drift >= 0.0, "qrl", "drift", "must be nonnegative")?;

        let o = &self.offload;
        need(o.n_uavs >= 1, "offload", "n_uavs", "must be at least 1")?;
        need((1..=64).contains(&o.base_stations), "offload", "base_stations", "must be in 1..=64")?;
        need((0.0..=1.0).contains(&o.outage_prob), "offload", "outage_prob", "must be in [0, 1]")?;
        need(o.periods >= 1, "offload", "periods", "must be at least 1")?;
        need(o.epochs_per_period >= 1, "offload", "epochs_per_period", "must be at least 1")?;
        need((0.0..=1.0).contains(&o.share_blend), "offload", "share_blend", "must be in [0, 1]")?;
        need(o.hop_penalty_db.is_finite() && o.hop_penalty_db >= 0.0, "offload", "hop_penalty_db", "must be nonnegative")?;

        let m = &self.semcom;
        need(m.sweep_code.parse::<ChannelCode>().is_ok(), "semcom", "sweep_code", "unknown channel code")?;
        need(m.code.parse::<ChannelCode>().is_ok(), "semcom", "code", "unknown channel code")?;
        need(!m.channels.is_empty() && m.channels.iter().all(|c| c.parse::<ChannelKind>().is_ok()), "semcom", "channels", "need known channel kinds")?;
        need(m.rician_k.is_finite() && m.rician_k >= 0.0, "semcom", "rician_k", "must be nonnegative")?;
        need(m.snr_step > 0.0 && m.snr_min <= m.snr_max && m.snr_max.is_finite(), "semcom", "snr_step", "need step > 0 and min <= max")?;
        need(m.sentences >= 1, "semcom", "sentences", "must be at least 1")?;
        need(m.image_size >= 8, "semcom", "image_size", "must be at least 8")?;

        let t = &self.semantics;
        need(t.n_predicates >= 1, "semantics", "n_predicates", "must be at least 1")?;
        need(t.scene_min >= 1 && t.scene_min <= t.scene_max && t.scene_max <= crate::semantics::DEFAULT_MAX_TRIPLES, "semantics", "scene_max", "need 1 <= scene_min <= scene_max <= 16")?;
        need(t.scenes >= 1, "semantics", "scenes", "must be at least 1")?;
        need((0.0..=1.0).contains(&t.detector_error), "semantics", "detector_error", "must be in [0, 1]")?;
        need(t.list_length >= t.scene_max, "semantics", "list_length", "must cover the largest scene")?;
        need((1..=crate::semantics::DEFAULT_MAX_TRIPLES).contains(&t.compare_triples), "semantics", "compare_triples", "must be in 1..=16")?;

        let c = &self.chain;
        need(c.k_min >= 4 && c.k_min <= c.k_max && c.k_step >= 1, "chain", "k_min", "need 4 <= k_min <= k_max and k_step >= 1")?;
        self.chain_config(0).validate().map_err(|e| ("chain", "bandwidth_budget", e.to_string()))?;
        need(c.duration_s.is_finite() && c.duration_s > 0.0, "chain", "duration_s", "must be positive")?;

        let a = &self.auction;
        need(a.rounds >= 1, "auction", "rounds", "must be at least 1")?;
        need(a.pool_size >= a.rounds * s.n_uavs, "auction", "pool_size", "must hold rounds * scenario.n_uavs images")?;
        self.auction_config().validate().map_err(|e| ("auction", "max_categories_per_bid", e.to_string()))?;
        need(a.scene_min >= 1 && a.scene_min <= a.scene_max && a.scene_max <= crate::semantics::DEFAULT_MAX_TRIPLES, "auction", "scene_max", "need 1 <= scene_min <= scene_max <= 16")?;
        Ok(())
    }

    pub fn steps_per_episode(&self) -> usize {
        self.scenario.period / self.scenario.interval
    }

    pub fn rl_config(&self) -> RLConfig {
        let q = &self.qrl;
        RLConfig {
            gamma: q.gamma,
            learning_rate: q.learning_rate,
            grover_scale: q.grover_scale,
            max_grover_iters: q.max_grover_iters,
            exploration_weight: q.exploration_weight,
            extension_weight: q.extension_weight,
            episodes: q.episodes,
            steps_per_episode: self.steps_per_episode().max(1),
            initial_value: None,
        }
    }

    pub fn chain_config(&self, profile_seed: u64) -> ChainConfig {
        let c = &self.chain;
        ChainConfig {
            pbft_per_pow: c.pbft_per_pow,
            tx_per_block: c.tx_per_block,
            bandwidth_budget: c.bandwidth_budget,
            compute_budget: c.compute_budget,
            c_msg: c.message_cost,
            message_spread: c.message_spread,
            profile_seed,
            ..ChainConfig::default()
        }
    }

    pub fn auction_config(&self) -> AuctionConfig {
        let (s, a) = (&self.scenario, &self.auction);
        AuctionConfig {
            n_vsps: s.n_vsps,
            n_uavs: s.n_uavs,
            relatedness_weight: s.relatedness_weight,
            unit_price_range: (s.unit_price_min, s.unit_price_max),
            value_range: (s.unit_price_min, s.unit_price_max),
            max_categories_per_bid: a.max_categories_per_bid,
            max_count_per_category: a.max_count_per_category,
            scene_size: (a.scene_min, a.scene_max),
        }
    }

    pub fn sweep_code(&self) -> ChannelCode {
        self.semcom.sweep_code.parse().expect("validated")
    }

    pub fn code(&self) -> ChannelCode {
        self.semcom.code.parse().expect("validated")
    }

    pub fn channels(&self) -> Vec<ChannelKind> {
        self.semcom.channels.iter().map(|c| c.parse().expect("validated")).collect()
    }

    /// SNR points `min, min + step, ...` up to `max` inclusive.
    pub fn snr_points(&self) -> Vec<f64> {
        let m = &self.semcom;
        let n = ((m.snr_max - m.snr_min) / m.snr_step + 1e-9).floor() as usize;
        (0..=n).map(|i| m.snr_min + i as f64 * m.snr_step).collect()
    }

    pub fn k_points(&self) -> Vec<usize> {
        let c = &self.chain;
        (c.k_min..=c.k_max).step_by(c.k_step).collect()
    }

    /// Replicate seeds derived from the master seed.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replicates as u64).map(|r| crate::rng::derive_seed(self.master_seed, &[r])).collect()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    ExperimentConfig::from_toml_str(&text)
}
