//! Figure and table runners.
//!
//! Every runner fans its (parameter point, seed) cells out over rayon, each
//! cell with its own seed derived from the replicate seed, and joins the rows
//! back in cell order. Numbers are written with six fixed decimals so equal
//! inputs give byte-identical CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::offload::{run_offload_sim, AgentKind};
use super::svg::{Chart, Series};
use super::topology::Topology;
use super::{HarnessError, Result};
use crate::auction::{outcome_rows, run_round, ImagePool, CSV_HEADER};
use crate::chain::{simulate_throughput, AllocationKind, AllocationStrategy};
use crate::qrl::{adapt, aggregate_models, baseline_epsilon_greedy, convergence_episode, train_agent, AgentModel, EnvSpec, EpisodeRecord};
use crate::rng::derive_seed;
use crate::semantics::{generate_scene, mean_recall_at_k, recall_at_k, simulate_detector, PredicateCatalog, RankedPredictions, SemanticTriple};
use crate::semcom::pipeline::Link;
use crate::semcom::metrics::mse;
use crate::semcom::text::{load_corpus, DEFAULT_MIN_COUNT};
use crate::semcom::{bleu, build_vocabulary, mssim, preprocess_corpus, psnr, ChannelKind, ChannelSpec, ImagePayload, Vocabulary};
use crate::stats::{mean, std_dev};

/// Sentences used when the config names no corpus file.
pub const BUILTIN_CORPUS: &str = include_str!("../../../../data/corpus/uav_sentences.txt");

/// PSNR reported for an error-free frame.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Episodes in the trailing window used for final rewards and convergence.
pub const FINAL_WINDOW: usize = 100;

pub const RECALL_KS: [usize; 3] = [20, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Fig6,
    Fig7,
    Fig8Snr,
    Fig9,
    Table3,
    Table5,
    Table6,
    Fig10,
    Auction,
    Offload,
}

pub const EXPERIMENTS: [&str; 10] = ["fig6", "fig7", "fig8_snr", "fig9", "table3", "table5", "table6", "fig10", "auction", "offload"];

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Self::Fig6,
        Self::Fig7,
        Self::Fig8Snr,
        Self::Fig9,
        Self::Table3,
        Self::Table5,
        Self::Table6,
        Self::Fig10,
        Self::Auction,
        Self::Offload,
    ];

    pub fn as_str(self) -> &'static str {
        EXPERIMENTS[Self::ALL.iter().position(|e| *e == self).expect("listed")]
    }

    pub fn csv_header(self) -> &'static str {
        match self {
            Self::Fig6 | Self::Fig7 => "episode,seed,agent,reward,objective",
            Self::Fig8Snr | Self::Fig9 | Self::Table5 => "channel,snr_db,seed,metric,value",
            Self::Table3 => "factor,level,seed,metric,value",
            Self::Table6 => "mode,seed,metric,value",
            Self::Fig10 => "K,strategy,seed,tx_per_sec",
            Self::Auction => CSV_HEADER,
            Self::Offload => "base_stations,seed,agent,metric,value",
        }
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        EXPERIMENTS
            .iter()
            .position(|n| *n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| HarnessError::Usage(format!("unknown experiment {s:?} (expected one of {})", EXPERIMENTS.join(", "))))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-run choices that are not part of the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Agent for the offloading sweep.
    pub agent: AgentKind,
    /// Topology for the offloading sweep; the bundled table otherwise.
    pub topology: Option<Topology>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { agent: AgentKind::Quantum, topology: None }
    }
}

/// Mean and sample standard deviation of one metric over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub group: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub code_version: String,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub experiment: Experiment,
    /// Full CSV text including the header line.
    pub csv: String,
    pub aggregates: Vec<Aggregate>,
    /// `(file stem, chart)` pairs.
    pub charts: Vec<(String, Chart)>,
    pub provenance: Provenance,
}

impl RunSummary {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("group,metric,mean,std,n,master_seed,config_hash\n");
        for a in &self.aggregates {
            let _ = writeln!(out, "{},{},{},{},{},{},{}", a.group, a.metric, num(a.mean), num(a.std), a.n, self.provenance.master_seed, self.provenance.config_hash);
        }
        out
    }

    pub fn aggregate(&self, group: &str, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.group == group && a.metric == metric)
    }
}

/// Fixed six-decimal formatting; infinities are spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Collects `(group, metric) -> values` in a deterministic order.
#[derive(Default)]
struct Pool(BTreeMap<(String, String), Vec<f64>>);

impl Pool {
    fn push(&mut self, group: impl Into<String>, metric: impl Into<String>, v: f64) {
        self.0.entry((group.into(), metric.into())).or_default().push(v);
    }

    fn aggregates(&self) -> Vec<Aggregate> {
        self.0
            .iter()
            .map(|((g, m), xs)| Aggregate { group: g.clone(), metric: m.clone(), mean: mean(xs), std: if xs.len() > 1 { std_dev(xs) } else { 0.0 }, n: xs.len() })
            .collect()
    }

    fn mean_of(&self, group: &str, metric: &str) -> Option<f64> {
        self.0.get(&(group.to_string(), metric.to_string())).map(|xs| mean(xs))
    }
}

/// Runs one named experiment. The config is validated first.
pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate().map_err(|(section, key, msg)| HarnessError::validation(format!("{section}.{key}: {msg}")))?;
    let seeds = cfg.seeds();
    let (csv_body, pool, charts, mut notes) = match exp {
        Experiment::Fig6 => fig6(cfg, &seeds)?,
        Experiment::Fig7 => fig7(cfg, &seeds)?,
        Experiment::Fig8Snr => fig8(cfg, &seeds)?,
        Experiment::Fig9 => fig9(cfg, &seeds, &cfg.snr_points(), true)?,
        Experiment::Table5 => fig9(cfg, &seeds, &[cfg.scenario.snr_db], false)?,
        Experiment::Table3 => table3(cfg, &seeds)?,
        Experiment::Table6 => table6(cfg, &seeds)?,
        Experiment::Fig10 => fig10(cfg, &seeds)?,
        Experiment::Auction => auction(cfg, &seeds)?,
        Experiment::Offload => offload(cfg, &seeds, opts)?,
    };
    notes.push("proof-of-communication quorum is floor(K/2)+1, a strict majority for odd and even K alike".into());
    Ok(RunSummary {
        experiment: exp,
        csv: format!("{}\n{csv_body}", exp.csv_header()),
        aggregates: pool.aggregates(),
        charts,
        provenance: Provenance { config_hash: cfg.hash(), master_seed: cfg.master_seed, seeds, code_version: env!("CARGO_PKG_VERSION").into(), notes },
    })
}

type Parts = (String, Pool, Vec<(String, Chart)>, Vec<String>);

fn rt<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::runtime(e)
}

fn chart(title: &str, x: &str, y: &str, series: Vec<Series>) -> Chart {
    Chart { title: title.into(), x_label: x.into(), y_label: y.into(), series }
}

/// Per-episode mean over seeds, thinned to at most about 200 points.
fn mean_curve(name: &str, curves: &[&[EpisodeRecord]], offset: usize) -> Series {
    let len = curves.iter().map(|c| c.len()).min().unwrap_or(0);
    let step = (len / 200).max(1);
    let points = (0..len).step_by(step).map(|e| ((e + offset) as f64, curves.iter().map(|c| c[e].reward).sum::<f64>() / curves.len() as f64)).collect();
    Series { name: name.into(), points }
}

fn curve_rows(out: &mut String, records: &[EpisodeRecord], seed: u64, agent: &str, offset: usize) {
    for (e, r) in records.iter().enumerate() {
        let _ = writeln!(out, "{},{seed},{agent},{},{}", e + offset, num(r.reward), num(r.objective));
    }
}

fn rewards(records: &[EpisodeRecord]) -> Vec<f64> {
    records.iter().map(|r| r.reward).collect()
}

/// Mean reward over the last [`FINAL_WINDOW`] episodes.
pub fn final_reward(records: &[EpisodeRecord]) -> f64 {
    let w = FINAL_WINDOW.min(records.len()).max(1);
    records[records.len().saturating_sub(w)..].iter().map(|r| r.reward).sum::<f64>() / w as f64
}

/// Mean reward over `records[from..to]`, clamped to the slice.
pub fn window_reward(records: &[EpisodeRecord], from: usize, to: usize) -> f64 {
    let to = to.min(records.len());
    let from = from.min(to.saturating_sub(1));
    mean(&records[from..to].iter().map(|r| r.reward).collect::<Vec<_>>())
}

fn env_with_drift(shift: usize, drift: f64) -> EnvSpec {
    let mut env = EnvSpec::switch_env(shift);
    env.drift = drift;
    env
}

// ---------------------------------------------------------------- fig6

#[derive(Debug, Clone, PartialEq)]
pub struct LearningRun {
    pub seed: u64,
    pub quantum: Vec<EpisodeRecord>,
    pub baseline: Vec<EpisodeRecord>,
}

impl LearningRun {
    pub fn convergence(&self) -> (Option<usize>, Option<usize>) {
        (convergence_episode(&rewards(&self.quantum), FINAL_WINDOW, 0.95), convergence_episode(&rewards(&self.baseline), FINAL_WINDOW, 0.95))
    }
}

/// Quantum agent and epsilon-greedy baseline on the default four-station
/// environment, one pair per seed.
pub fn fig6_runs(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<LearningRun>> {
    let env = env_with_drift(0, cfg.qrl.drift);
    let rl = cfg.rl_config();
    seeds
        .par_iter()
        .map(|&seed| {
            let mut agent = AgentModel::new(env.n_actions(), rl.clone()).map_err(rt)?;
            let quantum = train_agent(&mut agent, &env, rl.episodes, None, derive_seed(seed, &[6, 0])).map_err(rt)?;
            let (_, baseline) = baseline_epsilon_greedy(&env, &rl, derive_seed(seed, &[6, 1]), None).map_err(rt)?;
            Ok(LearningRun { seed, quantum, baseline })
        })
        .collect()
}

fn fig6(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let runs = fig6_runs(cfg, seeds)?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for run in &runs {
        curve_rows(&mut csv, &run.quantum, run.seed, "quantum", 0);
        curve_rows(&mut csv, &run.baseline, run.seed, "egreedy", 0);
        let (cq, cb) = run.convergence();
        let never = cfg.qrl.episodes as f64;
        pool.push("quantum", "convergence_episode", cq.map_or(never, |c| c as f64));
        pool.push("egreedy", "convergence_episode", cb.map_or(never, |c| c as f64));
        pool.push("quantum", "final_reward", final_reward(&run.quantum));
        pool.push("egreedy", "final_reward", final_reward(&run.baseline));
    }
    let q: Vec<&[EpisodeRecord]> = runs.iter().map(|r| r.quantum.as_slice()).collect();
    let b: Vec<&[EpisodeRecord]> = runs.iter().map(|r| r.baseline.as_slice()).collect();
    let charts = vec![("fig6".into(), chart("Learning curves", "episode", "mean reward", vec![mean_curve("quantum", &q, 0), mean_curve("egreedy", &b, 0)]))];
    Ok((csv, pool, charts, vec!["convergence is the first episode whose trailing 100-episode mean reaches 95% of the final 100-episode mean".into()]))
}

// ---------------------------------------------------------------- fig7

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRun {
    pub seed: u64,
    pub switch_episode: usize,
    /// Env1, then Env2 and Env3, each phase starting from the shared model.
    pub adaptive: Vec<EpisodeRecord>,
    /// Same environment sequence with no sharing.
    pub independent: Vec<EpisodeRecord>,
    /// Fresh agents trained natively on Env2 and Env3 for one phase.
    pub native: [Vec<EpisodeRecord>; 2],
}

impl AdaptationRun {
    /// Mean reward of the adaptive and native Env2 agents over post-switch
    /// episodes `from..to` (0-based, half-open).
    pub fn post_switch(&self, from: usize, to: usize) -> (f64, f64) {
        let s = self.switch_episode;
        (window_reward(&self.adaptive, s + from, s + to.min(s)), window_reward(&self.native[0], from, to))
    }
}

pub fn fig7_run(cfg: &ExperimentConfig, seed: u64) -> Result<AdaptationRun> {
    let q = &cfg.qrl;
    let rl = cfg.rl_config();
    let envs: Vec<EnvSpec> = (0..3).map(|i| env_with_drift(i, q.drift)).collect();
    let n = envs[0].n_actions();
    let shared: Vec<AgentModel> = (1..3)
        .map(|e| {
            let peers = (0..q.peers)
                .map(|p| {
                    let mut a = AgentModel::new(n, rl.clone())?;
                    train_agent(&mut a, &envs[e], q.episodes, None, derive_seed(seed, &[7, 0, e as u64, p as u64]))?;
                    Ok(a)
                })
                .collect::<crate::qrl::Result<Vec<_>>>()?;
            aggregate_models(&peers)
        })
        .collect::<crate::qrl::Result<_>>()
        .map_err(rt)?;
    let s = q.switch_episode;
    let mut adaptive_agent = AgentModel::new(n, rl.clone()).map_err(rt)?;
    let mut independent_agent = adaptive_agent.clone();
    let mut adaptive = train_agent(&mut adaptive_agent, &envs[0], s, None, derive_seed(seed, &[7, 1, 0])).map_err(rt)?;
    let mut independent = train_agent(&mut independent_agent, &envs[0], s, None, derive_seed(seed, &[7, 2, 0])).map_err(rt)?;
    for e in 1..3 {
        let sh = &shared[e - 1];
        adaptive_agent = adapt(&adaptive_agent, &envs[e], sh, q.blend).map_err(rt)?;
        adaptive.extend(train_agent(&mut adaptive_agent, &envs[e], s, Some(sh), derive_seed(seed, &[7, 1, e as u64])).map_err(rt)?);
        independent.extend(train_agent(&mut independent_agent, &envs[e], s, None, derive_seed(seed, &[7, 2, e as u64])).map_err(rt)?);
    }
    let native = [1usize, 2].map(|e| {
        let mut a = AgentModel::new(n, rl.clone()).map_err(rt)?;
        train_agent(&mut a, &envs[e], s, None, derive_seed(seed, &[7, 3, e as u64])).map_err(rt)
    });
    let [n2, n3] = native;
    Ok(AdaptationRun { seed, switch_episode: s, adaptive, independent, native: [n2?, n3?] })
}

fn fig7(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let runs: Vec<AdaptationRun> = seeds.par_iter().map(|s| fig7_run(cfg, *s)).collect::<Result<_>>()?;
    let s = cfg.qrl.switch_episode;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for run in &runs {
        curve_rows(&mut csv, &run.adaptive, run.seed, "adaptive", 0);
        curve_rows(&mut csv, &run.independent, run.seed, "independent", 0);
        curve_rows(&mut csv, &run.native[0], run.seed, "native_env2", s);
        curve_rows(&mut csv, &run.native[1], run.seed, "native_env3", 2 * s);
        let (a, n) = run.post_switch(200, 400);
        pool.push("adaptive", "env2_post_switch_201_400", a);
        pool.push("native_env2", "env2_post_switch_201_400", n);
        pool.push("independent", "env2_post_switch_201_400", window_reward(&run.independent, s + 200, s + 400.min(s)));
    }
    let series = vec![
        mean_curve("adaptive", &runs.iter().map(|r| r.adaptive.as_slice()).collect::<Vec<_>>(), 0),
        mean_curve("independent", &runs.iter().map(|r| r.independent.as_slice()).collect::<Vec<_>>(), 0),
        mean_curve("native Env2", &runs.iter().map(|r| r.native[0].as_slice()).collect::<Vec<_>>(), s),
        mean_curve("native Env3", &runs.iter().map(|r| r.native[1].as_slice()).collect::<Vec<_>>(), 2 * s),
    ];
    let charts = vec![("fig7".into(), chart("Adaptation across environment switches", "episode", "mean reward", series))];
    Ok((csv, pool, charts, vec![format!("environments switch every {s} episodes; Env2 and Env3 rotate the station resources of Env1")]))
}

// ---------------------------------------------------------------- semcom sweeps

fn channel_spec(cfg: &ExperimentConfig, kind: ChannelKind, snr_db: f64) -> ChannelSpec {
    ChannelSpec { kind, snr_db, rician_k: cfg.semcom.rician_k }
}

/// The corpus the text sweeps use, preprocessed.
pub fn corpus(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let raw = match &cfg.semcom.corpus {
        Some(p) => {
            let path = std::path::Path::new(p);
            load_corpus(path).map_err(|e| HarnessError::io(path, e))?
        }
        None => BUILTIN_CORPUS.lines().map(str::to_string).collect(),
    };
    let sentences = preprocess_corpus(&raw);
    if sentences.is_empty() {
        return Err(HarnessError::validation("corpus has no usable sentences"));
    }
    Ok(sentences)
}

/// Mean BLEU-1..4 over `sentences` sent one per frame. Channel noise seeds
/// depend only on the replicate seed and the sentence index.
pub fn bleu_point(cfg: &ExperimentConfig, sentences: &[String], vocab: &Vocabulary, kind: ChannelKind, snr_db: f64, seed: u64) -> Result<[f64; 4]> {
    let link = Link::new(cfg.sweep_code(), channel_spec(cfg, kind, snr_db));
    let mut sums = [0.0; 4];
    let n = cfg.semcom.sentences;
    for i in 0..n {
        let pick = derive_seed(seed, &[8, 0, i as u64]) as usize % sentences.len();
        let reference: Vec<&str> = sentences[pick].split_whitespace().collect();
        let d = link.send_tokens(&reference, vocab, derive_seed(seed, &[8, 1, i as u64])).map_err(rt)?;
        for (g, s) in sums.iter_mut().enumerate() {
            let w = vec![1.0 / (g + 1) as f64; g + 1];
            *s += bleu(&d.tokens, &reference, &w).map_err(rt)?;
        }
    }
    Ok(sums.map(|s| s / n as f64))
}

fn fig8(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let sentences = corpus(cfg)?;
    let vocab = build_vocabulary(&sentences, DEFAULT_MIN_COUNT).map_err(rt)?;
    let cells: Vec<(ChannelKind, f64, u64)> = cfg.channels().into_iter().flat_map(|c| cfg.snr_points().into_iter().flat_map(move |s| seeds.iter().map(move |seed| (c, s, *seed)))).collect();
    let results: Vec<[f64; 4]> = cells.par_iter().map(|(c, s, seed)| bleu_point(cfg, &sentences, &vocab, *c, *s, *seed)).collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for ((c, s, seed), b) in cells.iter().zip(&results) {
        for (g, v) in b.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{seed},bleu{},{}", c.as_str(), num(*s), g + 1, num(*v));
            pool.push(format!("{}@{}", c.as_str(), num(*s)), format!("bleu{}", g + 1), *v);
        }
    }
    let charts = cfg
        .channels()
        .into_iter()
        .map(|c| {
            let series = (1..=4)
                .map(|g| Series {
                    name: format!("BLEU-{g}"),
                    points: cfg.snr_points().iter().map(|s| (*s, pool.mean_of(&format!("{}@{}", c.as_str(), num(*s)), &format!("bleu{g}")).unwrap_or(0.0))).collect(),
                })
                .collect();
            (format!("fig8_snr_{}", c.as_str()), chart(&format!("BLEU vs SNR ({})", c.as_str()), "SNR (dB)", "BLEU", series))
        })
        .collect();
    let notes = vec![
        "the x axis is channel SNR; it stands in for training progress because the codec is a fixed vocabulary map, not a learned model".into(),
        format!("{} sentences from a corpus of {} with a vocabulary of {} tokens, code {}", cfg.semcom.sentences, sentences.len(), vocab.len(), cfg.sweep_code().as_str()),
    ];
    Ok((csv, pool, charts, notes))
}

/// The catalog used by the scene experiments.
pub fn scene_catalog(cfg: &ExperimentConfig) -> Result<PredicateCatalog> {
    PredicateCatalog::long_tail(cfg.scenario.target_objects, cfg.semantics.n_predicates).map_err(rt)
}

/// Recall of received detector output at one channel point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallPoint {
    /// mR@{20,50,100}, averaged over scenes.
    pub mean_recall: [f64; 3],
    /// R@{20,50,100}, averaged over scenes.
    pub recall: [f64; 3],
    /// Share of triple frames that passed the CRC.
    pub delivered: f64,
}

/// Sends each detector triple as its own frame with the sweep code and
/// scores what arrives intact. Scenes, detector output and channel noise
/// depend only on `seed`, never on the SNR.
pub fn recall_point(cfg: &ExperimentConfig, catalog: &PredicateCatalog, vocab: &Vocabulary, kind: ChannelKind, snr_db: f64, seed: u64) -> Result<RecallPoint> {
    let t = &cfg.semantics;
    let link = Link::new(cfg.sweep_code(), channel_spec(cfg, kind, snr_db));
    let (mut mr, mut r) = ([0.0; 3], [0.0; 3]);
    let (mut ok, mut sent) = (0usize, 0usize);
    for sc in 0..t.scenes {
        let gt = generate_scene(catalog, derive_seed(seed, &[9, 0, sc as u64]), (t.scene_min, t.scene_max)).map_err(rt)?;
        let preds = simulate_detector(&gt, catalog, t.detector_error, t.list_length, derive_seed(seed, &[9, 1, sc as u64])).map_err(rt)?;
        let mut received: Vec<SemanticTriple> = Vec::with_capacity(preds.len());
        for (i, triple) in preds.triples().enumerate() {
            let (rx, d) = link.send_triples(std::slice::from_ref(triple), vocab, derive_seed(seed, &[9, 2, sc as u64, i as u64])).map_err(rt)?;
            sent += 1;
            if d.crc_ok && rx.len() == 1 {
                ok += 1;
                received.push(rx.into_iter().next().expect("one triple"));
            }
        }
        let ranked = RankedPredictions::from_ranked(received);
        for (j, k) in RECALL_KS.iter().enumerate() {
            mr[j] += mean_recall_at_k(&ranked, &gt, *k, catalog).map_err(rt)?;
            r[j] += recall_at_k(&ranked, &gt, *k).map_err(rt)?;
        }
    }
    let n = t.scenes as f64;
    Ok(RecallPoint { mean_recall: mr.map(|x| x / n), recall: r.map(|x| x / n), delivered: ok as f64 / sent.max(1) as f64 })
}

fn fig9(cfg: &ExperimentConfig, seeds: &[u64], snrs: &[f64], chart_it: bool) -> Result<Parts> {
    let catalog = scene_catalog(cfg)?;
    let vocab = Vocabulary::from_labels(&catalog.labels());
    let cells: Vec<(ChannelKind, f64, u64)> = cfg.channels().into_iter().flat_map(|c| snrs.iter().flat_map(move |s| seeds.iter().map(move |seed| (c, *s, *seed)))).collect();
    let results: Vec<RecallPoint> = cells.par_iter().map(|(c, s, seed)| recall_point(cfg, &catalog, &vocab, *c, *s, *seed)).collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for ((c, s, seed), p) in cells.iter().zip(&results) {
        let group = format!("{}@{}", c.as_str(), num(*s));
        let mut emit = |metric: String, v: f64| {
            let _ = writeln!(csv, "{},{},{seed},{metric},{}", c.as_str(), num(*s), num(v));
            pool.push(group.clone(), metric, v);
        };
        for (j, k) in RECALL_KS.iter().enumerate() {
            emit(format!("mR@{k}"), p.mean_recall[j]);
        }
        for (j, k) in RECALL_KS.iter().enumerate() {
            emit(format!("R@{k}"), p.recall[j]);
        }
        emit("delivered".into(), p.delivered);
    }
    let charts = if chart_it {
        cfg.channels()
            .into_iter()
            .map(|c| {
                let series = RECALL_KS
                    .iter()
                    .map(|k| Series { name: format!("mR@{k}"), points: snrs.iter().map(|s| (*s, pool.mean_of(&format!("{}@{}", c.as_str(), num(*s)), &format!("mR@{k}")).unwrap_or(0.0))).collect() })
                    .collect();
                (format!("fig9_{}", c.as_str()), chart(&format!("Mean recall vs SNR ({})", c.as_str()), "SNR (dB)", "mR@k", series))
            })
            .collect()
    } else {
        Vec::new()
    };
    let notes = vec![format!(
        "each detector triple travels in its own frame with code {}; frames failing the CRC are dropped before ranking",
        cfg.sweep_code().as_str()
    )];
    Ok((csv, pool, charts, notes))
}

// ---------------------------------------------------------------- table3

/// SNR after a factor level is applied; storage levels keep the base SNR.
pub fn table3_levels(cfg: &ExperimentConfig) -> Vec<(&'static str, f64, f64, u32)> {
    let snr = cfg.scenario.snr_db;
    let b = cfg.scenario.bandwidth_hz;
    let mut out = Vec::new();
    for n in [1.0f64, 3.0, 5.0, 7.0, 9.0] {
        out.push(("uavs", n, snr - 10.0 * n.log10(), 8));
    }
    for s in [6.0, 9.0, 12.0, 15.0, 18.0] {
        out.push(("snr", s, s, 8));
    }
    for f in [0.5, 1.0, 2.0, 4.0, 8.0] {
        out.push(("bandwidth", f * b, snr + 10.0 * f.log10(), 8));
    }
    for bits in [4u32, 5, 6, 7, 8] {
        out.push(("storage", bits as f64, snr, bits));
    }
    out
}

const TABLE3_FRAMES: u64 = 4;

fn quantize(img: &ImagePayload, bits: u32) -> ImagePayload {
    let mask = if bits >= 8 { 0xff } else { !((1u8 << (8 - bits)) - 1) };
    ImagePayload { width: img.width, height: img.height, pixels: img.pixels.iter().map(|p| p & mask).collect() }
}

fn table3(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let levels = table3_levels(cfg);
    let cells: Vec<(usize, u64)> = (0..levels.len()).flat_map(|l| seeds.iter().map(move |s| (l, *s))).collect();
    let size = cfg.semcom.image_size;
    let per_cell: Vec<Vec<(f64, f64, f64)>> = cells
        .par_iter()
        .map(|&(l, seed)| {
            let (_, _, snr, bits) = levels[l];
            let link = Link::new(cfg.sweep_code(), ChannelSpec::new(ChannelKind::Awgn, snr));
            (0..TABLE3_FRAMES)
                .map(|f| {
                    // The same source frames for every level, so only the channel condition varies.
                    let original = ImagePayload::synthetic(size, size, derive_seed(seed, &[3, 0, f]));
                    let stored = quantize(&original, bits);
                    let (rx, _) = link.send_image(&stored, derive_seed(seed, &[3, 1, f])).map_err(rt)?;
                    let rx = quantize(&rx, bits);
                    let p = psnr(&original, &rx).map_err(rt)?.min(PSNR_CAP_DB);
                    Ok((p, mssim(&original, &rx).map_err(rt)?, mse(&original, &rx).map_err(rt)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    let mut factor_psnr: BTreeMap<(&str, u64), Vec<f64>> = BTreeMap::new();
    for ((l, seed), frames) in cells.iter().zip(&per_cell) {
        let (factor, level, _, _) = levels[*l];
        let m = |i: usize| mean(&frames.iter().map(|f| [f.0, f.1, f.2][i]).collect::<Vec<_>>());
        for (i, name) in ["psnr", "mssim", "mse"].iter().enumerate() {
            let _ = writeln!(csv, "{factor},{},{seed},{name},{}", num(level), num(m(i)));
            pool.push(factor, *name, m(i));
        }
        factor_psnr.entry((factor, *seed)).or_default().extend(frames.iter().map(|f| f.0));
    }
    for ((factor, seed), ps) in &factor_psnr {
        let var = std_dev(ps).powi(2);
        let _ = writeln!(csv, "{factor},all,{seed},variance,{}", num(var));
        pool.push(*factor, "variance", var);
    }
    let notes = vec![
        "variance is the sample variance of per-frame PSNR across all levels and frames of a factor; this is an interpretation of an undefined quantity".into(),
        format!("PSNR of error-free frames is capped at {PSNR_CAP_DB} dB"),
        "factor mappings: uavs n lowers SNR by 10log10(n); bandwidth multiplies per-bit energy; storage keeps the top b bits per pixel".into(),
    ];
    Ok((csv, pool, Vec::new(), notes))
}

// ---------------------------------------------------------------- table6

#[derive(Debug, Clone, PartialEq)]
pub struct BitCostRun {
    pub seed: u64,
    pub semantic_payload_bits: usize,
    pub semantic_coded_bits: usize,
    pub raw_payload_bits: usize,
    pub raw_coded_bits: usize,
    /// Share of triples received exactly, over repeated sends.
    pub recovery_rate: f64,
    pub raw_psnr: f64,
}

pub const TABLE6_TRIALS: u64 = 200;

/// Bit cost of a `compare_triples` scene against the raw image, both with
/// the configured code, and triple recovery at the scenario SNR on AWGN.
pub fn table6_run(cfg: &ExperimentConfig, seed: u64) -> Result<BitCostRun> {
    let catalog = scene_catalog(cfg)?;
    let vocab = Vocabulary::from_labels(&catalog.labels());
    let k = cfg.semantics.compare_triples;
    let scene = generate_scene(&catalog, derive_seed(seed, &[10, 0]), (k, k)).map_err(rt)?;
    let link = Link::new(cfg.code(), ChannelSpec::awgn(cfg.scenario.snr_db));
    let frame = crate::semcom::semantic_encode_triples(scene.triples(), &vocab).map_err(rt)?;
    let mut recovered = 0usize;
    let mut coded = 0;
    for t in 0..TABLE6_TRIALS {
        let (rx, d) = link.send_triples(scene.triples(), &vocab, derive_seed(seed, &[10, 1, t])).map_err(rt)?;
        coded = d.coded_bits;
        if d.crc_ok {
            recovered += scene.triples().iter().zip(&rx).filter(|(a, b)| a == b).count();
        }
    }
    let size = cfg.semcom.image_size;
    let img = ImagePayload::synthetic(size, size, derive_seed(seed, &[10, 2]));
    let (rx, raw_coded) = link.send_image(&img, derive_seed(seed, &[10, 3])).map_err(rt)?;
    Ok(BitCostRun {
        seed,
        semantic_payload_bits: frame.bit_len(),
        semantic_coded_bits: coded,
        raw_payload_bits: img.bit_len(),
        raw_coded_bits: raw_coded,
        recovery_rate: recovered as f64 / (TABLE6_TRIALS as usize * k) as f64,
        raw_psnr: psnr(&img, &rx).map_err(rt)?.min(PSNR_CAP_DB),
    })
}

fn table6(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let runs: Vec<BitCostRun> = seeds.par_iter().map(|s| table6_run(cfg, *s)).collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for r in &runs {
        let rows: [(&str, &str, f64); 7] = [
            ("semantic", "payload_bits", r.semantic_payload_bits as f64),
            ("semantic", "coded_bits", r.semantic_coded_bits as f64),
            ("semantic", "recovery_rate", r.recovery_rate),
            ("raw_image", "payload_bits", r.raw_payload_bits as f64),
            ("raw_image", "coded_bits", r.raw_coded_bits as f64),
            ("raw_image", "psnr", r.raw_psnr),
            ("ratio", "raw_over_semantic_coded_bits", r.raw_coded_bits as f64 / r.semantic_coded_bits as f64),
        ];
        for (mode, metric, v) in rows {
            let _ = writeln!(csv, "{mode},{},{metric},{}", r.seed, num(v));
            pool.push(mode, metric, v);
        }
    }
    let notes = vec![format!("both modes use code {} over AWGN at {} dB; semantic bits include the frame header and CRC", cfg.code().as_str(), num(cfg.scenario.snr_db))];
    Ok((csv, pool, Vec::new(), notes))
}

// ---------------------------------------------------------------- fig10

pub fn throughput_point(cfg: &ExperimentConfig, k: usize, kind: AllocationKind, seed: u64) -> Result<f64> {
    let cc = cfg.chain_config(derive_seed(seed, &[11, k as u64]));
    let alloc = AllocationStrategy::new(kind, &cc);
    Ok(simulate_throughput(k, &alloc, cfg.chain.duration_s, &cc).map_err(rt)?.tx_per_sec)
}

fn fig10(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let cells: Vec<(usize, AllocationKind, u64)> = cfg.k_points().into_iter().flat_map(|k| AllocationKind::ALL.into_iter().flat_map(move |a| seeds.iter().map(move |s| (k, a, *s)))).collect();
    let tps: Vec<f64> = cells.par_iter().map(|(k, a, s)| throughput_point(cfg, *k, *a, *s)).collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for ((k, a, s), t) in cells.iter().zip(&tps) {
        let _ = writeln!(csv, "{k},{a},{s},{}", num(*t));
        pool.push(format!("K={k:03}"), a.to_string(), *t);
    }
    let series = AllocationKind::ALL
        .iter()
        .map(|a| Series { name: a.to_string(), points: cfg.k_points().iter().map(|k| (*k as f64, pool.mean_of(&format!("K={k:03}"), &a.to_string()).unwrap_or(0.0))).collect() })
        .collect();
    let charts = vec![("fig10".into(), chart("Throughput vs committee size", "K", "tx/s", series))];
    Ok((csv, pool, charts, vec![format!("{} PBFT blocks per PoW block over {} s", cfg.chain.pbft_per_pow, num(cfg.chain.duration_s))]))
}

// ---------------------------------------------------------------- auction

fn auction(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Parts> {
    let catalog = scene_catalog(cfg)?;
    let acfg = cfg.auction_config();
    let per_seed: Vec<(String, Vec<(f64, f64)>)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut pool = ImagePool::new(cfg.auction.pool_size, derive_seed(seed, &[12, 0]));
            let mut rows = String::new();
            let mut stats = Vec::new();
            for r in 0..cfg.auction.rounds {
                let round = run_round(&mut pool, &catalog, &acfg, derive_seed(seed, &[12, 1, r as u64])).map_err(rt)?;
                rows.push_str(&outcome_rows(r, &round, seed));
                stats.push((round.outcome.winners.len() as f64, round.outcome.payments.values().sum::<f64>()));
            }
            Ok((rows, stats))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for (rows, stats) in &per_seed {
        csv.push_str(rows);
        for (r, (w, rev)) in stats.iter().enumerate() {
            pool.push(format!("round{r}"), "winners", *w);
            pool.push(format!("round{r}"), "revenue", *rev);
        }
    }
    Ok((csv, pool, Vec::new(), vec![format!("{} VSPs bid for images from {} UAVs per round", cfg.scenario.n_vsps, cfg.scenario.n_uavs)]))
}

// ---------------------------------------------------------------- offload

fn offload(cfg: &ExperimentConfig, seeds: &[u64], opts: &RunOptions) -> Result<Parts> {
    let topo = opts.topology.clone().unwrap_or_else(Topology::builtin);
    let agent = opts.agent;
    let mut csv = String::new();
    let mut pool = Pool::default();
    for n in 1..=cfg.offload.base_stations {
        for r in run_offload_sim(cfg, &topo, agent, seeds, n)? {
            for (metric, v) in [("offload_rate", r.final_offload_rate), ("reward", r.final_reward)] {
                let _ = writeln!(csv, "{n},{},{},{metric},{}", r.seed, agent.as_str(), num(v));
                pool.push(format!("stations={n:02}"), metric, v);
            }
        }
    }
    let series = vec![Series {
        name: format!("{} offload rate", agent.as_str()),
        points: (1..=cfg.offload.base_stations).map(|n| (n as f64, pool.mean_of(&format!("stations={n:02}"), "offload_rate").unwrap_or(0.0))).collect(),
    }];
    let charts = vec![("offload".into(), chart("Local offload rate", "base stations", "offload rate", series))];
    let notes = vec![format!(
        "{} UAVs, capacity {} tasks per station per step, outage probability {}; rates cover the final period",
        cfg.offload.n_uavs,
        cfg.offload.station_capacity,
        num(cfg.offload.outage_prob)
    )];
    Ok((csv, pool, charts, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.replicates = 2;
        c.qrl.episodes = 40;
        c.qrl.switch_episode = 30;
        c.qrl.peers = 1;
        c.scenario.period = 100;
        c.semcom.sentences = 5;
        c.semcom.snr_min = 6.0;
        c.semcom.snr_max = 8.0;
        c.semantics.scenes = 2;
        c.chain.k_max = 10;
        c.chain.duration_s = 60.0;
        c.offload.periods = 2;
        c.offload.epochs_per_period = 1;
        c
    }

    #[test]
    fn names_round_trip() {
        for (e, n) in Experiment::ALL.iter().zip(EXPERIMENTS) {
            assert_eq!(n.parse::<Experiment>().unwrap(), *e);
            assert_eq!(e.as_str(), n);
        }
        assert!(matches!("fig11".parse::<Experiment>(), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn every_experiment_emits_its_header() {
        let cfg = small();
        for e in Experiment::ALL {
            let s = run_experiment(e, &cfg, &RunOptions::default()).unwrap();
            let mut lines = s.csv.lines();
            assert_eq!(lines.next(), Some(e.csv_header()), "{e}");
            let width = e.csv_header().split(',').count();
            assert!(lines.clone().count() > 0, "{e} has rows");
            assert!(lines.all(|l| l.split(',').count() == width), "{e} rows match header");
            assert!(!s.aggregates.is_empty());
        }
    }

    #[test]
    fn fig10_has_one_row_per_cell() {
        let mut cfg = small();
        cfg.chain.k_max = 50;
        let s = run_experiment(Experiment::Fig10, &cfg, &RunOptions::default()).unwrap();
        assert_eq!(s.csv.lines().count() - 1, 10 * 3 * 2);
        assert!(s.csv.lines().nth(1).unwrap().starts_with("5,optimal,"));
    }

    #[test]
    fn noiseless_recall_is_detector_ceiling() {
        let cfg = small();
        let catalog = scene_catalog(&cfg).unwrap();
        let vocab = Vocabulary::from_labels(&catalog.labels());
        let seed = 17;
        let p = recall_point(&cfg, &catalog, &vocab, ChannelKind::Rayleigh, f64::INFINITY, seed).unwrap();
        assert_eq!(p.delivered, 1.0);
        let t = &cfg.semantics;
        let mut ceiling = 0.0;
        for sc in 0..t.scenes {
            let gt = generate_scene(&catalog, derive_seed(seed, &[9, 0, sc as u64]), (t.scene_min, t.scene_max)).unwrap();
            let preds = simulate_detector(&gt, &catalog, t.detector_error, t.list_length, derive_seed(seed, &[9, 1, sc as u64])).unwrap();
            ceiling += mean_recall_at_k(&preds, &gt, 100, &catalog).unwrap();
        }
        assert!((p.mean_recall[2] - ceiling / t.scenes as f64).abs() < 1e-12);
    }

    #[test]
    fn quantize_keeps_top_bits() {
        let img = ImagePayload { width: 1, height: 2, pixels: vec![0xff, 0x81] };
        assert_eq!(quantize(&img, 4).pixels, vec![0xf0, 0x80]);
        assert_eq!(quantize(&img, 8).pixels, img.pixels);
    }

    #[test]
    fn invalid_config_is_validation_error() {
        let mut cfg = small();
        cfg.semcom.sweep_code = "turbo".into();
        assert_eq!(run_experiment(Experiment::Fig9, &cfg, &RunOptions::default()).unwrap_err().exit_code(), 2);
    }
}
