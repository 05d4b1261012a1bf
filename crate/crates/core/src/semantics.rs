//! Scene graphs as (subject, relation, object) triples.
//!
//! This module holds the data model shared by the semantic pipeline and the
//! auction, a seeded scene generator standing in for image capture, a
//! detector surrogate standing in for neural scene-graph extraction, and the
//! retrieval metrics R@k and mR@k.
//!
//! Scenes serialize to a line-oriented text format: one triple per line as
//! `subject<TAB>relation<TAB>object`, scenes separated by blank lines.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::rng::seeded;

/// Largest scene a generator or parser will produce unless told otherwise.
pub const DEFAULT_MAX_TRIPLES: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum SemanticsError {
    #[error("catalog has no object categories or no predicates")]
    EmptyCatalog,
    #[error("predicate weights must be finite and strictly positive, one per predicate")]
    InvalidWeights,
    #[error("invalid scene size range ({0}, {1}); expected 1 <= lo <= hi <= {2}")]
    InvalidSizeRange(usize, usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("metric undefined for an empty ground-truth scene")]
    UndefinedMetric,
    #[error("predicate {0:?} is not in the catalog")]
    UnknownPredicate(String),
    #[error("scene has {0} triples, outside 1..={1}")]
    SceneSize(usize, usize),
    #[error("scene contains duplicate triple {0}")]
    DuplicateTriple(SemanticTriple),
    #[error("label {0:?} contains a tab or newline")]
    UnencodableLabel(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, SemanticsError>;

/// One fact extracted from a scene.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemanticTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl SemanticTriple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }

    /// The triple as three tokens in subject, relation, object order.
    pub fn tokens(&self) -> [&str; 3] {
        [&self.subject, &self.relation, &self.object]
    }
}

impl fmt::Display for SemanticTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

/// The triples extracted from one captured scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    triples: Vec<SemanticTriple>,
    pub scene_id: u64,
}

impl SceneGraph {
    /// Builds a scene, enforcing `1 <= len <= DEFAULT_MAX_TRIPLES` and no duplicates.
    pub fn new(triples: Vec<SemanticTriple>, scene_id: u64) -> Result<Self> {
        Self::with_max(triples, scene_id, DEFAULT_MAX_TRIPLES)
    }

    pub fn with_max(triples: Vec<SemanticTriple>, scene_id: u64, max: usize) -> Result<Self> {
        if triples.is_empty() || triples.len() > max {
            return Err(SemanticsError::SceneSize(triples.len(), max));
        }
        let mut seen = HashSet::with_capacity(triples.len());
        for t in &triples {
            if !seen.insert(t) {
                return Err(SemanticsError::DuplicateTriple(t.clone()));
            }
        }
        Ok(Self { triples, scene_id })
    }

    pub fn triples(&self) -> &[SemanticTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Object categories and predicates with long-tailed predicate weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateCatalog {
    object_categories: Vec<String>,
    predicates: Vec<String>,
    predicate_frequency: Vec<f64>,
}

const CATEGORY_POOL: &[&str] = &[
    "drone", "parcel", "truck", "person", "car", "tree", "building", "road", "pallet", "station",
    "van", "door", "window", "fence", "sign", "crate", "bicycle", "lamp", "bench", "roof",
];

const PREDICATE_POOL: &[&str] = &[
    "on", "near", "behind", "holding", "in_front_of", "carrying", "parked_on", "attached_to",
    "under", "next_to", "inside", "delivering",
];

impl PredicateCatalog {
    /// Builds a catalog; positive weights are normalized to sum to one.
    pub fn new(
        object_categories: Vec<String>,
        predicates: Vec<String>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if object_categories.is_empty() || predicates.is_empty() {
            return Err(SemanticsError::EmptyCatalog);
        }
        if weights.len() != predicates.len() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(SemanticsError::InvalidWeights);
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            object_categories,
            predicates,
            predicate_frequency: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// A catalog with Zipf (1/rank) predicate weights drawn from built-in label pools.
    pub fn long_tail(n_categories: usize, n_predicates: usize) -> Result<Self> {
        if n_categories == 0 || n_predicates == 0 {
            return Err(SemanticsError::EmptyCatalog);
        }
        let categories = label_pool(CATEGORY_POOL, n_categories, "object");
        let predicates = label_pool(PREDICATE_POOL, n_predicates, "rel");
        let weights = (1..=n_predicates).map(|r| 1.0 / r as f64).collect();
        Self::new(categories, predicates, weights)
    }

    pub fn object_categories(&self) -> &[String] {
        &self.object_categories
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    /// Normalized predicate weights, parallel to [`Self::predicates`].
    pub fn predicate_frequency(&self) -> &[f64] {
        &self.predicate_frequency
    }

    pub fn has_predicate(&self, p: &str) -> bool {
        self.predicates.iter().any(|x| x == p)
    }

    pub fn contains(&self, t: &SemanticTriple) -> bool {
        self.has_category(&t.subject) && self.has_predicate(&t.relation) && self.has_category(&t.object)
    }

    pub fn has_category(&self, c: &str) -> bool {
        self.object_categories.iter().any(|x| x == c)
    }

    /// Every distinct label (categories then predicates), for building a codec vocabulary.
    pub fn labels(&self) -> Vec<String> {
        self.object_categories
            .iter()
            .chain(&self.predicates)
            .cloned()
            .collect()
    }

    fn triple_space(&self) -> usize {
        self.object_categories.len().pow(2) * self.predicates.len()
    }

    fn predicate_sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.predicate_frequency).expect("weights validated on construction")
    }

    fn random_triple<R: Rng>(&self, rng: &mut R, preds: &WeightedIndex<f64>) -> SemanticTriple {
        let cats = &self.object_categories;
        SemanticTriple {
            subject: cats[rng.random_range(0..cats.len())].clone(),
            relation: self.predicates[preds.sample(rng)].clone(),
            object: cats[rng.random_range(0..cats.len())].clone(),
        }
    }
}

fn label_pool(pool: &[&str], n: usize, prefix: &str) -> Vec<String> {
    (0..n)
        .map(|i| match pool.get(i) {
            Some(s) => (*s).to_string(),
            None => format!("{prefix}_{i}"),
        })
        .collect()
}

/// Draws a scene with a uniform size in `size_range` and i.i.d. triples:
/// categories uniform, predicates by catalog weight, duplicates rejected.
pub fn generate_scene(
    catalog: &PredicateCatalog,
    rng_seed: u64,
    size_range: (usize, usize),
) -> Result<SceneGraph> {
    let (lo, hi) = size_range;
    if lo == 0 || lo > hi || hi > DEFAULT_MAX_TRIPLES {
        return Err(SemanticsError::InvalidSizeRange(lo, hi, DEFAULT_MAX_TRIPLES));
    }
    if catalog.object_categories.is_empty() || catalog.predicates.is_empty() {
        return Err(SemanticsError::EmptyCatalog);
    }
    let mut rng = seeded(rng_seed);
    let size = rng.random_range(lo..=hi);
    if size > catalog.triple_space() {
        return Err(SemanticsError::InvalidArgument(format!(
            "catalog admits only {} distinct triples, scene needs {size}",
            catalog.triple_space()
        )));
    }
    let preds = catalog.predicate_sampler();
    let mut seen = HashSet::with_capacity(size);
    let mut triples = Vec::with_capacity(size);
    while triples.len() < size {
        let t = catalog.random_triple(&mut rng, &preds);
        if seen.insert(t.clone()) {
            triples.push(t);
        }
    }
    SceneGraph::new(triples, rng_seed)
}

/// A detector's output: triples with confidences, highest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedPredictions {
    entries: Vec<(SemanticTriple, f64)>,
}

impl RankedPredictions {
    /// Sorts by descending confidence; equal confidences keep input order.
    pub fn new(mut entries: Vec<(SemanticTriple, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        Self { entries }
    }

    /// Wraps a list that is already in rank order (e.g. decoded off the air).
    pub fn from_ranked(triples: Vec<SemanticTriple>) -> Self {
        let n = triples.len().max(1) as f64;
        let entries = triples
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, 1.0 - i as f64 / n))
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[(SemanticTriple, f64)] {
        &self.entries
    }

    pub fn triples(&self) -> impl Iterator<Item = &SemanticTriple> {
        self.entries.iter().map(|(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first `k` triples (fewer if the list is shorter).
    pub fn top_k(&self, k: usize) -> impl Iterator<Item = &SemanticTriple> {
        self.entries.iter().take(k).map(|(t, _)| t)
    }
}

/// Surrogate for the neural scene-graph extractor.
///
/// Each ground-truth triple is corrupted with probability `error_rate`: its
/// predicate or its object (each with probability `error_rate / 2` overall) is
/// resampled to a different catalog label, so a triple survives intact with
/// probability exactly `1 - error_rate`.
/// Intact triples get confidence `U(0.5, 1)`; corrupted triples and the random
/// distractors filling the rest of the list get `U(0, 0.5)`. The list never
/// contains duplicates and distractors never coincide with ground truth.
pub fn simulate_detector(
    gt: &SceneGraph,
    catalog: &PredicateCatalog,
    error_rate: f64,
    list_length: usize,
    rng_seed: u64,
) -> Result<RankedPredictions> {
    if list_length < 1 {
        return Err(SemanticsError::InvalidArgument("list_length must be >= 1".into()));
    }
    if list_length < gt.len() {
        return Err(SemanticsError::InvalidArgument(format!(
            "list_length {list_length} is shorter than the scene ({})",
            gt.len()
        )));
    }
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(SemanticsError::InvalidArgument(format!(
            "error_rate {error_rate} outside [0, 1]"
        )));
    }
    let mut rng = seeded(rng_seed);
    let preds = catalog.predicate_sampler();
    let truth: HashSet<&SemanticTriple> = gt.triples().iter().collect();
    let mut listed: HashSet<SemanticTriple> = HashSet::with_capacity(list_length);
    let mut entries = Vec::with_capacity(list_length);
    let can_rel = catalog.predicates.len() > 1;
    let can_obj = catalog.object_categories.len() > 1;

    for t in gt.triples() {
        let corrupt = rng.random_bool(error_rate) && (can_rel || can_obj);
        let pick_rel = rng.random_bool(0.5);
        let bad_rel = corrupt && can_rel && (pick_rel || !can_obj);
        let bad_obj = corrupt && !bad_rel;
        if !corrupt {
            listed.insert(t.clone());
            entries.push((t.clone(), rng.random_range(0.5..1.0)));
            continue;
        }
        for _ in 0..64 {
            let mut c = t.clone();
            if bad_rel {
                c.relation = resample_other(&mut rng, &catalog.predicates, &t.relation, Some(&preds));
            }
            if bad_obj {
                c.object = resample_other(&mut rng, &catalog.object_categories, &t.object, None);
            }
            if !truth.contains(&c) && !listed.contains(&c) {
                listed.insert(c.clone());
                entries.push((c, rng.random_range(0.0..0.5)));
                break;
            }
        }
    }

    let open = catalog.triple_space().saturating_sub(truth.len() + listed.len());
    let want = (list_length - entries.len()).min(open);
    let mut added = 0;
    let mut attempts = 0usize;
    while added < want && attempts < want * 256 + 1024 {
        attempts += 1;
        let d = catalog.random_triple(&mut rng, &preds);
        if truth.contains(&d) || listed.contains(&d) {
            continue;
        }
        listed.insert(d.clone());
        entries.push((d, rng.random_range(0.0..0.5)));
        added += 1;
    }
    Ok(RankedPredictions::new(entries))
}

fn resample_other<R: Rng>(
    rng: &mut R,
    labels: &[String],
    current: &str,
    weights: Option<&WeightedIndex<f64>>,
) -> String {
    loop {
        let i = match weights {
            Some(w) => w.sample(rng),
            None => rng.random_range(0..labels.len()),
        };
        if labels[i] != current {
            return labels[i].clone();
        }
    }
}

fn check_metric_args(gt: &SceneGraph, k: usize) -> Result<()> {
    if k == 0 {
        return Err(SemanticsError::InvalidArgument("k must be >= 1".into()));
    }
    if gt.is_empty() {
        return Err(SemanticsError::UndefinedMetric);
    }
    Ok(())
}

/// R@k: the share of ground-truth triples found among the first `k` predictions.
pub fn recall_at_k(preds: &RankedPredictions, gt: &SceneGraph, k: usize) -> Result<f64> {
    check_metric_args(gt, k)?;
    let top: HashSet<&SemanticTriple> = preds.top_k(k).collect();
    let hits = gt.triples().iter().filter(|t| top.contains(t)).count();
    Ok(hits as f64 / gt.len() as f64)
}

/// mR@k: R@k computed per predicate and averaged over the predicates that
/// occur in the ground truth.
pub fn mean_recall_at_k(
    preds: &RankedPredictions,
    gt: &SceneGraph,
    k: usize,
    catalog: &PredicateCatalog,
) -> Result<f64> {
    check_metric_args(gt, k)?;
    let top: HashSet<&SemanticTriple> = preds.top_k(k).collect();
    let mut per_class: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for t in gt.triples() {
        if !catalog.has_predicate(&t.relation) {
            return Err(SemanticsError::UnknownPredicate(t.relation.clone()));
        }
        let e = per_class.entry(&t.relation).or_default();
        e.1 += 1;
        if top.contains(t) {
            e.0 += 1;
        }
    }
    let sum: f64 = per_class
        .values()
        .map(|(hit, total)| *hit as f64 / *total as f64)
        .sum();
    Ok(sum / per_class.len() as f64)
}

/// Writes scenes in the tab-separated, blank-line-delimited text format.
pub fn write_scenes(scenes: &[SceneGraph]) -> Result<String> {
    let mut out = String::new();
    for (i, scene) in scenes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for t in scene.triples() {
            for label in t.tokens() {
                if label.contains(['\t', '\n', '\r']) || label.is_empty() {
                    return Err(SemanticsError::UnencodableLabel(label.to_string()));
                }
            }
            out.push_str(&format!("{}\t{}\t{}\n", t.subject, t.relation, t.object));
        }
    }
    Ok(out)
}

/// Parses the text format; scene ids are assigned sequentially from 0.
pub fn parse_scenes(text: &str) -> Result<Vec<SceneGraph>> {
    let mut scenes = Vec::new();
    let mut current: Vec<SemanticTriple> = Vec::new();
    let mut start_line = 1;
    let flush = |current: &mut Vec<SemanticTriple>, scenes: &mut Vec<SceneGraph>, line: usize| {
        if current.is_empty() {
            return Ok(());
        }
        let id = scenes.len() as u64;
        let scene = SceneGraph::new(std::mem::take(current), id)
            .map_err(|e| SemanticsError::Parse { line, msg: e.to_string() })?;
        scenes.push(scene);
        Ok(())
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut current, &mut scenes, start_line)?;
            continue;
        }
        if current.is_empty() {
            start_line = line_no;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
            return Err(SemanticsError::Parse {
                line: line_no,
                msg: format!("expected subject<TAB>relation<TAB>object, got {line:?}"),
            });
        }
        current.push(SemanticTriple::new(parts[0], parts[1], parts[2]));
    }
    flush(&mut current, &mut scenes, start_line)?;
    Ok(scenes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str, r: &str, o: &str) -> SemanticTriple {
        SemanticTriple::new(s, r, o)
    }

    fn single_pred_catalog() -> PredicateCatalog {
        PredicateCatalog::new(
            (0..10).map(|i| format!("c{i}")).collect(),
            vec!["on".into()],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn single_predicate_scene_has_three_triples_sharing_it() {
        let scene = generate_scene(&single_pred_catalog(), 7, (3, 3)).unwrap();
        assert_eq!(scene.len(), 3);
        assert!(scene.triples().iter().all(|t| t.relation == "on"));
    }

    #[test]
    fn generation_is_deterministic() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        assert_eq!(
            generate_scene(&cat, 42, (1, 16)).unwrap(),
            generate_scene(&cat, 42, (1, 16)).unwrap()
        );
    }

    #[test]
    fn generation_rejects_bad_ranges() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        assert!(generate_scene(&cat, 1, (0, 3)).is_err());
        assert!(generate_scene(&cat, 1, (4, 3)).is_err());
        assert!(generate_scene(&cat, 1, (1, 17)).is_err());
    }

    #[test]
    fn empty_catalog_is_a_configuration_error() {
        assert_eq!(
            PredicateCatalog::new(vec![], vec!["on".into()], vec![1.0]),
            Err(SemanticsError::EmptyCatalog)
        );
        assert_eq!(
            PredicateCatalog::new(vec!["a".into()], vec!["on".into()], vec![0.0]),
            Err(SemanticsError::InvalidWeights)
        );
    }

    #[test]
    fn long_tail_weights_normalized_and_decreasing() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let w = cat.predicate_frequency();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        assert_eq!(cat.object_categories().len(), 10);
    }

    #[test]
    fn empirical_predicate_frequencies_track_catalog() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let mut counts = vec![0usize; 8];
        let mut total = 0usize;
        for seed in 0..10_000u64 {
            let scene = generate_scene(&cat, seed, (1, 16)).unwrap();
            for tr in scene.triples() {
                let i = cat.predicates().iter().position(|p| *p == tr.relation).unwrap();
                counts[i] += 1;
                total += 1;
            }
        }
        for (c, w) in counts.iter().zip(cat.predicate_frequency()) {
            let f = *c as f64 / total as f64;
            assert!((f - w).abs() < 0.02, "freq {f} vs weight {w}");
        }
    }

    #[test]
    fn zero_error_detector_returns_ground_truth() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let gt = generate_scene(&cat, 3, (5, 10)).unwrap();
        let preds = simulate_detector(&gt, &cat, 0.0, gt.len(), 9).unwrap();
        let got: HashSet<_> = preds.triples().cloned().collect();
        let want: HashSet<_> = gt.triples().iter().cloned().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn full_error_detector_recovers_almost_nothing() {
        let cat = PredicateCatalog::long_tail(20, 12).unwrap();
        let (mut hit, mut total) = (0usize, 0usize);
        for seed in 0..1000u64 {
            let gt = generate_scene(&cat, seed, (4, 12)).unwrap();
            let preds = simulate_detector(&gt, &cat, 1.0, 20, seed + 1_000_000).unwrap();
            let got: HashSet<_> = preds.triples().collect();
            hit += gt.triples().iter().filter(|t| got.contains(t)).count();
            total += gt.len();
        }
        assert!((hit as f64 / total as f64) < 0.05);
    }

    #[test]
    fn detector_presence_matches_binomial_expectation() {
        // Oracle: each triple survives independently with probability 1 - e.
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let mut fracs = Vec::new();
        for seed in 0..10_000u64 {
            let gt = generate_scene(&cat, seed, (4, 12)).unwrap();
            let preds = simulate_detector(&gt, &cat, 0.2, 20, seed ^ 0xABCD).unwrap();
            let got: HashSet<_> = preds.triples().collect();
            let present = gt.triples().iter().filter(|t| got.contains(t)).count();
            fracs.push(present as f64 / gt.len() as f64);
        }
        let m = crate::stats::mean(&fracs);
        assert!((m - 0.8).abs() <= 0.02, "mean presence {m}");
    }

    #[test]
    fn detector_list_properties() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let gt = generate_scene(&cat, 11, (8, 8)).unwrap();
        let preds = simulate_detector(&gt, &cat, 0.3, 40, 12).unwrap();
        assert_eq!(preds.len(), 40);
        let uniq: HashSet<_> = preds.triples().collect();
        assert_eq!(uniq.len(), 40);
        assert!(preds.entries().windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(simulate_detector(&gt, &cat, 0.3, 0, 1).is_err());
        assert!(simulate_detector(&gt, &cat, 0.3, 7, 1).is_err());
    }

    #[test]
    fn recall_edge_cases() {
        let gt = SceneGraph::new(
            vec![t("a", "on", "b"), t("b", "on", "c"), t("c", "near", "d"), t("d", "near", "a")],
            0,
        )
        .unwrap();
        let all = RankedPredictions::from_ranked(gt.triples().to_vec());
        assert_eq!(recall_at_k(&all, &gt, 4).unwrap(), 1.0);
        let none = RankedPredictions::from_ranked(vec![t("x", "on", "y")]);
        assert_eq!(recall_at_k(&none, &gt, 5).unwrap(), 0.0);
        // Top-5 holds two of the four ground-truth triples.
        let mixed = RankedPredictions::from_ranked(vec![
            t("x", "on", "y"),
            t("a", "on", "b"),
            t("x", "near", "y"),
            t("c", "near", "d"),
            t("y", "on", "x"),
            t("b", "on", "c"),
        ]);
        assert_eq!(recall_at_k(&mixed, &gt, 5).unwrap(), 0.5);
        assert!(recall_at_k(&mixed, &gt, 0).is_err());
    }

    #[test]
    fn mean_recall_cases() {
        let cat = PredicateCatalog::new(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec!["on".into(), "near".into()],
            vec![0.7, 0.3],
        )
        .unwrap();
        let one_pred = SceneGraph::new(vec![t("a", "on", "b"), t("b", "on", "c")], 0).unwrap();
        let p = RankedPredictions::from_ranked(vec![t("a", "on", "b"), t("x", "on", "y")]);
        assert_eq!(
            mean_recall_at_k(&p, &one_pred, 2, &cat).unwrap(),
            recall_at_k(&p, &one_pred, 2).unwrap()
        );
        let two = SceneGraph::new(vec![t("a", "on", "b"), t("c", "near", "d")], 1).unwrap();
        let only_on = RankedPredictions::from_ranked(vec![t("a", "on", "b")]);
        assert_eq!(mean_recall_at_k(&only_on, &two, 1, &cat).unwrap(), 0.5);
        let full = RankedPredictions::from_ranked(two.triples().to_vec());
        assert_eq!(mean_recall_at_k(&full, &two, 2, &cat).unwrap(), 1.0);
        let alien = SceneGraph::new(vec![t("a", "over", "b")], 2).unwrap();
        assert!(matches!(
            mean_recall_at_k(&full, &alien, 2, &cat),
            Err(SemanticsError::UnknownPredicate(_))
        ));
    }

    #[test]
    fn scene_invariants_enforced() {
        assert!(SceneGraph::new(vec![], 0).is_err());
        assert!(SceneGraph::new(vec![t("a", "on", "b"), t("a", "on", "b")], 0).is_err());
        let many = (0..17).map(|i| t(&format!("s{i}"), "on", "o")).collect();
        assert!(SceneGraph::new(many, 0).is_err());
    }

    #[test]
    fn text_format_round_trip_and_errors() {
        let cat = PredicateCatalog::long_tail(10, 8).unwrap();
        let scenes: Vec<_> = (0..5)
            .map(|s| {
                let g = generate_scene(&cat, s, (1, 6)).unwrap();
                SceneGraph::new(g.triples().to_vec(), s).unwrap()
            })
            .collect();
        let text = write_scenes(&scenes).unwrap();
        let back = parse_scenes(&text).unwrap();
        assert_eq!(back.len(), 5);
        for (a, b) in scenes.iter().zip(&back) {
            assert_eq!(a.triples(), b.triples());
        }
        let err = parse_scenes("a\ton\tb\n\nx\ty\n").unwrap_err();
        assert_eq!(err, SemanticsError::Parse { line: 3, msg: "expected subject<TAB>relation<TAB>object, got \"x\\ty\"".into() });
        let bad = SceneGraph::new(vec![t("a b\t", "on", "c")], 0).unwrap();
        assert!(write_scenes(&[bad]).is_err());
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<SemanticTriple>, Vec<SemanticTriple>, usize)> {
        let triple = (0u8..4, 0u8..3, 0u8..4).prop_map(|(s, r, o)| {
            t(&format!("c{s}"), &format!("r{r}"), &format!("c{o}"))
        });
        (
            proptest::collection::hash_set(triple.clone(), 1..12),
            proptest::collection::vec(triple, 0..30),
            1usize..40,
        )
            .prop_map(|(gt, preds, k)| (gt.into_iter().collect(), preds, k))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn recall_matches_bruteforce((gt, preds, k) in arb_instance()) {
            let scene = SceneGraph::with_max(gt.clone(), 0, 64).unwrap();
            let ranked = RankedPredictions::from_ranked(preds.clone());
            let got = recall_at_k(&ranked, &scene, k).unwrap();
            // Oracle: nested scan without hashing.
            let top = &preds[..k.min(preds.len())];
            let hits = gt.iter().filter(|g| top.iter().any(|p| p == *g)).count();
            prop_assert_eq!(got, hits as f64 / gt.len() as f64);
            prop_assert!((0.0..=1.0).contains(&got));
            let next = recall_at_k(&ranked, &scene, k + 1).unwrap();
            prop_assert!(next >= got);
        }

        #[test]
        fn mean_recall_bounded((gt, preds, k) in arb_instance()) {
            let cat = PredicateCatalog::new(
                (0..4).map(|i| format!("c{i}")).collect(),
                (0..3).map(|i| format!("r{i}")).collect(),
                vec![1.0, 1.0, 1.0],
            ).unwrap();
            let scene = SceneGraph::with_max(gt, 0, 64).unwrap();
            let ranked = RankedPredictions::from_ranked(preds);
            let m = mean_recall_at_k(&ranked, &scene, k, &cat).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }

    #[test]
    fn balanced_classes_make_mean_recall_equal_recall() {
        let cat = PredicateCatalog::new(
            ["a", "b", "c"].map(String::from).to_vec(),
            vec!["on".into(), "near".into()],
            vec![1.0, 1.0],
        )
        .unwrap();
        let gt = SceneGraph::new(
            vec![t("a", "on", "b"), t("b", "on", "c"), t("a", "near", "c"), t("c", "near", "b")],
            0,
        )
        .unwrap();
        let preds = RankedPredictions::from_ranked(vec![t("a", "on", "b"), t("a", "near", "c")]);
        assert_eq!(
            mean_recall_at_k(&preds, &gt, 2, &cat).unwrap(),
            recall_at_k(&preds, &gt, 2).unwrap()
        );
    }
}
