//! Base stations, environments and the offloading reward.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{QrlError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStationState {
    pub snr_db: f64,
    pub bandwidth_hz: f64,
    pub compute_units: f64,
    pub storage_units: f64,
    pub available: bool,
}

impl BaseStationState {
    pub fn new(snr_db: f64, bandwidth_hz: f64, compute_units: f64, storage_units: f64) -> Self {
        Self { snr_db, bandwidth_hz, compute_units, storage_units, available: true }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !self.snr_db.is_finite() || !ok(self.bandwidth_hz) || !ok(self.compute_units) || !ok(self.storage_units) {
            return Err(QrlError::InvalidArgument("station resources must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// A station with no bandwidth or compute cannot take a task.
    pub fn can_serve(&self) -> bool {
        self.available && self.bandwidth_hz > 0.0 && self.compute_units > 0.0
    }
}

/// A task to offload, sized in kilobits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub size_kbit: f64,
    pub class: u8,
}

/// Transfer plus processing time: `size / (B log2(1 + snr)) + size / compute`, in seconds.
pub fn latency(task: &Task, station: &BaseStationState) -> f64 {
    let snr = 10f64.powf(station.snr_db / 10.0);
    let rate_kbps = station.bandwidth_hz * (1.0 + snr).log2() / 1000.0;
    task.size_kbit / rate_kbps + task.size_kbit / station.compute_units
}

/// Reward weights for SNR, compute, bandwidth, storage and latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights(pub [f64; 5]);

impl Default for RewardWeights {
    fn default() -> Self {
        Self([0.25; 5])
    }
}

/// Outcome of an offloading attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Offload {
    Reward(f64),
    /// The station cannot serve; the caller routes the task to the cloud.
    Refused,
}

fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else if v > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Weighted min-max normalized resources minus weighted latency.
///
/// Each resource is normalized over `peers` (the stations of the current
/// environment, `station` included). Latency enters as a fraction of
/// `latency_scale`, normally the cloud fallback latency.
pub fn reward(station: &BaseStationState, peers: &[BaseStationState], task: &Task, weights: &RewardWeights, latency_scale: f64) -> Offload {
    if !station.can_serve() {
        return Offload::Refused;
    }
    let w = weights.0;
    let fields: [fn(&BaseStationState) -> f64; 4] = [|s| s.snr_db, |s| s.compute_units, |s| s.bandwidth_hz, |s| s.storage_units];
    let mut r = 0.0;
    for (wi, f) in w.iter().zip(fields) {
        let lo = peers.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = peers.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        r += wi * normalize(f(station), lo.min(f(station)), hi.max(f(station)));
    }
    let lat = if latency_scale > 0.0 { latency(task, station) / latency_scale } else { 0.0 };
    Offload::Reward(r - w[4] * lat)
}

/// Discrete learner state: task size class and which stations can serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateBucket {
    pub task_class: u8,
    pub availability: u64,
}

/// One step's view of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub stations: Vec<BaseStationState>,
    pub task: Task,
}

impl Observation {
    pub fn bucket(&self) -> StateBucket {
        let availability = self
            .stations
            .iter()
            .enumerate()
            .filter(|(_, s)| s.can_serve())
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        StateBucket { task_class: self.task.class, availability }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub env_id: String,
    pub stations: Vec<BaseStationState>,
    /// Relative standard deviation of per-step resource fluctuation.
    pub drift: f64,
    /// Per-step probability that a station is down.
    pub outage_prob: f64,
    /// Sizes of the small and large task classes, drawn with equal probability.
    pub task_sizes: [f64; 2],
    pub weights: RewardWeights,
    /// Cloud fallback latency; `None` means 10x the best station latency on a large task.
    pub cloud_latency: Option<f64>,
}

impl EnvSpec {
    pub fn new(env_id: impl Into<String>, stations: Vec<BaseStationState>) -> Result<Self> {
        let env = Self {
            env_id: env_id.into(),
            stations,
            drift: 0.05,
            outage_prob: 0.0,
            task_sizes: [1.0, 4.0],
            weights: RewardWeights::default(),
            cloud_latency: None,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(QrlError::InvalidArgument("environment needs at least one station".into()));
        }
        if self.stations.len() > 64 {
            return Err(QrlError::InvalidArgument("at most 64 stations fit the availability bitmap".into()));
        }
        for s in &self.stations {
            s.validate()?;
        }
        if !(self.drift.is_finite() && self.drift >= 0.0) || !(0.0..=1.0).contains(&self.outage_prob) {
            return Err(QrlError::InvalidArgument("drift must be nonnegative and outage_prob in [0, 1]".into()));
        }
        if self.task_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(QrlError::InvalidArgument("task sizes must be positive".into()));
        }
        if self.weights.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(QrlError::InvalidArgument("reward weights must be nonnegative".into()));
        }
        if self.cloud_latency.is_some_and(|c| !(c.is_finite() && c > 0.0)) {
            return Err(QrlError::InvalidArgument("cloud latency must be positive".into()));
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.stations.len()
    }

    pub fn cloud_latency(&self) -> f64 {
        if let Some(c) = self.cloud_latency {
            return c;
        }
        let task = Task { size_kbit: self.task_sizes[1], class: 1 };
        let best = self
            .stations
            .iter()
            .filter(|s| s.bandwidth_hz > 0.0 && s.compute_units > 0.0)
            .map(|s| latency(&task, s))
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() { 10.0 * best } else { 1.0 }
    }

    /// The reward earned when a task falls back to the cloud.
    pub fn cloud_reward(&self) -> f64 {
        -self.weights.0[4]
    }

    /// Draws the next task and the stations' fluctuated resources and outages.
    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        let stations = self
            .stations
            .iter()
            .map(|s| {
                let mut jitter = |v: f64| {
                    let z: f64 = rng.sample(StandardNormal);
                    (v * (1.0 + self.drift * z)).max(0.0)
                };
                let compute_units = jitter(s.compute_units);
                let bandwidth_hz = jitter(s.bandwidth_hz);
                let storage_units = jitter(s.storage_units);
                let down = self.outage_prob > 0.0 && rng.random_bool(self.outage_prob);
                BaseStationState {
                    snr_db: s.snr_db,
                    bandwidth_hz,
                    compute_units,
                    storage_units,
                    available: s.available && !down,
                }
            })
            .collect();
        let class = u8::from(rng.random_bool(0.5));
        Observation { stations, task: Task { size_kbit: self.task_sizes[class as usize], class } }
    }

    /// Reward of offloading the observed task to `action`, with cloud fallback on refusal.
    pub fn step_reward(&self, obs: &Observation, action: usize) -> (f64, bool) {
        match reward(&obs.stations[action], &obs.stations, &obs.task, &self.weights, self.cloud_latency()) {
            Offload::Reward(r) => (r, true),
            Offload::Refused => (self.cloud_reward(), false),
        }
    }

    /// Four heterogeneous stations: each of the first three maxes out some
    /// resources, while the fourth is best overall.
    pub fn default_four() -> Self {
        Self::new(
            "Env1",
            vec![
                BaseStationState::new(9.0, 1000.0, 10.0, 40.0),
                BaseStationState::new(15.0, 900.0, 16.0, 30.0),
                BaseStationState::new(6.0, 1400.0, 8.0, 80.0),
                BaseStationState::new(12.0, 1200.0, 14.0, 60.0),
            ],
        )
        .expect("valid built-in environment")
    }

    /// `default_four` with the station list rotated by `shift`, so the best
    /// station moves; `switch_env(0)` is Env1.
    pub fn switch_env(shift: usize) -> Self {
        let mut env = Self::default_four();
        let n = env.stations.len();
        env.stations.rotate_right(shift % n);
        env.env_id = format!("Env{}", shift + 1);
        env
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn task() -> Task {
        Task { size_kbit: 1.0, class: 0 }
    }

    #[test]
    fn normalization_endpoints() {
        let hi = BaseStationState::new(15.0, 1500.0, 20.0, 80.0);
        let lo = BaseStationState::new(5.0, 500.0, 5.0, 10.0);
        let peers = [hi.clone(), lo.clone()];
        let w = RewardWeights::default();
        assert_eq!(reward(&hi, &peers, &task(), &w, 0.0), Offload::Reward(1.0));
        let Offload::Reward(r) = reward(&lo, &peers, &task(), &w, 10.0) else { panic!() };
        assert!(r <= 0.0);
        let mut down = hi.clone();
        down.available = false;
        assert_eq!(reward(&down, &peers, &task(), &w, 1.0), Offload::Refused);
    }

    #[test]
    fn default_env_has_unique_best_station() {
        let env = EnvSpec::default_four();
        let obs = Observation { stations: env.stations.clone(), task: task() };
        let rs: Vec<f64> = (0..4).map(|a| env.step_reward(&obs, a).0).collect();
        let best = (0..4).max_by(|a, b| rs[*a].total_cmp(&rs[*b])).unwrap();
        assert_eq!(best, 3);
        assert_eq!(EnvSpec::switch_env(1).stations[0], env.stations[3]);
        assert!(EnvSpec::new("x", vec![]).is_err());
    }

    #[test]
    fn observation_bucket_tracks_outages() {
        let mut env = EnvSpec::default_four();
        env.outage_prob = 1.0;
        let obs = env.observe(&mut seeded(1));
        assert_eq!(obs.bucket().availability, 0);
        assert_eq!(env.step_reward(&obs, 0), (env.cloud_reward(), false));
        env.outage_prob = 0.0;
        assert_eq!(env.observe(&mut seeded(1)).bucket().availability, 0b1111);
    }

    proptest! {
        #[test]
        fn dominating_station_earns_more(
            base in proptest::array::uniform4(1.0f64..100.0),
            bump in proptest::array::uniform4(0.0f64..50.0),
            other in proptest::array::uniform4(1.0f64..100.0),
        ) {
            let b = BaseStationState::new(base[0], base[1], base[2], base[3]);
            let a = BaseStationState::new(base[0] + bump[0], base[1] + bump[1], base[2] + bump[2], base[3] + bump[3]);
            let c = BaseStationState::new(other[0], other[1], other[2], other[3]);
            let peers = [a.clone(), b.clone(), c];
            let w = RewardWeights::default();
            let (Offload::Reward(ra), Offload::Reward(rb)) = (reward(&a, &peers, &task(), &w, 5.0), reward(&b, &peers, &task(), &w, 5.0)) else {
                panic!("both stations serve");
            };
            prop_assert!(ra >= rb - 1e-12);
        }
    }
}
