//! Tabular epsilon-greedy Q-learning, the comparison baseline.

use std::collections::BTreeMap;

use rand::Rng;

use super::agent::EpisodeRecord;
use super::env::{EnvSpec, StateBucket};
use super::{QrlError, RLConfig, Result};
use crate::rng::{seeded, SimRng};

pub const EPSILON_START: f64 = 0.3;
pub const EPSILON_END: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGreedyAgent {
    n_actions: usize,
    pub q: BTreeMap<StateBucket, Vec<f64>>,
    pub epsilon: f64,
    pub config: RLConfig,
}

impl EpsilonGreedyAgent {
    pub fn new(n_actions: usize, config: RLConfig) -> Result<Self> {
        config.validate()?;
        if n_actions == 0 {
            return Err(QrlError::InvalidArgument("agent needs at least one action".into()));
        }
        Ok(Self { n_actions, q: BTreeMap::new(), epsilon: EPSILON_START, config })
    }

    pub fn values_at(&self, s: &StateBucket) -> Vec<f64> {
        self.q.get(s).cloned().unwrap_or_else(|| vec![self.config.init_value(); self.n_actions])
    }

    pub fn greedy(&self, s: &StateBucket) -> usize {
        let v = self.values_at(s);
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if *x > v[best] {
                best = i;
            }
        }
        best
    }

    pub fn act(&self, s: &StateBucket, rng: &mut SimRng) -> usize {
        if self.epsilon > 0.0 && rng.random_bool(self.epsilon.min(1.0)) {
            rng.random_range(0..self.n_actions)
        } else {
            self.greedy(s)
        }
    }

    /// Mean max-action value plus `beta_explore` times the mean entropy of
    /// the epsilon-greedy policy, over visited buckets. There is no shared
    /// model, so the extension term is zero.
    pub fn objective(&self) -> f64 {
        if self.q.is_empty() {
            return self.config.init_value() + self.config.exploration_weight * (self.n_actions as f64).ln();
        }
        let n = self.n_actions as f64;
        let eps = self.epsilon.clamp(0.0, 1.0);
        let entropy = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        let policy_entropy = entropy(1.0 - eps + eps / n) + (n - 1.0) * entropy(eps / n);
        let exploit: f64 = self.q.values().map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / self.q.len() as f64;
        exploit + self.config.exploration_weight * policy_entropy
    }

    pub fn learn(&mut self, s: StateBucket, action: usize, reward: f64, next: StateBucket) {
        let next_max = self.values_at(&next).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let target = reward + self.config.gamma * next_max;
        let (alpha, init, n) = (self.config.learning_rate, self.config.init_value(), self.n_actions);
        let row = self.q.entry(s).or_insert_with(|| vec![init; n]);
        row[action] += alpha * (target - row[action]);
    }
}

/// Linear schedule from [`EPSILON_START`] at the first episode to [`EPSILON_END`] at the last.
pub fn epsilon_at(episode: usize, episodes: usize) -> f64 {
    if episodes <= 1 {
        return EPSILON_END;
    }
    let f = episode as f64 / (episodes - 1) as f64;
    EPSILON_START + (EPSILON_END - EPSILON_START) * f
}

/// Trains an epsilon-greedy agent for `config.episodes` episodes and returns
/// each episode's mean reward and objective. `fixed_epsilon` disables the
/// annealing schedule.
pub fn baseline_epsilon_greedy(env: &EnvSpec, config: &RLConfig, rng_seed: u64, fixed_epsilon: Option<f64>) -> Result<(EpsilonGreedyAgent, Vec<EpisodeRecord>)> {
    let mut agent = EpsilonGreedyAgent::new(env.n_actions(), config.clone())?;
    let mut rng = seeded(rng_seed);
    let mut obs = env.observe(&mut rng);
    let steps = config.steps_per_episode;
    let mut curve = Vec::with_capacity(config.episodes);
    for e in 0..config.episodes {
        agent.epsilon = fixed_epsilon.unwrap_or_else(|| epsilon_at(e, config.episodes));
        let mut total = 0.0;
        for _ in 0..steps {
            let s = obs.bucket();
            let a = agent.act(&s, &mut rng);
            let (r, _) = env.step_reward(&obs, a);
            obs = env.observe(&mut rng);
            agent.learn(s, a, r, obs.bucket());
            total += r;
        }
        curve.push(EpisodeRecord { reward: total / steps as f64, objective: agent.objective() });
    }
    Ok((agent, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qrl::env::BaseStationState;

    #[test]
    fn schedule_endpoints() {
        assert_eq!(epsilon_at(0, 100), EPSILON_START);
        assert!((epsilon_at(99, 100) - EPSILON_END).abs() < 1e-15);
    }

    #[test]
    fn deterministic_single_station() {
        let env = EnvSpec::new("one", vec![BaseStationState::new(9.0, 1000.0, 10.0, 10.0)]).unwrap();
        let cfg = RLConfig { episodes: 20, steps_per_episode: 10, ..RLConfig::default() };
        let (_, a) = baseline_epsilon_greedy(&env, &cfg, 1, Some(0.0)).unwrap();
        let (_, b) = baseline_epsilon_greedy(&env, &cfg, 2, Some(0.0)).unwrap();
        // One station and no exploration: only the task draws differ across seeds, and the reward ignores them up to latency.
        assert_eq!(a.len(), 20);
        let (_, a2) = baseline_epsilon_greedy(&env, &cfg, 1, Some(0.0)).unwrap();
        assert_eq!(a, a2);
        assert!(a.iter().zip(&b).all(|(x, y)| (x.reward - y.reward).abs() < 0.05));
    }
}
