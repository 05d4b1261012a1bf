//! The quantum-inspired agent, model sharing and the logged objective.

use std::collections::BTreeMap;

use super::env::{EnvSpec, Observation, StateBucket};
use super::register::{grover_update, init_register, optimal_iterations, select_with, QuantumActionRegister};
use super::{QrlError, RLConfig, Result};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    n_actions: usize,
    pub values: BTreeMap<StateBucket, Vec<f64>>,
    pub registers: BTreeMap<StateBucket, QuantumActionRegister>,
    pub config: RLConfig,
}

/// What one training step did.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateBucket,
    pub action: usize,
    pub reward: f64,
    pub offloaded: bool,
    pub next_state: StateBucket,
    pub grover_iters: usize,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl AgentModel {
    pub fn new(n_actions: usize, config: RLConfig) -> Result<Self> {
        config.validate()?;
        init_register(n_actions)?;
        Ok(Self { n_actions, values: BTreeMap::new(), registers: BTreeMap::new(), config })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn values_at(&self, s: &StateBucket) -> Vec<f64> {
        self.values.get(s).cloned().unwrap_or_else(|| vec![self.config.init_value(); self.n_actions])
    }

    pub fn register_at(&self, s: &StateBucket) -> QuantumActionRegister {
        self.registers.get(s).cloned().unwrap_or_else(|| self.uniform())
    }

    fn uniform(&self) -> QuantumActionRegister {
        init_register(self.n_actions).expect("n_actions checked at construction")
    }

    pub fn policy(&self, s: &StateBucket) -> Vec<f64> {
        self.register_at(s).probabilities()
    }

    /// Samples an action from the state's register.
    pub fn act(&self, s: &StateBucket, rng: &mut SimRng) -> usize {
        match self.registers.get(s) {
            Some(r) => select_with(r, rng),
            None => select_with(&self.uniform(), rng),
        }
    }

    /// TD update of `V(s, a)`, then rebuilds the state's register as
    /// `L` Grover rounds on the uniform state toward the updated greedy action.
    ///
    /// `L = min(max_grover_iters, optimal, round(c * max(0, target)))`, where
    /// `optimal` is the count that maximizes the target probability, so more
    /// rounds never rotate past the target.
    pub fn learn(&mut self, s: StateBucket, action: usize, reward: f64, next: StateBucket) -> usize {
        let next_max = self.values_at(&next).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let cfg = &self.config;
        let target = reward + cfg.gamma * next_max;
        let (alpha, c, cap) = (cfg.learning_rate, cfg.grover_scale, cfg.max_grover_iters.min(optimal_iterations(self.n_actions)));
        let init = cfg.init_value();
        let n = self.n_actions;
        let row = self.values.entry(s).or_insert_with(|| vec![init; n]);
        row[action] += alpha * (target - row[action]);
        let greedy = argmax(row);
        let iters = ((c * target.max(0.0)).round() as usize).min(cap);
        let reg = grover_update(&self.uniform(), greedy, iters).expect("greedy action in range");
        self.registers.insert(s, reg);
        iters
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n_actions != other.n_actions {
            return Err(QrlError::ShapeMismatch(self.n_actions, other.n_actions));
        }
        Ok(())
    }

    fn buckets_with<'a>(&'a self, other: &'a Self) -> Vec<StateBucket> {
        let mut keys: Vec<StateBucket> = self.values.keys().chain(self.registers.keys()).chain(other.values.keys()).chain(other.registers.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        keys
    }
}

/// One environment interaction: observe, act from the register, learn, and
/// return the transition together with the next observation.
pub fn train_step(agent: &mut AgentModel, env: &EnvSpec, obs: &Observation, rng: &mut SimRng) -> Result<(Transition, Observation)> {
    if agent.n_actions != env.n_actions() {
        return Err(QrlError::ShapeMismatch(agent.n_actions, env.n_actions()));
    }
    let state = obs.bucket();
    let action = agent.act(&state, rng);
    let (reward, offloaded) = env.step_reward(obs, action);
    let next_obs = env.observe(rng);
    let next_state = next_obs.bucket();
    let grover_iters = agent.learn(state, action, reward, next_state);
    Ok((Transition { state, action, reward, offloaded, next_state, grover_iters }, next_obs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub reward: f64,
    pub objective: f64,
}

/// Trains for `episodes` episodes of `steps_per_episode` steps, logging each
/// episode's mean reward and the objective against `shared` (the agent itself
/// when absent).
pub fn train_agent(agent: &mut AgentModel, env: &EnvSpec, episodes: usize, shared: Option<&AgentModel>, rng_seed: u64) -> Result<Vec<EpisodeRecord>> {
    let mut rng = seeded(rng_seed);
    let mut obs = env.observe(&mut rng);
    let steps = agent.config.steps_per_episode;
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut total = 0.0;
        for _ in 0..steps {
            let (t, next) = train_step(agent, env, &obs, &mut rng)?;
            total += t.reward;
            obs = next;
        }
        let objective = objective(agent, shared.unwrap_or(agent), env)?;
        out.push(EpisodeRecord { reward: total / steps as f64, objective });
    }
    Ok(out)
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Exploitation + exploration + extension, over buckets either model has visited:
/// mean max-action value, `beta_explore` times mean policy entropy, and minus
/// `beta_ext` times mean total-variation distance to the shared policy.
pub fn objective(agent: &AgentModel, shared: &AgentModel, env: &EnvSpec) -> Result<f64> {
    agent.check_shape(shared)?;
    if agent.n_actions != env.n_actions() {
        return Err(QrlError::ShapeMismatch(agent.n_actions, env.n_actions()));
    }
    let buckets = agent.buckets_with(shared);
    if buckets.is_empty() {
        let cfg = &agent.config;
        return Ok(cfg.init_value() + cfg.exploration_weight * (agent.n_actions as f64).ln());
    }
    let n = buckets.len() as f64;
    let (mut exploit, mut entropy, mut tv) = (0.0, 0.0, 0.0);
    for b in &buckets {
        exploit += agent.values_at(b).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let reg = agent.register_at(b);
        entropy += reg.entropy();
        tv += total_variation(&reg.probabilities(), &shared.policy(b));
    }
    let cfg = &agent.config;
    Ok(exploit / n + cfg.exploration_weight * entropy / n - cfg.extension_weight * tv / n)
}

/// Averages value tables and register probabilities.
///
/// Buckets missing from a model count at that model's initial value and
/// uniform policy, so every model contributes to every bucket. Registers are
/// re-embedded as `sqrt(p)`; amplitude phases are discarded.
pub fn aggregate_models(models: &[AgentModel]) -> Result<AgentModel> {
    let first = models.first().ok_or(QrlError::NoModels)?;
    for m in models {
        first.check_shape(m)?;
    }
    let mut keys: Vec<StateBucket> = models.iter().flat_map(|m| m.values.keys().chain(m.registers.keys()).copied()).collect();
    keys.sort();
    keys.dedup();
    let k = models.len() as f64;
    let n = first.n_actions;
    let mut out = AgentModel::new(n, first.config.clone())?;
    for b in keys {
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for m in models {
            for (acc, x) in v.iter_mut().zip(m.values_at(&b)) {
                *acc += x / k;
            }
            for (acc, x) in p.iter_mut().zip(m.policy(&b)) {
                *acc += x / k;
            }
        }
        if models.iter().any(|m| m.values.contains_key(&b)) {
            out.values.insert(b, v);
        }
        if models.iter().any(|m| m.registers.contains_key(&b)) {
            out.registers.insert(b, QuantumActionRegister::from_probabilities(&p)?);
        }
    }
    Ok(out)
}

/// Warm start for a new environment: values become `(1 - lambda) * agent +
/// lambda * shared` and registers are replaced by the shared registers.
pub fn adapt(agent: &AgentModel, new_env: &EnvSpec, shared: &AgentModel, lambda: f64) -> Result<AgentModel> {
    agent.check_shape(shared)?;
    if agent.n_actions != new_env.n_actions() {
        return Err(QrlError::ShapeMismatch(agent.n_actions, new_env.n_actions()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(QrlError::InvalidArgument(format!("blend {lambda} outside [0, 1]")));
    }
    let mut out = agent.clone();
    for b in agent.buckets_with(shared) {
        if !agent.values.contains_key(&b) && !shared.values.contains_key(&b) {
            continue;
        }
        let mine = agent.values_at(&b);
        let theirs = shared.values_at(&b);
        let blended = mine.iter().zip(&theirs).map(|(a, s)| if lambda == 1.0 { *s } else { (1.0 - lambda) * a + lambda * s }).collect();
        out.values.insert(b, blended);
    }
    out.registers = shared.registers.clone();
    Ok(out)
}
