//! Quantum-inspired collective reinforcement learning for base-station selection.
//!
//! Each UAV keeps a tabular value estimate and, per state bucket, an amplitude
//! register over candidate base stations. Actions are sampled from the
//! register; after every temporal-difference update the register is rebuilt by
//! Grover amplification toward the greedy action, so the amount of
//! amplification grows with the learned return. Peers share knowledge by
//! averaging models, and a warm start from the shared model handles
//! environment switches. An epsilon-greedy Q-learner serves as the baseline.

use thiserror::Error;

pub mod agent;
pub mod baseline;
pub mod env;
pub mod register;

pub use agent::{adapt, aggregate_models, objective, train_agent, train_step, AgentModel, EpisodeRecord, Transition};
pub use baseline::{baseline_epsilon_greedy, EpsilonGreedyAgent};
pub use env::{reward, BaseStationState, EnvSpec, Observation, Offload, RewardWeights, StateBucket, Task};
pub use register::{grover_update, init_register, select_action, QuantumActionRegister};

#[derive(Debug, Error, PartialEq)]
pub enum QrlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid RL config: {0}")]
    InvalidConfig(String),
    #[error("model shapes differ: {0} vs {1} actions")]
    ShapeMismatch(usize, usize),
    #[error("no models to aggregate")]
    NoModels,
}

pub type Result<T> = std::result::Result<T, QrlError>;

/// Learning hyperparameters shared by the quantum agent and the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RLConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    /// `c` in `L = round(c * max(0, td_target))`.
    pub grover_scale: f64,
    pub max_grover_iters: usize,
    pub exploration_weight: f64,
    pub extension_weight: f64,
    pub episodes: usize,
    /// Decisions per episode; one decision every `h` over a period `H` gives `H / h`.
    pub steps_per_episode: usize,
    /// Value assigned to unseen (state, action) pairs. `None` means the
    /// optimistic bound `1 / (1 - gamma)` on returns of unit-bounded rewards.
    pub initial_value: Option<f64>,
}

impl Default for RLConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            learning_rate: 0.3,
            grover_scale: 1.0,
            max_grover_iters: 2,
            exploration_weight: 0.1,
            extension_weight: 0.1,
            episodes: 2000,
            steps_per_episode: 100,
            initial_value: None,
        }
    }
}

impl RLConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QrlError::InvalidConfig(m.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.grover_scale.is_finite() && self.grover_scale > 0.0) {
            return bad("grover_scale must be positive");
        }
        if !(self.exploration_weight >= 0.0 && self.extension_weight >= 0.0) {
            return bad("objective weights must be nonnegative");
        }
        if self.steps_per_episode == 0 {
            return bad("steps_per_episode must be positive");
        }
        if self.initial_value.is_some_and(|v| !v.is_finite()) {
            return bad("initial_value must be finite");
        }
        Ok(())
    }

    pub fn init_value(&self) -> f64 {
        self.initial_value.unwrap_or(1.0 / (1.0 - self.gamma))
    }
}

/// `sum_k gamma^k r_{k}` over the given rewards.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(QrlError::InvalidArgument(format!("gamma {gamma} outside [0, 1)")));
    }
    Ok(rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc))
}

/// First episode whose trailing mean reaches `fraction` of the final mean.
///
/// Both means use `window` episodes; the trailing mean at episode `e` covers
/// the episodes up to and including `e` that fit in the window.
pub fn convergence_episode(curve: &[f64], window: usize, fraction: f64) -> Option<usize> {
    if curve.is_empty() || window == 0 {
        return None;
    }
    let w = window.min(curve.len());
    let final_mean = curve[curve.len() - w..].iter().sum::<f64>() / w as f64;
    let target = fraction * final_mean;
    let mut sum = 0.0;
    for (e, r) in curve.iter().enumerate() {
        sum += r;
        if e >= w {
            sum -= curve[e - w];
        }
        let n = (e + 1).min(w) as f64;
        if sum / n >= target {
            return Some(e);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn discounted_return_cases() {
        assert_eq!(discounted_return(&[3.0, 9.0], 0.0).unwrap(), 3.0);
        assert!((discounted_return(&[1.0, 2.0, 3.0], 0.5).unwrap() - 2.75).abs() < 1e-12);
        let long = vec![1.0; 2000];
        assert!((discounted_return(&long, 0.9).unwrap() - 10.0).abs() < 1e-9);
        assert!(discounted_return(&[1.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn discounted_return_matches_summation(rs in proptest::collection::vec(-5.0f64..5.0, 0..60), g in 0.0f64..0.99) {
            let direct: f64 = rs.iter().enumerate().map(|(k, r)| g.powi(k as i32) * r).sum();
            prop_assert!((discounted_return(&rs, g).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn config_ranges() {
        assert!(RLConfig::default().validate().is_ok());
        assert!(RLConfig { gamma: 1.0, ..Default::default() }.validate().is_err());
        assert!(RLConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(RLConfig { grover_scale: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!(RLConfig::default().init_value(), 2.0);
    }

    #[test]
    fn convergence_on_ramp() {
        let curve: Vec<f64> = (0..100).map(|i| (i as f64 / 50.0).min(1.0)).collect();
        assert_eq!(convergence_episode(&curve, 1, 0.95), Some(48));
        assert_eq!(convergence_episode(&[], 10, 0.95), None);
    }
}
