//! Tabular Q-learning / SARSA / SARSA-lambda and the deep SARSA-lambda agent.

mod deep;
mod tables;
mod tabular;
mod updates;

use std::time::Instant;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::environment::{ClusterState, Environment};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use deep::{DeepConfig, DeepSarsaLambda};
pub use tables::{read_checkpoint, write_checkpoint, QTable, TraceKind, TraceTable, CHECKPOINT_VERSION};
pub use tabular::TabularAgent;
pub use updates::{
    argmax, dynamic_lambda, epsilon_greedy, lambda_return, n_step_return, q_learning_update, sarsa_lambda_sweep,
    sarsa_update, td_error, trace_update,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "q")]
    QLearning,
    #[serde(rename = "sarsa")]
    Sarsa,
    #[serde(rename = "sarsa-lambda")]
    SarsaLambda,
    #[serde(rename = "deep-sarsa-lambda")]
    DeepSarsaLambda,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [Self::QLearning, Self::Sarsa, Self::SarsaLambda, Self::DeepSarsaLambda];

    pub fn label(&self) -> &'static str {
        match self {
            Self::QLearning => "q",
            Self::Sarsa => "sarsa",
            Self::SarsaLambda => "sarsa-lambda",
            Self::DeepSarsaLambda => "deep-sarsa-lambda",
        }
    }
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown agent {s:?} (q, sarsa, sarsa-lambda, deep-sarsa-lambda)")))
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    Fixed,
    Dynamic,
}

/// Shared learning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Tabular step size.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Exploration rate.
    pub epsilon: f64,
    /// Trace decay used in fixed mode (and for the trace horizon).
    pub lambda: f64,
    pub lambda_mode: LambdaMode,
    /// Number of decays a trace survives before it is cut to zero.
    pub trace_horizon: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { alpha: 0.75, gamma: 0.6, epsilon: 0.01, lambda: 0.99, lambda_mode: LambdaMode::Fixed, trace_horizon: 20 }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} out of range: {v}")));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0,1]", self.alpha);
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0,1)", self.gamma);
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must be in [0,1]", self.epsilon);
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0,1]", self.lambda);
        }
        Ok(())
    }
}

/// What an agent sees of the environment each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Tabular state index.
    pub index: usize,
    /// Normalized per-sub-channel user counts.
    pub features: Vec<f64>,
    /// Reward earned on the slot that led here.
    pub prev_reward: f64,
}

impl Observation {
    pub fn of<T: Scalar>(env: &Environment<T>, state: &ClusterState, prev_reward: f64) -> Self {
        Self { index: env.state_index(state), features: state.encode::<f64>(), prev_reward }
    }
}

/// One SARSA transition `(s, a, r, s', a')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_state: Observation,
    pub next_action: usize,
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Clears per-episode memory such as eligibility traces.
    fn begin_episode(&mut self);

    fn act(&mut self, obs: &Observation, rng: &mut dyn RngCore) -> usize;

    fn learn(&mut self, exp: &Experience, rng: &mut dyn RngCore) -> Result<()>;

    /// Mean training loss since the previous call, for agents that train a network.
    fn take_loss(&mut self) -> Option<f64> {
        None
    }
}

/// Per-episode aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub mean_error: f64,
    pub mean_reward: f64,
    pub dnn_loss: Option<f64>,
    pub cluster_time_s: f64,
    pub accepted_steps: usize,
}

/// Runs one episode of `steps` slots in SARSA order: act, step, act again,
/// learn from `(s, a, r, s', a')`.
///
/// The environment and the agent draw from separate streams so exploration
/// never shifts the channel realizations. With `timed` the wall clock of the
/// allocation loop is reported, otherwise zero.
pub fn run_episode<T: Scalar, R1: Rng, R2: Rng>(
    env: &Environment<T>,
    agent: &mut dyn Agent,
    steps: usize,
    env_rng: &mut R1,
    agent_rng: &mut R2,
    timed: bool,
) -> Result<EpisodeMetrics> {
    if steps == 0 {
        return Err(Error::Config("an episode needs at least one step".into()));
    }
    let start = timed.then(Instant::now);
    let mut episode = env.begin_episode(env_rng)?;
    agent.begin_episode();
    let mut obs = Observation::of(env, &episode.state, 0.0);
    let mut action = agent.act(&obs, agent_rng);
    let (mut err_sum, mut reward_sum, mut accepted) = (0.0, 0.0, 0);
    for _ in 0..steps {
        let out = env.step(&mut episode, action, env_rng)?;
        let reward = out.reward.as_f64();
        err_sum += out.mean_error.as_f64();
        reward_sum += reward;
        accepted += usize::from(out.accepted);
        let next_obs = Observation::of(env, &out.next_state, reward);
        let next_action = agent.act(&next_obs, agent_rng);
        let exp = Experience { state: obs, action, reward, next_state: next_obs, next_action };
        agent.learn(&exp, agent_rng)?;
        obs = exp.next_state;
        action = next_action;
    }
    let cluster_time_s = start.map_or(0.0, |t| t.elapsed().as_secs_f64());
    Ok(EpisodeMetrics {
        mean_error: err_sum / steps as f64,
        mean_reward: reward_sum / steps as f64,
        dnn_loss: agent.take_loss(),
        cluster_time_s,
        accepted_steps: accepted,
    })
}

/// Builds any agent for an environment with `n_states` tabular states,
/// `n_features` inputs and `n_actions` actions.
pub fn build_agent(
    kind: AgentKind,
    config: &AgentConfig,
    deep: &DeepConfig,
    n_states: usize,
    n_features: usize,
    n_actions: usize,
    init_rng: &mut dyn RngCore,
) -> Result<Box<dyn Agent>> {
    Ok(match kind {
        AgentKind::DeepSarsaLambda => {
            Box::new(DeepSarsaLambda::<f32>::new(config.clone(), deep.clone(), n_states, n_features, n_actions, init_rng)?)
        }
        tabular => Box::new(TabularAgent::<f64>::new(tabular, config.clone(), n_states, n_actions)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::EnvConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env() -> Environment<f64> {
        Environment::with_random_topology(EnvConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn kind_labels_round_trip() {
        for k in AgentKind::ALL {
            assert_eq!(k.label().parse::<AgentKind>().unwrap(), k);
        }
        assert!("dqn".parse::<AgentKind>().is_err());
        let v: AgentKind = serde_json::from_str("\"deep-sarsa-lambda\"").unwrap();
        assert_eq!(v, AgentKind::DeepSarsaLambda);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = AgentConfig::default();
        assert_eq!((c.alpha, c.gamma, c.epsilon, c.lambda), (0.75, 0.6, 0.01, 0.99));
        assert!(c.validate().is_ok());
        assert!(AgentConfig { gamma: 1.0, ..c.clone() }.validate().is_err());
        assert!(AgentConfig { alpha: 0.0, ..c.clone() }.validate().is_err());
        assert!(AgentConfig { lambda: -0.1, ..c }.validate().is_err());
    }

    #[test]
    fn greedy_zero_table_starts_with_action_zero() {
        let e = env();
        let cfg = AgentConfig { epsilon: 0.0, ..AgentConfig::default() };
        let mut agent = TabularAgent::<f64>::new(AgentKind::Sarsa, cfg, e.state_space().len(), e.actions().len()).unwrap();
        let ep = e.begin_episode(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let obs = Observation::of(&e, &ep.state, 0.0);
        assert_eq!(agent.act(&obs, &mut ChaCha8Rng::seed_from_u64(2)), 0);
    }

    #[test]
    fn episode_is_reproducible() {
        let e = env();
        let run = || {
            let mut agent: Box<dyn Agent> = Box::new(
                TabularAgent::<f64>::new(AgentKind::SarsaLambda, AgentConfig::default(), e.state_space().len(), e.actions().len())
                    .unwrap(),
            );
            let (mut er, mut ar) = (ChaCha8Rng::seed_from_u64(5), ChaCha8Rng::seed_from_u64(6));
            (0..3).map(|_| run_episode(&e, agent.as_mut(), 50, &mut er, &mut ar, false).unwrap()).collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!(a.iter().all(|m| m.cluster_time_s == 0.0 && m.dnn_loss.is_none()));
        assert!(a.iter().all(|m| (0.0..=1.0).contains(&m.mean_error)));
    }

    #[test]
    fn timed_episode_reports_positive_time() {
        let e = env();
        let mut agent = TabularAgent::<f64>::new(AgentKind::QLearning, AgentConfig::default(), 25, 21).unwrap();
        let m = run_episode(&e, &mut agent, 20, &mut ChaCha8Rng::seed_from_u64(0), &mut ChaCha8Rng::seed_from_u64(1), true)
            .unwrap();
        assert!(m.cluster_time_s > 0.0 && m.cluster_time_s.is_finite());
    }
}
