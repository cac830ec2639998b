use std::collections::HashMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::tabular::TabularAgent;
use super::updates::epsilon_greedy;
use super::{Agent, AgentConfig, AgentKind, Experience, Observation};
use crate::error::{Error, Result};
use crate::neural::{backprop, sync_target, Adam, AdamConfig, Mlp, ReplayMemory};
use crate::scalar::Scalar;

/// Network, replay and schedule settings of the deep agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeepConfig {
    pub hidden: Vec<usize>,
    pub memory: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    /// Environment steps between target-network syncs.
    pub target_sync: u64,
    /// Environment steps between gradient updates once the memory is full.
    pub train_interval: u64,
    /// Append the previous slot's reward to the network input.
    pub include_prev_reward: bool,
}

impl Default for DeepConfig {
    fn default() -> Self {
        Self {
            hidden: vec![500, 500],
            memory: 500,
            batch: 500,
            adam: AdamConfig::default(),
            target_sync: 50,
            train_interval: 1,
            include_prev_reward: false,
        }
    }
}

impl DeepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::Config(format!("hidden layer sizes must be positive: {:?}", self.hidden)));
        }
        if self.memory == 0 || self.batch == 0 || self.batch > self.memory {
            return Err(Error::Config(format!(
                "need 0 < batch ({}) <= memory ({})",
                self.batch, self.memory
            )));
        }
        if self.target_sync == 0 || self.train_interval == 0 {
            return Err(Error::Config("target_sync and train_interval must be positive".into()));
        }
        if !(self.adam.lr > 0.0 && (0.0..1.0).contains(&self.adam.beta1) && (0.0..1.0).contains(&self.adam.beta2)) {
            return Err(Error::Config(format!("invalid ADAM settings {:?}", self.adam)));
        }
        Ok(())
    }
}

/// Stored transition; inputs are interned rows, `trace` is the eligibility
/// of `(s, a)` when the experience was recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    row: usize,
    action: usize,
    reward: f64,
    next_row: usize,
    #[allow(dead_code)]
    trace: f64,
}

/// SARSA-lambda whose action values come from an MLP once the replay
/// memory is full.
///
/// Until then a tabular SARSA-lambda learner with replacing traces picks
/// the actions and seeds the memory. Training regresses the primary network
/// on `r + gamma max_a Q_target(s', a)` over uniform replay batches; the
/// target network is refreshed every `target_sync` steps.
#[derive(Debug, Clone)]
pub struct DeepSarsaLambda<T> {
    config: AgentConfig,
    deep: DeepConfig,
    seed_policy: TabularAgent<f64>,
    primary: Mlp<T>,
    target: Mlp<T>,
    adam: Adam<T>,
    memory: ReplayMemory<Sample>,
    rows: Vec<Vec<T>>,
    row_index: HashMap<Vec<u64>, usize>,
    q_cache: Vec<Option<Vec<T>>>,
    target_cache: Vec<Option<T>>,
    steps: u64,
    syncs: u64,
    updates: u64,
    loss_sum: f64,
    loss_count: usize,
}

impl<T: Scalar> DeepSarsaLambda<T> {
    pub fn new(
        config: AgentConfig,
        deep: DeepConfig,
        n_states: usize,
        n_features: usize,
        n_actions: usize,
        init_rng: &mut dyn RngCore,
    ) -> Result<Self> {
        config.validate()?;
        deep.validate()?;
        let inputs = n_features + usize::from(deep.include_prev_reward);
        let mut sizes = vec![inputs];
        sizes.extend(&deep.hidden);
        sizes.push(n_actions);
        let primary = Mlp::new(&sizes, init_rng)?;
        Ok(Self {
            seed_policy: TabularAgent::new(AgentKind::SarsaLambda, config.clone(), n_states, n_actions)?,
            target: sync_target(&primary),
            adam: Adam::new(deep.adam, &primary),
            memory: ReplayMemory::new(deep.memory),
            primary,
            config,
            deep,
            rows: Vec::new(),
            row_index: HashMap::new(),
            q_cache: Vec::new(),
            target_cache: Vec::new(),
            steps: 0,
            syncs: 0,
            updates: 0,
            loss_sum: 0.0,
            loss_count: 0,
        })
    }

    pub fn primary(&self) -> &Mlp<T> {
        &self.primary
    }

    pub fn target(&self) -> &Mlp<T> {
        &self.target
    }

    pub fn seed_policy(&self) -> &TabularAgent<f64> {
        &self.seed_policy
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    fn input_of(&self, obs: &Observation) -> Vec<T> {
        let mut x: Vec<T> = obs.features.iter().map(|v| T::of(*v)).collect();
        if self.deep.include_prev_reward {
            x.push(T::of(obs.prev_reward));
        }
        x
    }

    fn intern(&mut self, obs: &Observation) -> usize {
        let x = self.input_of(obs);
        let key: Vec<u64> = x.iter().map(|v| v.as_f64().to_bits()).collect();
        if let Some(&i) = self.row_index.get(&key) {
            return i;
        }
        self.rows.push(x);
        self.q_cache.push(None);
        self.target_cache.push(None);
        self.row_index.insert(key, self.rows.len() - 1);
        self.rows.len() - 1
    }

    fn q_row(&mut self, row: usize) -> Result<&[T]> {
        if self.q_cache[row].is_none() {
            self.q_cache[row] = Some(self.primary.forward(&self.rows[row])?);
        }
        Ok(self.q_cache[row].as_deref().unwrap_or_default())
    }

    fn target_max(&mut self, row: usize) -> Result<T> {
        if let Some(v) = self.target_cache[row] {
            return Ok(v);
        }
        let q = self.target.forward(&self.rows[row])?;
        let best = q.iter().copied().fold(T::neg_infinity(), T::max);
        self.target_cache[row] = Some(best);
        Ok(best)
    }

    /// Network action values for an observation.
    pub fn q_values(&mut self, obs: &Observation) -> Result<Vec<T>> {
        let row = self.intern(obs);
        Ok(self.q_row(row)?.to_vec())
    }

    fn train(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        let Some(batch) = self.memory.sample(self.deep.batch, rng) else {
            return Ok(());
        };
        let batch: Vec<Sample> = batch.into_iter().copied().collect();
        let gamma = T::of(self.config.gamma);
        let mut targets = Vec::with_capacity(batch.len());
        for s in &batch {
            let best = self.target_max(s.next_row)?;
            targets.push(T::of(s.reward) + gamma * best);
        }
        let inputs: Vec<&[T]> = batch.iter().map(|s| self.rows[s.row].as_slice()).collect();
        let actions: Vec<usize> = batch.iter().map(|s| s.action).collect();
        let (loss, grads) = backprop(&self.primary, &inputs, &actions, &targets)?;
        self.adam.update(&mut self.primary, &grads);
        self.q_cache.iter_mut().for_each(|c| *c = None);
        self.updates += 1;
        self.loss_sum += loss.as_f64();
        self.loss_count += 1;
        Ok(())
    }
}

impl<T: Scalar> Agent for DeepSarsaLambda<T> {
    fn kind(&self) -> AgentKind {
        AgentKind::DeepSarsaLambda
    }

    fn begin_episode(&mut self) {
        self.seed_policy.begin_episode();
    }

    fn act(&mut self, obs: &Observation, rng: &mut dyn RngCore) -> usize {
        if !self.memory.is_full() {
            return self.seed_policy.act(obs, rng);
        }
        let row = self.intern(obs);
        let epsilon = self.config.epsilon;
        match self.q_row(row) {
            Ok(q) => epsilon_greedy(q, epsilon, rng),
            Err(_) => self.seed_policy.act(obs, rng),
        }
    }

    fn learn(&mut self, exp: &Experience, rng: &mut dyn RngCore) -> Result<()> {
        self.seed_policy.learn(exp, rng)?;
        let trace = self.seed_policy.traces().get(exp.state.index, exp.action);
        let row = self.intern(&exp.state);
        let next_row = self.intern(&exp.next_state);
        self.memory.push(Sample { row, action: exp.action, reward: exp.reward, next_row, trace });
        self.steps += 1;
        if self.memory.is_full() && self.steps % self.deep.train_interval == 0 {
            self.train(rng)?;
        }
        if self.steps % self.deep.target_sync == 0 {
            self.target = sync_target(&self.primary);
            self.target_cache.iter_mut().for_each(|c| *c = None);
            self.syncs += 1;
        }
        Ok(())
    }

    fn take_loss(&mut self) -> Option<f64> {
        let out = (self.loss_count > 0).then(|| self.loss_sum / self.loss_count as f64);
        self.loss_sum = 0.0;
        self.loss_count = 0;
        out
    }
}
