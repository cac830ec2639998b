use std::io::{BufRead, Write};

use rand::RngCore;

use super::tables::{self, QTable, TraceKind, TraceTable};
use super::updates::{dynamic_lambda, epsilon_greedy, sarsa_lambda_sweep, td_error, trace_update};
use super::{Agent, AgentConfig, AgentKind, Experience, LambdaMode, Observation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Q-learning, SARSA, or SARSA-lambda with replacing traces over a dense table.
#[derive(Debug, Clone)]
pub struct TabularAgent<T> {
    kind: AgentKind,
    config: AgentConfig,
    q: QTable<T>,
    traces: TraceTable<T>,
}

impl<T: Scalar> TabularAgent<T> {
    pub fn new(kind: AgentKind, config: AgentConfig, n_states: usize, n_actions: usize) -> Result<Self> {
        Self::with_traces(kind, config, n_states, n_actions, TraceKind::Replacing)
    }

    pub fn with_traces(
        kind: AgentKind,
        config: AgentConfig,
        n_states: usize,
        n_actions: usize,
        trace_kind: TraceKind,
    ) -> Result<Self> {
        if kind == AgentKind::DeepSarsaLambda {
            return Err(Error::Config("deep-sarsa-lambda is not a tabular agent".into()));
        }
        config.validate()?;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Config("empty state or action space".into()));
        }
        let decay = T::of(config.gamma * config.lambda);
        let traces = TraceTable::new(n_states, n_actions, trace_kind).with_horizon(config.trace_horizon, decay);
        Ok(Self { kind, config, q: QTable::new(n_states, n_actions), traces })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn q(&self) -> &QTable<T> {
        &self.q
    }

    pub fn q_mut(&mut self) -> &mut QTable<T> {
        &mut self.q
    }

    pub fn traces(&self) -> &TraceTable<T> {
        &self.traces
    }

    /// Applies one transition given by indices; returns the TD error.
    pub fn update(&mut self, s: usize, a: usize, r: T, s_next: usize, a_next: usize) -> T {
        let (alpha, gamma) = (T::of(self.config.alpha), T::of(self.config.gamma));
        let q_curr = self.q.get(s, a);
        match self.kind {
            AgentKind::QLearning => {
                let delta = td_error(r, self.q.max(s_next), q_curr, gamma);
                self.q.set(s, a, q_curr + alpha * delta);
                delta
            }
            AgentKind::Sarsa => {
                let delta = td_error(r, self.q.get(s_next, a_next), q_curr, gamma);
                self.q.set(s, a, q_curr + alpha * delta);
                delta
            }
            AgentKind::SarsaLambda | AgentKind::DeepSarsaLambda => {
                let delta = td_error(r, self.q.get(s_next, a_next), q_curr, gamma);
                let lambda = match self.config.lambda_mode {
                    LambdaMode::Fixed => T::of(self.config.lambda),
                    LambdaMode::Dynamic => dynamic_lambda(self.traces.get(s, a), delta.abs(), gamma),
                };
                trace_update(&mut self.traces, s, a, gamma, lambda);
                sarsa_lambda_sweep(&mut self.q, &self.traces, delta, alpha);
                delta
            }
        }
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        tables::write_checkpoint(&self.q, &self.traces, w)
    }

    /// Restores tables saved by [`TabularAgent::save`]; shapes must match.
    pub fn load<R: BufRead>(&mut self, r: R) -> Result<()> {
        let (q, traces) = tables::read_checkpoint::<T, _>(r, self.traces.kind())?;
        if (q.n_states(), q.n_actions()) != (self.q.n_states(), self.q.n_actions()) {
            return Err(Error::Checkpoint(format!(
                "table shape {}x{} does not match agent {}x{}",
                q.n_states(),
                q.n_actions(),
                self.q.n_states(),
                self.q.n_actions()
            )));
        }
        let decay = T::of(self.config.gamma * self.config.lambda);
        self.q = q;
        self.traces = traces.with_horizon(self.config.trace_horizon, decay);
        Ok(())
    }
}

impl<T: Scalar> Agent for TabularAgent<T> {
    fn kind(&self) -> AgentKind {
        self.kind
    }

    fn begin_episode(&mut self) {
        self.traces.clear();
    }

    fn act(&mut self, obs: &Observation, rng: &mut dyn RngCore) -> usize {
        epsilon_greedy(self.q.row(obs.index), self.config.epsilon, rng)
    }

    fn learn(&mut self, exp: &Experience, _rng: &mut dyn RngCore) -> Result<()> {
        self.update(exp.state.index, exp.action, T::of(exp.reward), exp.next_state.index, exp.next_action);
        Ok(())
    }
}
