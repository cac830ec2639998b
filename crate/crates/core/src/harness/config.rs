use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentKind, DeepConfig};
use crate::environment::{EnvConfig, TrafficModel};
use crate::error::{Error, Result};

/// Everything one experiment needs; every default is the paper-scale value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub seeds: Vec<u64>,
    pub agent: AgentKind,
    pub learning: AgentConfig,
    pub deep: DeepConfig,
    pub env: EnvConfig,
    /// Episodes averaged for the long-term metrics.
    pub final_window: usize,
    /// Measure wall-clock time per episode. Off by default because timings
    /// make the CSV differ between otherwise identical runs.
    pub record_cluster_time: bool,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            episodes: 500,
            steps_per_episode: 500,
            seeds: vec![1, 2, 3, 4, 5],
            agent: AgentKind::DeepSarsaLambda,
            learning: AgentConfig::default(),
            deep: DeepConfig::default(),
            env: EnvConfig::default(),
            final_window: 100,
            record_cluster_time: false,
            sweep: SweepConfig::default(),
        }
    }
}

/// Grid points of the parameter sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub blocklengths: Vec<u32>,
    pub packet_ranges: Vec<(u32, u32)>,
    pub noise_dbm_per_hz: Vec<f64>,
    pub n_users: Vec<usize>,
    /// Also run every point under OMA with the same seeds.
    pub include_oma: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            blocklengths: vec![100, 110, 120, 130],
            packet_ranges: vec![(20, 30), (20, 100)],
            noise_dbm_per_hz: vec![-174.0, -169.0, -164.0],
            n_users: vec![5, 7],
            include_oma: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Checks every module precondition before any work is done.
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(Error::Config("episodes and steps_per_episode must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config(format!("duplicate seeds in {:?}", self.seeds)));
        }
        if self.final_window == 0 {
            return Err(Error::Config("final_window must be positive".into()));
        }
        self.env.validate()?;
        self.learning.validate()?;
        if self.agent == AgentKind::DeepSarsaLambda {
            self.deep.validate()?;
        }
        for &(lo, hi) in &self.sweep.packet_ranges {
            TrafficModel::Bursty { min_bits: lo, max_bits: hi }.validate()?;
        }
        if self.sweep.blocklengths.contains(&0) {
            return Err(Error::Config("sweep blocklengths must be positive".into()));
        }
        if self.sweep.n_users.iter().any(|&n| n < 2) {
            return Err(Error::Config("sweep user counts must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_paper_scale() {
        let c = ExperimentConfig::default();
        assert_eq!((c.episodes, c.steps_per_episode), (500, 500));
        assert_eq!((c.learning.alpha, c.learning.gamma, c.learning.epsilon, c.learning.lambda), (0.75, 0.6, 0.01, 0.99));
        assert_eq!((c.deep.memory, c.deep.batch, c.deep.hidden.clone()), (500, 500, vec![500, 500]));
        assert_eq!((c.env.n_users, c.env.n_subchannels, c.env.blocklength), (5, 5, 100));
        assert_eq!(c.env.noise_dbm_per_hz, -174.0);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);

        let partial = r#"
            episodes = 3
            agent = "sarsa"
            [env]
            n_users = 7
            traffic = { mode = "bursty", min_bits = 20, max_bits = 100 }
            [learning]
            lambda_mode = "dynamic"
        "#;
        let c = ExperimentConfig::from_toml_str(partial).unwrap();
        assert_eq!(c.episodes, 3);
        assert_eq!(c.agent, AgentKind::Sarsa);
        assert_eq!(c.env.n_users, 7);
        assert_eq!(c.env.blocklength, 100);
        assert_eq!(c.steps_per_episode, 500);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("episodes = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("seeds = [1, 1]").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[learning]\ngamma = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("[env]\nn_users = 1").is_err());
        assert!(matches!(ExperimentConfig::from_toml_str("episodes = \"x\""), Err(Error::Toml(_))));
    }
}
