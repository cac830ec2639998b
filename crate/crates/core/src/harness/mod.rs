//! Seeded experiment runner, parameter sweeps and CSV/JSON output.
//!
//! Every replica derives four independent ChaCha8 streams from its seed:
//! topology, environment (fading, packets, resets), agent exploration and
//! network initialization. Runs that differ only in agent or scheme therefore
//! see the same cell and the same channel realizations.

mod config;
mod output;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{build_agent, run_episode};
use crate::environment::Environment;
use crate::error::Result;

pub use config::{ExperimentConfig, SweepConfig};
pub use output::{read_csv, write_csv, write_csv_path, write_json_path, CSV_HEADER};
pub use sweep::{run_sweep, SweepKind, SweepPoint, SweepSummary};

pub const STREAM_TOPOLOGY: u64 = 0;
pub const STREAM_ENV: u64 = 1;
pub const STREAM_AGENT: u64 = 2;
pub const STREAM_NET_INIT: u64 = 3;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One CSV row: one episode of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub seed: u64,
    pub agent: String,
    pub scheme: String,
    pub traffic: String,
    pub n_users: usize,
    #[serde(rename = "M")]
    pub m: u32,
    #[serde(rename = "D_lo")]
    pub d_lo: u32,
    #[serde(rename = "D_hi")]
    pub d_hi: u32,
    pub sigma2_dbm: f64,
    pub mean_error: f64,
    pub mean_reward: f64,
    pub dnn_loss: Option<f64>,
    pub cluster_time_s: f64,
}

/// Trains one replica and returns its per-episode rows.
pub fn run_replica(config: &ExperimentConfig, seed: u64) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    let env = Environment::<f64>::with_random_topology(config.env.clone(), &mut stream(seed, STREAM_TOPOLOGY))?;
    let mut env_rng = stream(seed, STREAM_ENV);
    let mut agent_rng = stream(seed, STREAM_AGENT);
    let mut agent = build_agent(
        config.agent,
        &config.learning,
        &config.deep,
        env.state_space().len(),
        config.env.n_subchannels,
        env.actions().len(),
        &mut stream(seed, STREAM_NET_INIT),
    )?;
    let (d_lo, d_hi) = config.env.traffic.bounds();
    let mut rows = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let m = run_episode(
            &env,
            agent.as_mut(),
            config.steps_per_episode,
            &mut env_rng,
            &mut agent_rng,
            config.record_cluster_time,
        )?;
        rows.push(MetricsRecord {
            episode,
            seed,
            agent: config.agent.label().into(),
            scheme: config.env.scheme.label().into(),
            traffic: config.env.traffic.label().into(),
            n_users: config.env.n_users,
            m: config.env.blocklength,
            d_lo,
            d_hi,
            sigma2_dbm: config.env.noise_dbm_per_hz,
            mean_error: m.mean_error,
            mean_reward: m.mean_reward,
            dnn_loss: m.dnn_loss,
            cluster_time_s: m.cluster_time_s,
        });
    }
    Ok(rows)
}

/// Runs every seed (in parallel) and concatenates the rows in seed-list order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    let per_seed: Vec<Vec<MetricsRecord>> =
        config.seeds.par_iter().map(|&seed| run_replica(config, seed)).collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Mean of `field` over the last `window` episodes of every seed, in first-seen seed order.
pub fn final_window_by_seed(rows: &[MetricsRecord], window: usize, field: fn(&MetricsRecord) -> f64) -> Vec<(u64, f64)> {
    window_by_seed(rows, field, |n| n.saturating_sub(window)..n)
}

/// Mean of `field` over the first `window` episodes of every seed.
pub fn first_window_by_seed(rows: &[MetricsRecord], window: usize, field: fn(&MetricsRecord) -> f64) -> Vec<(u64, f64)> {
    window_by_seed(rows, field, |n| 0..window.min(n))
}

fn window_by_seed(
    rows: &[MetricsRecord],
    field: fn(&MetricsRecord) -> f64,
    range: impl Fn(usize) -> std::ops::Range<usize>,
) -> Vec<(u64, f64)> {
    let mut seeds: Vec<u64> = Vec::new();
    for r in rows {
        if !seeds.contains(&r.seed) {
            seeds.push(r.seed);
        }
    }
    seeds
        .into_iter()
        .map(|seed| {
            let mut mine: Vec<&MetricsRecord> = rows.iter().filter(|r| r.seed == seed).collect();
            mine.sort_by_key(|r| r.episode);
            let slice = &mine[range(mine.len())];
            let mean = slice.iter().map(|r| field(r)).sum::<f64>() / slice.len().max(1) as f64;
            (seed, mean)
        })
        .collect()
}

/// Number of matched pairs for which `holds(a, b)` is true.
pub fn sign_count(a: &[f64], b: &[f64], holds: impl Fn(f64, f64) -> bool) -> usize {
    a.iter().zip(b).filter(|(x, y)| holds(**x, **y)).count()
}

/// Mean wall-clock clustering time per episode.
pub fn mean_cluster_time(rows: &[MetricsRecord]) -> f64 {
    rows.iter().map(|r| r.cluster_time_s).sum::<f64>() / rows.len().max(1) as f64
}
