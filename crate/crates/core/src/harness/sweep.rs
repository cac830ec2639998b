use serde::{Deserialize, Serialize};

use super::{final_window_by_seed, mean_cluster_time, run_experiment, ExperimentConfig, MetricsRecord};
use crate::environment::{Scheme, TrafficModel, STATE_ENCODING_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Blocklength `M`.
    Blocklength,
    /// Bursty packet-size range.
    PacketSize,
    /// Noise spectral density.
    Noise,
    /// Number of users.
    Users,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" | "blocklength" => Ok(Self::Blocklength),
            "d" | "packet-size" => Ok(Self::PacketSize),
            "noise" | "sigma2" => Ok(Self::Noise),
            "users" => Ok(Self::Users),
            other => Err(Error::Config(format!("unknown sweep {other:?} (m, d, noise, users)"))),
        }
    }
}

impl SweepKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Blocklength => "blocklength",
            Self::PacketSize => "packet-size",
            Self::Noise => "noise",
            Self::Users => "users",
        }
    }
}

/// Aggregate of one (grid point, scheme) over all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
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
    pub seeds: Vec<u64>,
    /// Final-window mean error per seed, aligned with `seeds`.
    pub final_error: Vec<f64>,
    pub final_reward: Vec<f64>,
    pub mean_final_error: f64,
    pub mean_final_reward: f64,
    /// Mean per-episode clustering time over all episodes (0 when not timed).
    pub mean_cluster_time_s: f64,
}

impl SweepPoint {
    /// Aggregates the rows of a single configuration.
    pub fn summarize(label: impl Into<String>, config: &ExperimentConfig, rows: &[MetricsRecord]) -> Self {
        let errs = final_window_by_seed(rows, config.final_window, |r| r.mean_error);
        let rews = final_window_by_seed(rows, config.final_window, |r| r.mean_reward);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let final_error: Vec<f64> = errs.iter().map(|p| p.1).collect();
        let final_reward: Vec<f64> = rews.iter().map(|p| p.1).collect();
        let (d_lo, d_hi) = config.env.traffic.bounds();
        Self {
            label: label.into(),
            agent: config.agent.label().into(),
            scheme: config.env.scheme.label().into(),
            traffic: config.env.traffic.label().into(),
            n_users: config.env.n_users,
            m: config.env.blocklength,
            d_lo,
            d_hi,
            sigma2_dbm: config.env.noise_dbm_per_hz,
            seeds: errs.iter().map(|p| p.0).collect(),
            mean_final_error: mean(&final_error),
            mean_final_reward: mean(&final_reward),
            mean_cluster_time_s: mean_cluster_time(rows),
            final_error,
            final_reward,
        }
    }
}

/// Summary JSON written next to each sweep's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sweep: String,
    pub state_encoding_version: u32,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub final_window: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepSummary {
    pub fn new(sweep: impl Into<String>, config: &ExperimentConfig, points: Vec<SweepPoint>) -> Self {
        Self {
            sweep: sweep.into(),
            state_encoding_version: STATE_ENCODING_VERSION,
            episodes: config.episodes,
            steps_per_episode: config.steps_per_episode,
            final_window: config.final_window,
            points,
        }
    }

    pub fn find(&self, label: &str, scheme: Scheme) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.label == label && p.scheme == scheme.label())
    }
}

fn grid(config: &ExperimentConfig, kind: SweepKind) -> Vec<(String, ExperimentConfig)> {
    let s = &config.sweep;
    let with = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = config.clone();
        f(&mut c);
        c
    };
    match kind {
        SweepKind::Blocklength => {
            s.blocklengths.iter().map(|&m| (format!("M={m}"), with(&|c| c.env.blocklength = m))).collect()
        }
        SweepKind::PacketSize => s
            .packet_ranges
            .iter()
            .map(|&(lo, hi)| {
                let t = TrafficModel::Bursty { min_bits: lo, max_bits: hi };
                (format!("D={lo}-{hi}"), with(&|c| c.env.traffic = t))
            })
            .collect(),
        SweepKind::Noise => s
            .noise_dbm_per_hz
            .iter()
            .map(|&n| (format!("sigma2={n}"), with(&|c| c.env.noise_dbm_per_hz = n)))
            .collect(),
        SweepKind::Users => s.n_users.iter().map(|&n| (format!("Nu={n}"), with(&|c| c.env.n_users = n))).collect(),
    }
}

/// Runs every grid point (and its OMA twin when enabled) over all seeds.
pub fn run_sweep(config: &ExperimentConfig, kind: SweepKind) -> Result<(Vec<MetricsRecord>, SweepSummary)> {
    config.validate()?;
    let mut schemes = vec![Scheme::Noma];
    if config.sweep.include_oma {
        schemes.push(Scheme::Oma);
    }
    let points = grid(config, kind);
    for (_, c) in &points {
        c.validate()?;
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (label, point) in points {
        for &scheme in &schemes {
            let mut c = point.clone();
            c.env.scheme = scheme;
            let r = run_experiment(&c)?;
            summary.push(SweepPoint::summarize(label.clone(), &c, &r));
            rows.extend(r);
        }
    }
    Ok((rows, SweepSummary::new(kind.label(), config, summary)))
}
