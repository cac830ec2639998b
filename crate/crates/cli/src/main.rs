use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use noma_urllc::agents::AgentKind;
use noma_urllc::environment::{preset, Scheme, TrafficModel};
use noma_urllc::harness::{
    mean_cluster_time, run_experiment, run_sweep, write_csv_path, write_json_path, ExperimentConfig, SweepKind,
    SweepPoint, SweepSummary,
};

#[derive(Parser)]
#[command(name = "noma-urllc", version, about = "Uplink NOMA-URLLC clustering with reinforcement learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration over all seeds.
    Run(Common),
    /// Sweep blocklength (m), packet-size range (d), noise or user count, with OMA twins.
    Sweep {
        kind: String,
        #[command(flatten)]
        common: Common,
    },
    /// Measure clustering time for 5 and 7 users under static and bursty traffic.
    Bench(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// noma | oma
    #[arg(long)]
    scheme: Option<String>,
    /// q | sarsa | sarsa-lambda | deep-sarsa-lambda
    #[arg(long)]
    agent: Option<String>,
    /// static | bursty | a preset such as d20-30
    #[arg(long)]
    traffic: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(s) = &self.scheme {
            cfg.env.scheme = s.parse::<Scheme>()?;
        }
        if let Some(a) = &self.agent {
            cfg.agent = a.parse::<AgentKind>()?;
        }
        if let Some(t) = &self.traffic {
            cfg.env.traffic = traffic(t, &cfg.env.traffic)?;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(s) = self.steps {
            cfg.steps_per_episode = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn traffic(name: &str, current: &TrafficModel) -> Result<TrafficModel> {
    Ok(match (name, current) {
        ("static", TrafficModel::Static { .. }) | ("bursty", TrafficModel::Bursty { .. }) => *current,
        ("static", _) => TrafficModel::Static { bits: 50 },
        ("bursty", _) => TrafficModel::Bursty { min_bits: 20, max_bits: 100 },
        (other, _) => match preset(other) {
            Some(t) => t,
            None => bail!("unknown traffic {other:?} (static, bursty, d20-30 ... d20-100)"),
        },
    })
}

fn prepare(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            prepare(&common.out, &cfg)?;
            let rows = run_experiment(&cfg)?;
            write_csv_path(&rows, &common.out.join("metrics.csv"))?;
            let point = SweepPoint::summarize("run", &cfg, &rows);
            println!(
                "{} {} {}: final mean error {:.4e}, final reward {:.4}",
                cfg.agent,
                cfg.env.scheme.label(),
                cfg.env.traffic.label(),
                point.mean_final_error,
                point.mean_final_reward
            );
            write_json_path(&SweepSummary::new("run", &cfg, vec![point]), &common.out.join("summary.json"))?;
        }
        Command::Sweep { kind, common } => {
            let kind: SweepKind = kind.parse()?;
            let cfg = common.resolve()?;
            prepare(&common.out, &cfg)?;
            let (rows, summary) = run_sweep(&cfg, kind)?;
            for p in &summary.points {
                println!("{:<14} {:<5} final mean error {:.4e}", p.label, p.scheme, p.mean_final_error);
            }
            write_csv_path(&rows, &common.out.join(format!("sweep_{}.csv", kind.label())))?;
            write_json_path(&summary, &common.out.join(format!("sweep_{}.json", kind.label())))?;
        }
        Command::Bench(common) => {
            let mut cfg = common.resolve()?;
            cfg.record_cluster_time = true;
            prepare(&common.out, &cfg)?;
            let mut rows = Vec::new();
            let mut points = Vec::new();
            for n_users in [5, 7] {
                for t in ["static", "bursty"] {
                    let mut c = cfg.clone();
                    c.env.n_users = n_users;
                    c.env.traffic = traffic(t, &TrafficModel::Static { bits: 50 })?;
                    let r = run_experiment(&c)?;
                    println!("Nu={n_users} {t:<6} mean clustering time {:.4} s/episode", mean_cluster_time(&r));
                    points.push(SweepPoint::summarize(format!("Nu={n_users},{t}"), &c, &r));
                    rows.extend(r);
                }
            }
            write_csv_path(&rows, &common.out.join("bench.csv"))?;
            write_json_path(&SweepSummary::new("bench", &cfg, points), &common.out.join("bench.json"))?;
        }
    }
    Ok(())
}
