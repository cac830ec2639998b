//! The uplink NOMA-URLLC cell as a Markov reward process.
//!
//! A [`ClusterState`] is changed by [`ActionSpec`]s; every slot redraws
//! fading, resolves power levels, runs SIC and scores each user with the
//! finite-blocklength error. [`Environment::step`] ties this together and
//! pays the sum rate only when the mean error did not grow.

mod action;
mod state;
mod traffic;

pub use action::{apply_action, enumerate_actions, ActionSpec, Rejection, Transition};
pub use state::{ClusterState, StateSpace, Violation, STATE_ENCODING_VERSION};
pub use traffic::{bursty_presets, preset, sample_packet_size, TrafficModel};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, sample_gains, sinr_per_user, sic_order, ChannelRealization, Topology};
use crate::error::{Error, Result};
use crate::fbl::FblPoint;
use crate::scalar::Scalar;

/// Multiple-access scheme used to score a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Power-domain sharing of the whole block with SIC.
    Noma,
    /// Cluster members time-share the block without interference.
    Oma,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::Oma => "oma",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "noma" => Ok(Scheme::Noma),
            "oma" => Ok(Scheme::Oma),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub n_users: usize,
    pub n_subchannels: usize,
    /// Blocklength `M` in channel uses.
    pub blocklength: u32,
    pub traffic: TrafficModel,
    pub noise_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    /// Per-sub-channel power budget `P_s`.
    pub max_power_dbm: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub pathloss_exponent: f64,
    pub scheme: Scheme,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_users: 5,
            n_subchannels: 5,
            blocklength: 100,
            traffic: TrafficModel::Static { bits: 50 },
            noise_dbm_per_hz: -174.0,
            bandwidth_hz: 1e6,
            max_power_dbm: 23.0,
            cell_radius_m: 500.0,
            min_distance_m: 1.0,
            pathloss_exponent: 4.0,
            scheme: Scheme::Noma,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::Config(format!("no feasible clustering for {} users", self.n_users)));
        }
        if self.n_subchannels < 2 {
            return Err(Error::Config(format!("need at least 2 sub-channels, got {}", self.n_subchannels)));
        }
        if self.blocklength == 0 {
            return Err(Error::Config("blocklength must be >= 1".into()));
        }
        if !(self.bandwidth_hz > 0.0 && self.noise_dbm_per_hz.is_finite() && self.max_power_dbm.is_finite()) {
            return Err(Error::Config("bandwidth, noise and power must be finite with positive bandwidth".into()));
        }
        self.traffic.validate()
    }

    pub fn noise_power_watts(&self) -> f64 {
        channel::noise_power_watts(self.noise_dbm_per_hz, self.bandwidth_hz)
    }

    pub fn power_budget_watts(&self) -> f64 {
        channel::dbm_to_watts(self.max_power_dbm)
    }
}

/// Transmit powers chosen for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T> {
    pub watts: Vec<T>,
    /// 1-based pool level of every user.
    pub levels: Vec<usize>,
}

/// Per-user outcome of scoring one clustering on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotReport<T> {
    pub powers: Vec<T>,
    pub levels: Vec<usize>,
    pub sinr: Vec<T>,
    pub per_user_error: Vec<T>,
    pub per_user_rate: Vec<T>,
    pub mean_error: T,
    pub sum_rate: T,
    /// Users decoded with a positive rate.
    pub connected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub next_state: ClusterState,
    pub reward: T,
    pub mean_error: T,
    pub per_user_error: Vec<T>,
    pub per_user_rate: Vec<T>,
    pub accepted: bool,
}

/// Mutable per-episode context carried between steps.
#[derive(Debug, Clone)]
pub struct Episode<T> {
    pub state: ClusterState,
    /// Mean error of the last accepted slot; 1 at episode start.
    pub prev_mean_error: T,
    pub prev_connected: usize,
    /// Gains of the most recent slot, used to pick which users move.
    pub gains: Vec<T>,
}

/// Reward of one slot: the sum rate when the mean error did not increase
/// and the connected-user count is unchanged, else zero.
pub fn compute_reward<T: Scalar>(
    prev_mean_error: T,
    new_mean_error: T,
    prev_connected: usize,
    new_connected: usize,
    sum_rate: T,
) -> T {
    if new_mean_error <= prev_mean_error && prev_connected == new_connected {
        sum_rate.max(T::zero())
    } else {
        T::zero()
    }
}

/// One cell: fixed topology, noise and power budget.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    config: EnvConfig,
    topology: Topology<T>,
    noise_power: T,
    power_budget: T,
    actions: Vec<ActionSpec>,
    space: StateSpace,
}

impl<T: Scalar> Environment<T> {
    pub fn new(config: EnvConfig, topology: Topology<T>) -> Result<Self> {
        config.validate()?;
        if topology.n_users() != config.n_users {
            return Err(Error::Shape { expected: config.n_users, actual: topology.n_users() });
        }
        Ok(Self {
            noise_power: T::of(config.noise_power_watts()),
            power_budget: T::of(config.power_budget_watts()),
            actions: enumerate_actions(config.n_subchannels),
            space: StateSpace::new(config.n_users, config.n_subchannels),
            topology,
            config,
        })
    }

    /// Draws the topology from `rng` and builds the environment.
    pub fn with_random_topology<R: Rng + ?Sized>(config: EnvConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let topology = channel::generate_topology(
            config.n_users,
            config.cell_radius_m,
            config.min_distance_m,
            config.pathloss_exponent,
            rng,
        )?;
        Self::new(config, topology)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology<T> {
        &self.topology
    }

    pub fn noise_power(&self) -> T {
        self.noise_power
    }

    pub fn actions(&self) -> &[ActionSpec] {
        &self.actions
    }

    pub fn state_space(&self) -> &StateSpace {
        &self.space
    }

    /// Tabular index of a state.
    pub fn state_index(&self, state: &ClusterState) -> usize {
        self.space
            .index_of(state.counts())
            .expect("accepted states are feasible compositions")
    }

    /// Uniformly random feasible assignment, with a random level permutation
    /// inside every cluster.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ClusterState> {
        let (n_u, n_s) = (self.config.n_users, self.config.n_subchannels);
        // At least a few percent of raw assignments are feasible for the
        // supported sizes, so rejection sampling terminates quickly.
        for _ in 0..100_000 {
            let assignment: Vec<usize> = (0..n_u).map(|_| rng.gen_range(0..n_s)).collect();
            let state = ClusterState::from_assignment(assignment, n_s)?;
            if state.validate().is_err() {
                continue;
            }
            let mut levels = vec![0; n_u];
            for j in 0..n_s {
                let members = state.members(j);
                let mut pool: Vec<usize> = (1..=members.len()).collect();
                pool.shuffle(rng);
                for (k, l) in members.into_iter().zip(pool) {
                    levels[k] = l;
                }
            }
            return Ok(state.with_levels(levels));
        }
        Err(Error::Config(format!("could not sample a feasible clustering of {n_u} users on {n_s} sub-channels")))
    }

    pub fn begin_episode<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Episode<T>> {
        let state = self.reset(rng)?;
        let gains = sample_gains(&self.topology, self.noise_power, rng).gains;
        Ok(Episode {
            state,
            prev_mean_error: T::one(),
            prev_connected: self.config.n_users,
            gains,
        })
    }

    /// Watts per pool level for a cluster of `n`: `P_s / max(N_u, n(n+1)/2)`,
    /// so a full cluster never exceeds the sub-channel budget.
    pub fn level_unit(&self, cluster_size: usize) -> T {
        let levels_total = cluster_size * (cluster_size + 1) / 2;
        self.power_budget / T::of_usize(self.config.n_users.max(levels_total))
    }

    /// Resolves pool levels into watts for every cluster.
    ///
    /// Starts from the reverse assignment (weakest gain on the highest level)
    /// and swaps adjacent levels while received powers break the gain order.
    pub fn assign_powers(&self, state: &ClusterState, realization: &ChannelRealization<T>) -> Result<PowerAllocation<T>> {
        let gains = &realization.gains;
        if gains.len() != state.n_users() {
            return Err(Error::Shape { expected: state.n_users(), actual: gains.len() });
        }
        let mut watts = vec![T::zero(); state.n_users()];
        let mut levels = vec![0usize; state.n_users()];
        for j in 0..state.n_subchannels() {
            let mut members = state.members(j);
            if members.is_empty() {
                continue;
            }
            members.sort_by(|&a, &b| gains[a].partial_cmp(&gains[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            let n = members.len();
            let unit = self.level_unit(n);
            let mut lv: Vec<usize> = (1..=n).rev().collect();
            let mut swapped = true;
            while swapped {
                swapped = false;
                for i in 0..n.saturating_sub(1) {
                    let (a, b) = (members[i], members[i + 1]);
                    let rx_a = T::of_usize(lv[i]) * gains[a];
                    let rx_b = T::of_usize(lv[i + 1]) * gains[b];
                    if rx_a > rx_b {
                        lv.swap(i, i + 1);
                        swapped = true;
                    }
                }
            }
            let mut total = T::zero();
            for (i, &k) in members.iter().enumerate() {
                levels[k] = lv[i];
                watts[k] = unit * T::of_usize(lv[i]);
                total += watts[k];
            }
            let ordered = members.windows(2).all(|w| watts[w[0]] * gains[w[0]] <= watts[w[1]] * gains[w[1]]);
            if !ordered {
                return Err(Error::Domain(format!("received-power order unsatisfiable on sub-channel {j}")));
            }
            if total > self.power_budget * T::of(1.0 + 1e-9) {
                return Err(Error::Domain(format!("power budget exceeded on sub-channel {j}")));
            }
        }
        Ok(PowerAllocation { watts, levels })
    }

    /// Scores a clustering under NOMA with SIC.
    ///
    /// Once a user's rate drops to zero, every user decoded after it on the
    /// same sub-channel also gets zero rate.
    pub fn evaluate_noma(&self, state: &ClusterState, realization: &ChannelRealization<T>, bits: &[u32]) -> Result<SlotReport<T>> {
        let alloc = self.assign_powers(state, realization)?;
        let n_u = state.n_users();
        let mut sinr = vec![T::zero(); n_u];
        let mut err = vec![T::one(); n_u];
        let mut rate = vec![T::zero(); n_u];
        for j in 0..state.n_subchannels() {
            let members = state.members(j);
            if members.is_empty() {
                continue;
            }
            let p: Vec<T> = members.iter().map(|&k| alloc.watts[k]).collect();
            let g: Vec<T> = members.iter().map(|&k| realization.gains[k]).collect();
            let cluster_sinr = sinr_per_user(&p, &g, realization.noise_power)?;
            let rx: Vec<T> = p.iter().zip(&g).map(|(a, b)| *a * *b).collect();
            let mut failed = false;
            for i in sic_order(&rx) {
                let k = members[i];
                let point = FblPoint::evaluate(cluster_sinr[i], self.config.blocklength, bits[k])?;
                sinr[k] = cluster_sinr[i];
                err[k] = point.epsilon;
                rate[k] = if failed { T::zero() } else { point.rate };
                if rate[k] <= T::zero() {
                    failed = true;
                }
            }
        }
        Ok(self.report(alloc, sinr, err, rate))
    }

    /// Scores a clustering under OMA: a cluster of `n` splits the block into
    /// `M / n` symbols per user and shares the cluster's pool power equally.
    pub fn evaluate_oma(&self, state: &ClusterState, realization: &ChannelRealization<T>, bits: &[u32]) -> Result<SlotReport<T>> {
        let n_u = state.n_users();
        let mut watts = vec![T::zero(); n_u];
        let mut sinr = vec![T::zero(); n_u];
        let mut err = vec![T::one(); n_u];
        let mut rate = vec![T::zero(); n_u];
        for j in 0..state.n_subchannels() {
            let members = state.members(j);
            let n = members.len();
            if n == 0 {
                continue;
            }
            let pool_total = self.level_unit(n) * T::of_usize(n * (n + 1) / 2);
            let p = pool_total / T::of_usize(n);
            let m = (self.config.blocklength / n as u32).max(1);
            for &k in &members {
                let g = p * realization.gains[k] / realization.noise_power;
                let point = FblPoint::evaluate(g, m, bits[k])?;
                watts[k] = p;
                sinr[k] = g;
                err[k] = point.epsilon;
                rate[k] = point.rate;
            }
        }
        let levels = state.power_levels().to_vec();
        Ok(self.report(PowerAllocation { watts, levels }, sinr, err, rate))
    }

    pub fn evaluate(&self, state: &ClusterState, realization: &ChannelRealization<T>, bits: &[u32]) -> Result<SlotReport<T>> {
        if bits.len() != state.n_users() {
            return Err(Error::Shape { expected: state.n_users(), actual: bits.len() });
        }
        match self.config.scheme {
            Scheme::Noma => self.evaluate_noma(state, realization, bits),
            Scheme::Oma => self.evaluate_oma(state, realization, bits),
        }
    }

    fn report(&self, alloc: PowerAllocation<T>, sinr: Vec<T>, err: Vec<T>, rate: Vec<T>) -> SlotReport<T> {
        let mean_error = err.iter().copied().sum::<T>() / T::of_usize(err.len());
        let sum_rate = rate.iter().copied().sum::<T>();
        let connected = rate.iter().filter(|r| **r > T::zero()).count();
        SlotReport {
            powers: alloc.watts,
            levels: alloc.levels,
            sinr,
            per_user_error: err,
            per_user_rate: rate,
            mean_error,
            sum_rate,
            connected,
        }
    }

    pub fn sample_bits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        (0..self.config.n_users).map(|_| self.config.traffic.sample(rng)).collect()
    }

    /// Advances one slot.
    ///
    /// The action is applied with the previous slot's gains, then fading and
    /// packet sizes are redrawn. A rejected action leaves the state as it was
    /// and earns nothing, but the slot is still scored for metrics.
    pub fn step<R: Rng + ?Sized>(&self, episode: &mut Episode<T>, action: usize, rng: &mut R) -> Result<StepOutcome<T>> {
        let spec = *self
            .actions
            .get(action)
            .ok_or_else(|| Error::Domain(format!("action {action} out of {}", self.actions.len())))?;
        let transition = apply_action(&episode.state, spec, &episode.gains);
        let realization = sample_gains(&self.topology, self.noise_power, rng);
        let bits = self.sample_bits(rng);

        let outcome = match transition {
            Transition::Accepted(candidate) => {
                let report = self.evaluate(&candidate, &realization, &bits)?;
                let reward = compute_reward(
                    episode.prev_mean_error,
                    report.mean_error,
                    episode.prev_connected,
                    report.connected,
                    report.sum_rate,
                );
                let next = match self.config.scheme {
                    Scheme::Noma => candidate.with_levels(report.levels.clone()),
                    Scheme::Oma => candidate,
                };
                episode.state = next.clone();
                episode.prev_mean_error = report.mean_error;
                episode.prev_connected = report.connected;
                StepOutcome {
                    next_state: next,
                    reward,
                    mean_error: report.mean_error,
                    per_user_error: report.per_user_error,
                    per_user_rate: report.per_user_rate,
                    accepted: true,
                }
            }
            Transition::Rejected(_) => {
                let report = self.evaluate(&episode.state, &realization, &bits)?;
                StepOutcome {
                    next_state: episode.state.clone(),
                    reward: T::zero(),
                    mean_error: report.mean_error,
                    per_user_error: report.per_user_error,
                    per_user_rate: report.per_user_rate,
                    accepted: false,
                }
            }
        };
        episode.gains = realization.gains;
        Ok(outcome)
    }
}
