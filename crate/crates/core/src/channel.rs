//! Cell topology, Rayleigh block fading, and SIC decoding for one cluster.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// User distances from a base station at the centre of a circular cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    pub distances: Vec<T>,
    pub cell_radius: T,
    pub pathloss_exponent: T,
}

impl<T: Scalar> Topology<T> {
    /// Large-scale power gain `d^-alpha` of every user.
    pub fn path_gains(&self) -> Vec<T> {
        self.distances.iter().map(|d| d.powf(-self.pathloss_exponent)).collect()
    }

    pub fn n_users(&self) -> usize {
        self.distances.len()
    }
}

/// Drops `n_users` uniformly on the annulus `min_distance <= d <= cell_radius`.
pub fn generate_topology<T: Scalar, R: Rng + ?Sized>(
    n_users: usize,
    cell_radius: f64,
    min_distance: f64,
    pathloss_exponent: f64,
    rng: &mut R,
) -> Result<Topology<T>> {
    if n_users < 2 {
        return Err(Error::Config(format!("need at least 2 users, got {n_users}")));
    }
    if !(min_distance > 0.0 && cell_radius > min_distance) {
        return Err(Error::Config(format!(
            "cell radius {cell_radius} must exceed the minimum distance {min_distance} > 0"
        )));
    }
    if !(pathloss_exponent > 2.0) {
        return Err(Error::Config(format!("path-loss exponent must exceed 2, got {pathloss_exponent}")));
    }
    let (r0, r1) = (min_distance * min_distance, cell_radius * cell_radius);
    let distances = (0..n_users)
        .map(|_| {
            let u: f64 = rng.gen();
            T::of((r0 + u * (r1 - r0)).sqrt())
        })
        .collect();
    Ok(Topology {
        distances,
        cell_radius: T::of(cell_radius),
        pathloss_exponent: T::of(pathloss_exponent),
    })
}

/// Effective channel gains of one slot plus the receiver noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    pub gains: Vec<T>,
    pub noise_power: T,
}

/// Fresh Rayleigh draw: `g = h * d^-alpha` with `h ~ Exp(1)`.
pub fn sample_gains<T: Scalar, R: Rng + ?Sized>(
    topology: &Topology<T>,
    noise_power: T,
    rng: &mut R,
) -> ChannelRealization<T> {
    let gains = topology
        .distances
        .iter()
        .map(|d| {
            let h: f64 = Exp1.sample(rng);
            T::of(h) * d.powf(-topology.pathloss_exponent)
        })
        .collect();
    ChannelRealization { gains, noise_power }
}

/// Thermal noise over `bandwidth_hz` at `dbm_per_hz`, in watts.
pub fn noise_power_watts(dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    dbm_to_watts(dbm_per_hz + 10.0 * bandwidth_hz.log10())
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// SIC decode order: strongest received power first, ties by ascending index.
pub fn sic_order<T: Scalar>(received: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..received.len()).collect();
    order.sort_by(|&a, &b| {
        received[b]
            .partial_cmp(&received[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Per-member SINR under SIC for one cluster.
///
/// `powers` and `gains` are indexed by cluster member. A member sees every
/// member decoded after it as interference; the last one sees noise only.
pub fn sinr_per_user<T: Scalar>(powers: &[T], gains: &[T], noise_power: T) -> Result<Vec<T>> {
    if powers.len() != gains.len() {
        return Err(Error::Shape { expected: gains.len(), actual: powers.len() });
    }
    if !(noise_power > T::zero()) {
        return Err(Error::Config(format!("noise power must be positive, got {noise_power}")));
    }
    if powers.iter().any(|p| *p < T::zero()) {
        return Err(Error::Domain("transmit powers must be non-negative".into()));
    }
    let received: Vec<T> = powers.iter().zip(gains).map(|(p, g)| *p * *g).collect();
    let order = sic_order(&received);
    let mut sinr = vec![T::zero(); received.len()];
    let mut residual = noise_power;
    for &k in order.iter().rev() {
        sinr[k] = received[k] / residual;
        residual += received[k];
    }
    Ok(sinr)
}
