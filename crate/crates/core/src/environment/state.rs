use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Version of the agent-facing state encoding (normalized per-sub-channel counts).
pub const STATE_ENCODING_VERSION: u32 = 1;

/// Which constraint an allocation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// A user is not on exactly one valid sub-channel.
    Assignment { user: usize },
    /// A non-empty sub-channel holds fewer than two users.
    ClusterSize { subchannel: usize, size: usize },
    /// A sub-channel's transmit powers exceed the budget.
    PowerBudget { subchannel: usize },
    /// Received powers are not ordered like the channel gains.
    ReceivedOrder { subchannel: usize },
}

/// User-to-sub-channel clustering plus each user's power level in its pool.
///
/// Levels are 1-based ranks inside the cluster's pool: a cluster of `n`
/// users occupies levels `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterState {
    assignment: Vec<usize>,
    power_level: Vec<usize>,
    counts: Vec<usize>,
}

impl ClusterState {
    /// Builds a state from a raw assignment; levels default to rank by user id.
    ///
    /// Only index bounds are checked here, cluster-size rules are left to
    /// [`ClusterState::validate`].
    pub fn from_assignment(assignment: Vec<usize>, n_subchannels: usize) -> Result<Self> {
        let mut counts = vec![0; n_subchannels];
        let mut power_level = vec![0; assignment.len()];
        for (user, &j) in assignment.iter().enumerate() {
            let slot = counts
                .get_mut(j)
                .ok_or_else(|| Error::Config(format!("user {user} on sub-channel {j} of {n_subchannels}")))?;
            *slot += 1;
            power_level[user] = *slot;
        }
        Ok(Self { assignment, power_level, counts })
    }

    pub(crate) fn with_levels(mut self, levels: Vec<usize>) -> Self {
        debug_assert_eq!(levels.len(), self.assignment.len());
        self.power_level = levels;
        self
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn power_levels(&self) -> &[usize] {
        &self.power_level
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_users(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_subchannels(&self) -> usize {
        self.counts.len()
    }

    /// Users on sub-channel `j`, ascending id.
    pub fn members(&self, j: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(k, &c)| (c == j).then_some(k))
            .collect()
    }

    /// The clustering matrix `c[k][j]`.
    pub fn clustering_matrix(&self) -> Vec<Vec<u8>> {
        self.assignment
            .iter()
            .map(|&j| (0..self.counts.len()).map(|i| u8::from(i == j)).collect())
            .collect()
    }

    /// Cluster sizes of the non-empty sub-channels, descending.
    pub fn size_multiset(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.counts.iter().copied().filter(|&n| n > 0).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    /// Agent input: per-sub-channel counts divided by the number of users.
    pub fn encode<T: Scalar>(&self) -> Vec<T> {
        let n = T::of_usize(self.n_users());
        self.counts.iter().map(|&c| T::of_usize(c) / n).collect()
    }

    /// Structural constraints: one sub-channel per user, cluster sizes 0 or at
    /// least 2, and levels forming `1..=n` in every cluster.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let n_s = self.counts.len();
        let mut recount = vec![0; n_s];
        for (user, &j) in self.assignment.iter().enumerate() {
            if j >= n_s {
                return Err(Violation::Assignment { user });
            }
            recount[j] += 1;
        }
        for (j, (&n, &m)) in self.counts.iter().zip(&recount).enumerate() {
            if n != m {
                return Err(Violation::Assignment { user: self.members(j).first().copied().unwrap_or(0) });
            }
            if n == 1 {
                return Err(Violation::ClusterSize { subchannel: j, size: n });
            }
            let mut levels: Vec<usize> = self.members(j).iter().map(|&k| self.power_level[k]).collect();
            levels.sort_unstable();
            if levels.iter().enumerate().any(|(i, &l)| l != i + 1) {
                return Err(Violation::PowerBudget { subchannel: j });
            }
        }
        Ok(())
    }
}

/// Canonical indexing of the feasible cluster-size compositions.
///
/// A composition lists the user count of every sub-channel; each entry is 0
/// or at least 2 and the entries sum to the number of users. Power-pool usage
/// is implied by the counts, so a composition identifies a tabular state.
#[derive(Debug, Clone)]
pub struct StateSpace {
    compositions: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl StateSpace {
    pub fn new(n_users: usize, n_subchannels: usize) -> Self {
        let mut compositions = Vec::new();
        let mut current = Vec::with_capacity(n_subchannels);
        compose(n_users, n_subchannels, &mut current, &mut compositions);
        let index = compositions.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Self { compositions, index }
    }

    pub fn len(&self) -> usize {
        self.compositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compositions.is_empty()
    }

    pub fn index_of(&self, counts: &[usize]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    pub fn composition(&self, index: usize) -> &[usize] {
        &self.compositions[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.compositions.iter().map(Vec::as_slice)
    }
}

fn compose(remaining: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slots == 0 {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let sizes = std::iter::once(0).chain(2..=remaining);
    for n in sizes {
        if n > remaining {
            break;
        }
        current.push(n);
        compose(remaining - n, slots - 1, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_members() {
        let s = ClusterState::from_assignment(vec![0, 2, 0, 2, 2], 5).unwrap();
        assert_eq!(s.counts(), &[2, 0, 3, 0, 0]);
        assert_eq!(s.members(2), vec![1, 3, 4]);
        assert_eq!(s.size_multiset(), vec![3, 2]);
        assert_eq!(s.power_levels(), &[1, 1, 2, 2, 3]);
        assert!(s.validate().is_ok());
        let row_sums: Vec<u8> = s.clustering_matrix().iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![1; 5]);
    }

    #[test]
    fn singleton_cluster_is_invalid() {
        let s = ClusterState::from_assignment(vec![0, 0, 1], 2).unwrap();
        assert_eq!(s.validate(), Err(Violation::ClusterSize { subchannel: 1, size: 1 }));
        assert!(ClusterState::from_assignment(vec![0, 3], 2).is_err());
    }

    #[test]
    fn encoding_is_normalized_counts() {
        let s = ClusterState::from_assignment(vec![1, 1, 1, 4, 4], 5).unwrap();
        assert_eq!(s.encode::<f64>(), vec![0.0, 0.6, 0.0, 0.0, 0.4]);
    }

    #[test]
    fn composition_counts() {
        // {5}: 5 placements, {3,2}: 5*4 ordered placements.
        assert_eq!(StateSpace::new(5, 5).len(), 25);
        // {7}: 5, {5,2}: 20, {4,3}: 20, {3,2,2}: 5 * C(4,2) = 30.
        assert_eq!(StateSpace::new(7, 5).len(), 75);
        let space = StateSpace::new(5, 5);
        for (i, c) in space.iter().enumerate() {
            assert_eq!(space.index_of(c), Some(i));
            assert_eq!(c.iter().sum::<usize>(), 5);
            assert!(c.iter().all(|&n| n == 0 || n >= 2));
        }
    }
}
