use serde::{Deserialize, Serialize};

use super::state::{ClusterState, Violation};
use crate::scalar::Scalar;

/// One agent decision: shift users between two sub-channels, or do nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionSpec {
    Move { source: usize, target: usize },
    NoOp,
}

/// All moves in row-major `(source, target)` order, then the no-op.
///
/// For `n` sub-channels this yields `n * (n - 1) + 1` actions.
pub fn enumerate_actions(n_subchannels: usize) -> Vec<ActionSpec> {
    let mut actions = Vec::with_capacity(n_subchannels * n_subchannels.saturating_sub(1) + 1);
    for source in 0..n_subchannels {
        for target in 0..n_subchannels {
            if source != target {
                actions.push(ActionSpec::Move { source, target });
            }
        }
    }
    actions.push(ActionSpec::NoOp);
    actions
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    EmptySource,
    /// The move would strand a single user on the source sub-channel.
    StrandedUser { subchannel: usize },
    OutOfRange,
    Constraint(Violation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Accepted(ClusterState),
    Rejected(Rejection),
}

impl Transition {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Transition::Accepted(_))
    }
}

/// Applies `action` to `state`, choosing movers by the current `gains`.
///
/// A move normally carries the weakest user of the source cluster. Opening
/// an empty sub-channel carries the two weakest, and a two-user source is
/// carried whole, since a lone user on a sub-channel is never allowed. Moves
/// that would still leave exactly one user behind are rejected.
pub fn apply_action<T: Scalar>(state: &ClusterState, action: ActionSpec, gains: &[T]) -> Transition {
    let (source, target) = match action {
        ActionSpec::NoOp => return Transition::Accepted(state.clone()),
        ActionSpec::Move { source, target } => (source, target),
    };
    let n_s = state.n_subchannels();
    if source >= n_s || target >= n_s || source == target || gains.len() != state.n_users() {
        return Transition::Rejected(Rejection::OutOfRange);
    }
    let counts = state.counts();
    let (n_src, n_tgt) = (counts[source], counts[target]);
    if n_src == 0 {
        return Transition::Rejected(Rejection::EmptySource);
    }
    let n_move = if n_src == 2 || n_tgt == 0 { 2 } else { 1 };
    if n_src < n_move || n_src - n_move == 1 {
        return Transition::Rejected(Rejection::StrandedUser { subchannel: source });
    }

    let mut src_members = state.members(source);
    src_members.sort_by(|&a, &b| {
        gains[a]
            .partial_cmp(&gains[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let movers = &src_members[..n_move];

    let mut assignment = state.assignment().to_vec();
    let mut levels = state.power_levels().to_vec();
    for (i, &k) in movers.iter().enumerate() {
        assignment[k] = target;
        levels[k] = n_tgt + 1 + i;
    }
    // Released levels: the source pool is compacted back to 1..=n.
    let mut stay: Vec<usize> = src_members[n_move..].to_vec();
    stay.sort_by_key(|&k| levels[k]);
    for (rank, &k) in stay.iter().enumerate() {
        levels[k] = rank + 1;
    }

    let next = match ClusterState::from_assignment(assignment, n_s) {
        Ok(s) => s.with_levels(levels),
        Err(_) => return Transition::Rejected(Rejection::OutOfRange),
    };
    match next.validate() {
        Ok(()) => Transition::Accepted(next),
        Err(v) => Transition::Rejected(Rejection::Constraint(v)),
    }
}
