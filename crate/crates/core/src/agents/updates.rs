//! Pure value-update rules shared by the tabular and deep learners.

use rand::Rng;

use super::tables::{QTable, TraceTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Greedy action with ties to the lowest index.
pub fn argmax<T: Scalar>(qrow: &[T]) -> usize {
    let mut best = 0;
    for (i, q) in qrow.iter().enumerate().skip(1) {
        if *q > qrow[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniformly random action, else [`argmax`].
///
/// Exactly one uniform is drawn per call (plus one index when exploring),
/// so the RNG stream does not depend on the Q-values.
pub fn epsilon_greedy<T: Scalar, R: Rng + ?Sized>(qrow: &[T], epsilon: f64, rng: &mut R) -> usize {
    assert!(!qrow.is_empty(), "epsilon_greedy needs at least one action");
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..qrow.len())
    } else {
        argmax(qrow)
    }
}

/// One-step temporal-difference error `r + gamma q_next - q_curr`.
pub fn td_error<T: Scalar>(reward: T, q_next: T, q_curr: T, gamma: T) -> T {
    reward + gamma * q_next - q_curr
}

/// Decays every trace by `gamma * lambda`, then marks `(s, a)` as visited.
pub fn trace_update<T: Scalar>(traces: &mut TraceTable<T>, s: usize, a: usize, gamma: T, lambda: T) {
    traces.decay(gamma * lambda);
    traces.visit(s, a);
}

/// `Q(s,a) += alpha * delta * tau(s,a)` over every traced pair.
pub fn sarsa_lambda_sweep<T: Scalar>(q: &mut QTable<T>, traces: &TraceTable<T>, delta: T, alpha: T) {
    debug_assert_eq!((q.n_states(), q.n_actions()), (traces.n_states(), traces.n_actions()));
    let step = alpha * delta;
    if step == T::zero() {
        return;
    }
    for (qv, tv) in q.values_mut().iter_mut().zip(traces.values()) {
        if *tv > T::zero() {
            *qv += step * *tv;
        }
    }
}

/// Off-policy update toward `r + gamma max_a' Q(s', a')`.
pub fn q_learning_update<T: Scalar>(q: &mut QTable<T>, s: usize, a: usize, r: T, s_next: usize, alpha: T, gamma: T) {
    let target = r + gamma * q.max(s_next);
    let cur = q.get(s, a);
    q.set(s, a, (T::one() - alpha) * cur + alpha * target);
}

/// On-policy update toward `r + gamma Q(s', a')`.
#[allow(clippy::too_many_arguments)]
pub fn sarsa_update<T: Scalar>(
    q: &mut QTable<T>,
    s: usize,
    a: usize,
    r: T,
    s_next: usize,
    a_next: usize,
    alpha: T,
    gamma: T,
) {
    let target = r + gamma * q.get(s_next, a_next);
    let cur = q.get(s, a);
    q.set(s, a, (T::one() - alpha) * cur + alpha * target);
}

/// `sum_i gamma^(i-1) r_i + gamma^n bootstrap` with `n = rewards.len()`.
pub fn n_step_return<T: Scalar>(rewards: &[T], bootstrap_q: T, gamma: T) -> T {
    let mut acc = T::zero();
    let mut discount = T::one();
    for r in rewards {
        acc += discount * *r;
        discount *= gamma;
    }
    acc + discount * bootstrap_q
}

/// Truncated lambda-return `(1-lambda) sum lambda^(n-1) q_n`; the last
/// available return takes the remaining geometric mass `lambda^(N-1)`.
pub fn lambda_return<T: Scalar>(q_n: &[T], lambda: T) -> Result<T> {
    if q_n.is_empty() {
        return Err(Error::Domain("lambda_return needs at least one n-step return".into()));
    }
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::Domain(format!("lambda must lie in [0,1], got {lambda}")));
    }
    let last = q_n.len() - 1;
    let mut acc = T::zero();
    let mut weight = T::one();
    for q in &q_n[..last] {
        acc += (T::one() - lambda) * weight * *q;
        weight *= lambda;
    }
    Ok(acc + weight * q_n[last])
}

/// Recency- and surprise-weighted lambda in `[0, 1]`.
///
/// Starts from `gamma * trace` and fills the remaining headroom by
/// `|delta| / (1 + |delta|)`.
pub fn dynamic_lambda<T: Scalar>(trace_value: T, td_error_magnitude: T, gamma: T) -> T {
    let base = (gamma * trace_value).max(T::zero()).min(T::one());
    let x = td_error_magnitude.abs();
    let squash = if x.is_finite() { x / (T::one() + x) } else { T::one() };
    (base + (T::one() - base) * squash).max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::tables::TraceKind;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(epsilon_greedy(&[1.0f64, 3.0, 2.0], 0.0, &mut rng), 1);
        assert_eq!(epsilon_greedy(&[2.0f64, 2.0, 0.0], 0.0, &mut rng), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut hist = [0usize; 3];
        for _ in 0..n {
            hist[epsilon_greedy(&[0.0f64, 5.0, 1.0], 1.0, &mut rng)] += 1;
        }
        for h in hist {
            assert!((h as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02, "{hist:?}");
        }
    }

    #[test]
    fn td_error_values() {
        assert_eq!(td_error(0.0f64, 0.0, 0.0, 0.6), 0.0);
        assert_relative_eq!(td_error(1.0f64, 2.0, 0.5, 0.6), 1.7, epsilon = 1e-15);
        assert_eq!(td_error(0.3f64, 0.0, 0.3, 0.9), 0.0);
    }

    #[test]
    fn trace_decay_then_set() {
        let mut tr = TraceTable::<f64>::new(3, 2, TraceKind::Replacing);
        trace_update(&mut tr, 0, 0, 0.6, 0.99);
        assert_eq!(tr.get(0, 0), 1.0);
        assert_eq!(tr.values().iter().filter(|v| **v != 0.0).count(), 1);
        trace_update(&mut tr, 1, 1, 0.6, 0.99);
        assert_relative_eq!(tr.get(0, 0), 0.594, epsilon = 1e-15);
        assert_eq!(tr.get(1, 1), 1.0);
        // Revisiting resets rather than accumulates.
        trace_update(&mut tr, 1, 1, 0.6, 0.99);
        assert_eq!(tr.get(1, 1), 1.0);
    }

    #[test]
    fn zero_lambda_keeps_one_trace() {
        let mut tr = TraceTable::<f64>::new(4, 3, TraceKind::Replacing);
        for (s, a) in [(0, 0), (1, 2), (3, 1), (1, 2)] {
            trace_update(&mut tr, s, a, 0.6, 0.0);
            assert_eq!(tr.values().iter().filter(|v| **v != 0.0).count(), 1);
        }
    }

    #[test]
    fn sweep_examples() {
        let mut q = QTable::<f64>::new(2, 2);
        let mut tr = TraceTable::new(2, 2, TraceKind::Replacing);
        sarsa_lambda_sweep(&mut q, &tr, 5.0, 0.5);
        assert!(q.values().iter().all(|v| *v == 0.0));

        tr.visit(1, 0);
        sarsa_lambda_sweep(&mut q, &tr, 2.0, 0.5);
        assert_eq!(q.get(1, 0), 1.0);

        let mut q = QTable::<f64>::new(2, 2);
        trace_update(&mut tr, 0, 1, 0.6, 0.99);
        sarsa_lambda_sweep(&mut q, &tr, 1.0, 1.0);
        assert_relative_eq!(q.get(1, 0) / q.get(0, 1), 0.594, epsilon = 1e-15);
    }

    #[test]
    fn q_learning_examples() {
        let mut q = QTable::<f64>::new(2, 2);
        q_learning_update(&mut q, 0, 0, 0.7, 1, 1.0, 0.6);
        assert_eq!(q.get(0, 0), 0.7);

        let before = q.clone();
        q_learning_update(&mut q, 0, 1, 3.0, 0, 0.0, 0.6);
        assert_eq!(q, before);

        let mut q = QTable::<f64>::new(2, 2);
        q.set(0, 0, 1.0);
        q.set(1, 1, 2.0);
        q_learning_update(&mut q, 0, 0, 1.0, 1, 0.5, 0.6);
        assert_relative_eq!(q.get(0, 0), 1.6, epsilon = 1e-15);
    }

    #[test]
    fn sarsa_examples() {
        let mut q = QTable::<f64>::new(2, 2);
        q.set(0, 0, 1.0);
        q.set(1, 1, 2.0);
        let mut greedy = q.clone();
        sarsa_update(&mut q, 0, 0, 1.0, 1, 1, 0.5, 0.6);
        q_learning_update(&mut greedy, 0, 0, 1.0, 1, 0.5, 0.6);
        assert_eq!(q, greedy);

        let before = q.clone();
        sarsa_update(&mut q, 1, 0, 1.0, 0, 0, 0.0, 0.6);
        assert_eq!(q, before);

        // Q = 0.5, r = 1, Q(s',a') = 0 (non-greedy), alpha = 0.5: 0.5*0.5 + 0.5*1.
        let mut q = QTable::<f64>::new(2, 2);
        q.set(0, 1, 0.5);
        q.set(1, 1, 4.0);
        sarsa_update(&mut q, 0, 1, 1.0, 1, 0, 0.5, 0.6);
        assert_relative_eq!(q.get(0, 1), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn n_step_examples() {
        assert_relative_eq!(n_step_return(&[1.0f64], 2.0, 0.6), 2.2, epsilon = 1e-15);
        assert_eq!(n_step_return(&[0.4f64, 9.0, 9.0], 9.0, 0.0), 0.4);
        assert_relative_eq!(n_step_return(&[1.0f64, 1.0, 1.0], 4.0, 0.5), 2.25, epsilon = 1e-15);
    }

    #[test]
    fn lambda_return_examples() {
        assert_eq!(lambda_return(&[3.0f64, 7.0, 1.0], 0.0).unwrap(), 3.0);
        assert_relative_eq!(lambda_return(&[2.5f64; 6], 0.37).unwrap(), 2.5, epsilon = 1e-14);
        assert_relative_eq!(lambda_return(&[1.0f64, 2.0], 0.5).unwrap(), 1.5, epsilon = 1e-15);
        assert!(lambda_return::<f64>(&[], 0.5).is_err());
        assert!(lambda_return(&[1.0f64], 1.5).is_err());
    }

    #[test]
    fn dynamic_lambda_examples() {
        assert_eq!(dynamic_lambda(0.0f64, 0.0, 0.6), 0.0);
        assert!(dynamic_lambda(1.0f64, 1e12, 0.6) > 1.0 - 1e-9);
        assert_eq!(dynamic_lambda(1.0f64, f64::INFINITY, 0.6), 1.0);
        assert_relative_eq!(dynamic_lambda(0.5f64, 1.0, 0.6), 0.65, epsilon = 1e-15);
        assert_relative_eq!(dynamic_lambda(0.5f64, -1.0, 0.6), 0.65, epsilon = 1e-15);
    }
}
