//! Generalized advantage estimation over one contiguous rollout segment.

use crate::Scalar;

/// Backward recursion over one environment's steps:
/// δ_t = r_t + γ·V_{t+1}·(1−done_t) − V_t, with V at one past the end given
/// by `bootstrap`, and Â_t = δ_t + γλ·(1−done_t)·Â_{t+1}. Returns the
/// advantages and the value targets Â + V.
pub fn compute_gae<S: Scalar>(
    rewards: &[S],
    values: &[S],
    dones: &[bool],
    bootstrap: S,
    gamma: S,
    lambda: S,
) -> (Vec<S>, Vec<S>) {
    assert_eq!(rewards.len(), values.len(), "rewards and values must align");
    assert_eq!(rewards.len(), dones.len(), "rewards and dones must align");
    let n = rewards.len();
    let mut advantages = vec![S::zero(); n];
    let mut running = S::zero();
    for t in (0..n).rev() {
        let cont = if dones[t] { S::zero() } else { S::one() };
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next_value * cont - values[t];
        running = delta + gamma * lambda * cont * running;
        advantages[t] = running;
    }
    let targets = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| *a + *v)
        .collect();
    (advantages, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lambda_zero_collapses_to_td_residuals() {
        let r = [1.0f64, -0.5, 2.0, 0.0];
        let v = [0.3, 0.1, -0.2, 0.7];
        let d = [false, false, true, false];
        let boot = 0.4;
        let gamma = 0.9;
        let (adv, _) = compute_gae(&r, &v, &d, boot, gamma, 0.0);
        for t in 0..4 {
            let next = if t + 1 < 4 { v[t + 1] } else { boot };
            let cont = if d[t] { 0.0 } else { 1.0 };
            let delta = r[t] + gamma * next * cont - v[t];
            assert!((adv[t] - delta).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn lambda_one_gamma_one_telescopes_to_reward_sums() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let v = [0.5, -0.5, 0.25, 0.0];
        let d = [false; 4];
        let boot = 10.0;
        let (adv, targets) = compute_gae(&r, &v, &d, boot, 1.0, 1.0);
        for t in 0..4 {
            let tail: f64 = r[t..].iter().sum::<f64>() + boot;
            assert!((adv[t] - (tail - v[t])).abs() < 1e-12);
            assert!((targets[t] - tail).abs() < 1e-12);
        }
    }

    #[test]
    fn three_step_worked_example() {
        // r = [1, 0, 1], V = [0.5, 0.2, 0.1], bootstrap 0, γ = 0.9, λ = 0.8.
        // δ = [1 + .9·.2 − .5, 0 + .9·.1 − .2, 1 + 0 − .1] = [.68, −.11, .9]
        // Â₂ = .9, Â₁ = −.11 + .72·.9 = .538, Â₀ = .68 + .72·.538 = 1.06736
        let (adv, targets) =
            compute_gae(&[1.0f64, 0.0, 1.0], &[0.5, 0.2, 0.1], &[false; 3], 0.0, 0.9, 0.8);
        let want_adv = [1.06736, 0.538, 0.9];
        let want_tgt = [1.56736, 0.738, 1.0];
        for t in 0..3 {
            assert!((adv[t] - want_adv[t]).abs() < 1e-12, "adv[{t}] = {}", adv[t]);
            assert!((targets[t] - want_tgt[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn terminal_flag_blocks_both_bootstrap_and_propagation() {
        // An episode boundary in the middle: nothing after it may leak back.
        let r = [1.0f64, 1.0, 5.0, 5.0];
        let v = [0.0f64; 4];
        let d = [false, true, false, false];
        let (adv, _) = compute_gae(&r, &v, &d, 100.0, 0.99, 0.95);
        // Â₁ sees only its own reward.
        assert!((adv[1] - 1.0).abs() < 1e-12);
        // Â₀ sees r₀ + γλ·Â₁-chain but not the 5s.
        assert!((adv[0] - (1.0 + 0.99 * 0.95 * 1.0 - 0.0 + 0.99 * 0.0)).abs() < 1e-9);
    }

    proptest! {
        /// With λ = 1, advantages are discounted Monte-Carlo returns minus
        /// values, computed here by an independent forward accumulation.
        #[test]
        fn lambda_one_equals_monte_carlo(
            rewards in proptest::collection::vec(-5.0f64..5.0, 1..40),
            values in proptest::collection::vec(-2.0f64..2.0, 40),
            done_at in proptest::collection::vec(any::<bool>(), 40),
            boot in -3.0f64..3.0,
            gamma in 0.0f64..0.999,
        ) {
            let n = rewards.len();
            let values = &values[..n];
            let dones = &done_at[..n];
            let (adv, _) = compute_gae(&rewards, values, dones, boot, gamma, 1.0);
            // Discounted return from t to the next terminal (or bootstrap).
            for t in 0..n {
                let mut ret = 0.0;
                let mut disc = 1.0;
                let mut k = t;
                loop {
                    ret += disc * rewards[k];
                    if dones[k] { break; }
                    disc *= gamma;
                    if k + 1 == n { ret += disc * boot; break; }
                    k += 1;
                }
                prop_assert!((adv[t] - (ret - values[t])).abs() < 1e-9,
                    "t={} adv={} mc={}", t, adv[t], ret - values[t]);
            }
        }
    }
}
