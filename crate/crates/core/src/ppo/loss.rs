//! The PPO objective pieces: stable softmax/log-softmax, categorical
//! sampling, the clipped surrogate with entropy regularization, and the
//! value regression loss — each returning exact gradients with respect to
//! the network outputs.

use ndarray::Array2;

use crate::Scalar;

/// Row-wise stable softmax.
pub fn softmax_rows<S: Scalar>(logits: &Array2<S>) -> Array2<S> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
        let mut sum = S::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Row-wise stable log-softmax.
pub fn log_softmax_rows<S: Scalar>(logits: &Array2<S>) -> Array2<S> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(S::neg_infinity(), S::max);
        let sum: S = row.iter().map(|v| (*v - max).exp()).sum();
        let lse = max + sum.ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

/// Shannon entropy in nats of one categorical distribution; zero-probability
/// outcomes contribute nothing.
pub fn entropy_of_probs<S: Scalar>(probs: &[S]) -> S {
    let mut h = S::zero();
    for &p in probs {
        if p > S::zero() {
            h -= p * p.ln();
        }
    }
    h
}

/// Inverse-CDF sample from a categorical distribution given a uniform draw
/// in [0, 1). The final index absorbs any rounding slack.
pub fn sample_categorical<S: Scalar>(probs: &[S], u: f64) -> usize {
    let mut acc = 0.0f64;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.to_f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Clipped-surrogate results: the two reported scalars and the exact
/// gradient with respect to the logits, entropy bonus included.
pub struct PolicyLossOut<S: Scalar> {
    /// −mean min(ψÂ, clip(ψ)Â); excludes the entropy term.
    pub loss: S,
    /// Mean entropy in nats (reported positive; enters the total loss as
    /// −ent_coef·entropy).
    pub entropy: S,
    /// ∂(policy loss − ent_coef·entropy)/∂logits.
    pub dlogits: Array2<S>,
}

/// Clipped surrogate plus entropy bonus over one minibatch.
///
/// ψ_t = exp(logπ_new(a_t) − logπ_old(a_t)); the surrogate for each sample
/// is min(ψÂ, clip(ψ, 1−ε, 1+ε)Â) and gradients flow through whichever arm
/// the min selects (ties favor the unclipped arm, which has the same local
/// derivative inside the band).
pub fn policy_loss_and_grad<S: Scalar>(
    logits: &Array2<S>,
    actions: &[usize],
    logp_old: &[S],
    advantages: &[S],
    clip_eps: S,
    ent_coef: S,
) -> PolicyLossOut<S> {
    let b = logits.nrows();
    assert_eq!(actions.len(), b);
    assert_eq!(logp_old.len(), b);
    assert_eq!(advantages.len(), b);
    let logp = log_softmax_rows(logits);
    let inv_b = S::one() / S::from_usize(b);
    let mut dlogits = Array2::zeros(logits.raw_dim());
    let mut loss = S::zero();
    let mut entropy_sum = S::zero();
    for i in 0..b {
        let a = actions[i];
        let adv = advantages[i];
        let lp_new = logp[[i, a]];
        let ratio = (lp_new - logp_old[i]).exp();
        let lo = S::one() - clip_eps;
        let hi = S::one() + clip_eps;
        let clipped = ratio.max(lo).min(hi);
        let raw_term = ratio * adv;
        let clip_term = clipped * adv;
        let (surrogate, grad_coeff) = if raw_term <= clip_term {
            (raw_term, adv * ratio)
        } else if ratio > lo && ratio < hi {
            (clip_term, adv * ratio)
        } else {
            (clip_term, S::zero())
        };
        loss -= surrogate * inv_b;

        // Entropy of this row, and its gradient dH/dz_k = −p_k(logp_k + H).
        let mut h = S::zero();
        for k in 0..logits.ncols() {
            let p = logp[[i, k]].exp();
            if p > S::zero() {
                h -= p * logp[[i, k]];
            }
        }
        entropy_sum += h;

        for k in 0..logits.ncols() {
            let p = logp[[i, k]].exp();
            let onehot = if k == a { S::one() } else { S::zero() };
            // Surrogate arm: d(−sur)/dz = −coeff · (1[k=a] − p_k) / B.
            let mut g = -grad_coeff * (onehot - p) * inv_b;
            // Entropy arm: d(−c·H)/dz = c · p_k(logp_k + H) / B.
            g += ent_coef * p * (logp[[i, k]] + h) * inv_b;
            dlogits[[i, k]] += g;
        }
    }
    PolicyLossOut { loss, entropy: entropy_sum * inv_b, dlogits }
}

/// Mean-squared-error value loss and its gradient, pre-scaled by `vf_coef`
/// so the caller can hand the gradient straight to the critic's reverse
/// pass. The returned loss is the raw MSE for logging.
pub fn value_loss_and_grad<S: Scalar>(
    values: &Array2<S>,
    targets: &[S],
    vf_coef: S,
) -> (S, Array2<S>) {
    let b = values.nrows();
    assert_eq!(values.ncols(), 1, "critic output is a scalar per sample");
    assert_eq!(targets.len(), b);
    let inv_b = S::one() / S::from_usize(b);
    let mut grad = Array2::zeros(values.raw_dim());
    let mut loss = S::zero();
    for i in 0..b {
        let resid = values[[i, 0]] - targets[i];
        loss += resid * resid * inv_b;
        grad[[i, 0]] = vf_coef * (resid + resid) * inv_b;
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn logits_of(rows: Vec<Vec<f64>>) -> Array2<f64> {
        let b = rows.len();
        let n = rows[0].len();
        Array2::from_shape_vec((b, n), rows.into_iter().flatten().collect()).unwrap()
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax_rows(&logits_of(vec![vec![0.0; 4]]));
        for k in 0..4 {
            assert!((p[[0, k]] - 0.25).abs() < 1e-12);
        }
        let total: f64 = p.row(0).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax_rows(&logits_of(vec![vec![0.3, -1.2, 2.0]]));
        let b = softmax_rows(&logits_of(vec![vec![100.3, 98.8, 102.0]]));
        for k in 0..3 {
            assert!((a[[0, k]] - b[[0, k]]).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_exponentiates_to_probabilities() {
        let lp = log_softmax_rows(&logits_of(vec![vec![1.0, 2.0, -3.0, 0.5]]));
        let total: f64 = lp.row(0).iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn entropy_closed_forms() {
        assert!((entropy_of_probs(&[0.25f64; 4]) - 4.0f64.ln()).abs() < 1e-12);
        assert_eq!(entropy_of_probs(&[1.0f64, 0.0, 0.0]), 0.0);
        assert!((entropy_of_probs(&[0.5f64, 0.5, 0.0, 0.0]) - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sampling_frequencies_match_probabilities() {
        use rand::{Rng, SeedableRng};
        let probs = [0.2f64, 0.5, 0.25, 0.05];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let n = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let u: f64 = rng.random_range(0.0..1.0);
            counts[sample_categorical(&probs, u)] += 1;
        }
        for k in 0..4 {
            let sigma = (probs[k] * (1.0 - probs[k]) / n as f64).sqrt();
            let freq = counts[k] as f64 / n as f64;
            assert!(
                (freq - probs[k]).abs() < 3.0 * sigma,
                "arm {k}: freq {freq} vs p {} (3σ = {})",
                probs[k],
                3.0 * sigma
            );
        }
    }

    #[test]
    fn ratio_one_gives_negative_mean_advantage() {
        let logits = logits_of(vec![vec![0.7, -0.2, 0.1], vec![-1.0, 0.0, 2.0]]);
        let lp = log_softmax_rows(&logits);
        let actions = [2usize, 0];
        let logp_old: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| lp[[i, a]]).collect();
        let advantages = [1.5, -0.5];
        let out = policy_loss_and_grad(&logits, &actions, &logp_old, &advantages, 0.2, 0.0);
        let want = -(1.5 + (-0.5)) / 2.0;
        assert!((out.loss - want).abs() < 1e-12);
    }

    #[test]
    fn positive_advantage_hits_the_clip_ceiling() {
        // One sample; arrange ψ = 1 + 2ε by offsetting logp_old.
        let logits = logits_of(vec![vec![0.0, 0.0]]);
        let lp = log_softmax_rows(&logits);
        let eps = 0.2f64;
        let psi: f64 = 1.0 + 2.0 * eps;
        let logp_old = [lp[[0, 0]] - psi.ln()];
        let adv = [2.0];
        let out = policy_loss_and_grad(&logits, &[0], &logp_old, &adv, eps, 0.0);
        assert!((out.loss - (-(1.0 + eps) * 2.0)).abs() < 1e-12);
        // Fully clipped: no gradient through the surrogate.
        assert!(out.dlogits.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn random_batch_matches_elementwise_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let b = 16;
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..b)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let logits = logits_of(rows);
        let actions: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
        let logp_old: Vec<f64> = (0..b).map(|_| rng.random_range(-3.0..-0.1)).collect();
        let advantages: Vec<f64> = (0..b).map(|_| rng.random_range(-2.0..2.0)).collect();
        let eps = 0.2;
        let out = policy_loss_and_grad(&logits, &actions, &logp_old, &advantages, eps, 0.0);
        // Independent elementwise evaluation.
        let lp = log_softmax_rows(&logits);
        let mut want = 0.0;
        for i in 0..b {
            let psi = (lp[[i, actions[i]]] - logp_old[i]).exp();
            let clipped = psi.clamp(1.0 - eps, 1.0 + eps);
            want -= (psi * advantages[i]).min(clipped * advantages[i]) / b as f64;
        }
        assert!((out.loss - want).abs() < 1e-12);
    }

    #[test]
    fn value_loss_closed_forms() {
        let v = Array2::from_shape_vec((3, 1), vec![1.0f64, -2.0, 0.5]).unwrap();
        let (zero, grad) = value_loss_and_grad(&v, &[1.0, -2.0, 0.5], 0.5);
        assert_eq!(zero, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
        let (one, _) = value_loss_and_grad(&v, &[0.0, -3.0, -0.5], 0.5);
        assert!((one - 1.0).abs() < 1e-12);
        // Batch of 8 against a hand-computed mean of squares.
        let preds: Vec<f64> = (0..8).map(|i| i as f64 * 0.25).collect();
        let targets: Vec<f64> = (0..8).map(|i| 1.0 - i as f64 * 0.5).collect();
        let v8 = Array2::from_shape_vec((8, 1), preds.clone()).unwrap();
        let (mse, _) = value_loss_and_grad(&v8, &targets, 1.0);
        let want: f64 =
            preds.iter().zip(&targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / 8.0;
        assert!((mse - want).abs() < 1e-12);
    }

    proptest! {
        /// Each sample's surrogate never exceeds the band edge on the side
        /// matching the advantage's sign.
        #[test]
        fn surrogate_respects_the_clip_bound(
            logit_a in -3.0f64..3.0,
            logit_b in -3.0f64..3.0,
            logp_old in -4.0f64..-0.01,
            adv in -3.0f64..3.0,
        ) {
            let eps = 0.2;
            let logits = logits_of(vec![vec![logit_a, logit_b]]);
            let out = policy_loss_and_grad(&logits, &[0], &[logp_old], &[adv], eps, 0.0);
            let surrogate = -out.loss;
            let bound = if adv >= 0.0 { (1.0 + eps) * adv } else { (1.0 - eps) * adv };
            prop_assert!(surrogate <= bound + 1e-12,
                "surrogate {} above bound {}", surrogate, bound);
        }
    }
}
