//! Rollout storage for one update: transitions, then advantages and value
//! targets once the segment ends.

use ndarray::Array2;

use super::gae::compute_gae;
use crate::Scalar;

/// Flat storage over all environments' segments; segments are contiguous
/// (environment-major) so advantage estimation can run per segment.
#[derive(Debug, Clone)]
pub struct RolloutBuffer<S: Scalar> {
    pub states: Array2<S>,
    pub actions: Vec<usize>,
    pub rewards: Vec<S>,
    pub dones: Vec<bool>,
    pub values: Vec<S>,
    pub logps: Vec<S>,
    pub advantages: Vec<S>,
    pub targets: Vec<S>,
    len: usize,
}

impl<S: Scalar> RolloutBuffer<S> {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        Self {
            states: Array2::zeros((capacity, obs_dim)),
            actions: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            logps: Vec::with_capacity(capacity),
            advantages: Vec::new(),
            targets: Vec::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.actions.clear();
        self.rewards.clear();
        self.dones.clear();
        self.values.clear();
        self.logps.clear();
        self.advantages.clear();
        self.targets.clear();
        self.len = 0;
    }

    pub fn push(&mut self, state: &[S], action: usize, reward: S, done: bool, value: S, logp: S) {
        assert!(self.len < self.states.nrows(), "rollout buffer overfilled");
        self.states.row_mut(self.len).assign(
            &ndarray::ArrayView1::from(state),
        );
        self.actions.push(action);
        self.rewards.push(reward);
        self.dones.push(done);
        self.values.push(value);
        self.logps.push(logp);
        self.len += 1;
    }

    /// Run advantage estimation per environment segment. `segments` lists
    /// (start, length, bootstrap value) triples covering the buffer exactly.
    pub fn compute_advantages(&mut self, segments: &[(usize, usize, S)], gamma: S, lambda: S) {
        self.advantages.clear();
        self.targets.clear();
        let mut covered = 0usize;
        for &(start, len, bootstrap) in segments {
            assert_eq!(start, covered, "segments must tile the buffer in order");
            let end = start + len;
            let (adv, tgt) = compute_gae(
                &self.rewards[start..end],
                &self.values[start..end],
                &self.dones[start..end],
                bootstrap,
                gamma,
                lambda,
            );
            self.advantages.extend(adv);
            self.targets.extend(tgt);
            covered = end;
        }
        assert_eq!(covered, self.len, "segments must cover every transition");
    }

    /// Center and scale advantages over the whole buffer (population σ, with
    /// a small floor so constant advantages stay finite).
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len();
        if n == 0 {
            return;
        }
        let n_s = S::from_usize(n);
        let mean = self.advantages.iter().cloned().sum::<S>() / n_s;
        let var = self
            .advantages
            .iter()
            .map(|a| (*a - mean) * (*a - mean))
            .sum::<S>()
            / n_s;
        let std = var.sqrt() + S::from_f64(1e-8);
        for a in &mut self.advantages {
            *a = (*a - mean) / std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_centers_and_scales() {
        let mut buf = RolloutBuffer::<f64>::new(64, 3);
        for i in 0..64 {
            let x = (i as f64 * 0.37).sin() * 3.0 + 1.0;
            buf.push(&[0.0, 0.0, 0.0], 0, x, false, 0.0, 0.0);
        }
        buf.compute_advantages(&[(0, 64, 0.0)], 0.9, 0.95);
        buf.normalize_advantages();
        let n = buf.advantages.len() as f64;
        let mean: f64 = buf.advantages.iter().sum::<f64>() / n;
        let var: f64 = buf.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 1e-4, "std {}", var.sqrt());
    }

    #[test]
    fn segments_must_tile_exactly() {
        let mut buf = RolloutBuffer::<f64>::new(8, 1);
        for i in 0..8 {
            buf.push(&[0.0], 0, i as f64, i == 3, 0.1, 0.0);
        }
        buf.compute_advantages(&[(0, 5, 1.0), (5, 3, 0.0)], 0.9, 0.9);
        assert_eq!(buf.advantages.len(), 8);
        assert_eq!(buf.targets.len(), 8);
        // Segment boundary: the second segment's recursion starts fresh; its
        // last element bootstraps with 0 and must equal r − V there.
        assert!((buf.advantages[7] - (7.0 + 0.9 * 0.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "tile the buffer")]
    fn gap_in_segments_panics() {
        let mut buf = RolloutBuffer::<f64>::new(4, 1);
        for _ in 0..4 {
            buf.push(&[0.0], 0, 1.0, false, 0.0, 0.0);
        }
        buf.compute_advantages(&[(0, 2, 0.0), (3, 1, 0.0)], 0.9, 0.9);
    }
}
