//! Bias-corrected Adam over an arbitrary parameter visitation, plus global
//! gradient-norm clipping. One optimizer instance covers the actor and the
//! critic together; the visitation order is the alignment contract.

use serde::{Deserialize, Serialize};

use super::mlp::GradVisitor;
use super::PpoError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct AdamConfig<S: Scalar> {
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> Default for AdamConfig<S> {
    fn default() -> Self {
        Self {
            beta1: S::from_f64(0.9),
            beta2: S::from_f64(0.999),
            eps: S::from_f64(1e-8),
        }
    }
}

/// First/second moment accumulators, one pair of slots per visited slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AdamState<S: Scalar> {
    pub cfg: AdamConfig<S>,
    pub step: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    /// Zero moments shaped after `params`' visitation.
    pub fn new(params: &dyn GradVisitor<S>, cfg: AdamConfig<S>) -> Self {
        let mut m = Vec::new();
        params.visit(&mut |_, slice| m.push(vec![S::zero(); slice.len()]));
        let v = m.clone();
        Self { cfg, step: 0, m, v }
    }

    /// One update of `params` along `grads` with learning rate `lr`.
    /// A non-finite gradient aborts with the offending parameter path.
    pub fn apply(
        &mut self,
        params: &mut dyn GradVisitor<S>,
        grads: &dyn GradVisitor<S>,
        lr: S,
    ) -> Result<(), PpoError> {
        // Collect gradient slices first so shapes can be verified and the
        // finite check happens before any parameter is touched.
        let mut gs: Vec<(String, Vec<S>)> = Vec::with_capacity(self.m.len());
        grads.visit(&mut |name, slice| gs.push((name.to_string(), slice.to_vec())));
        if gs.len() != self.m.len() {
            return Err(PpoError::ShapeMismatch(format!(
                "optimizer tracks {} slices, gradients provide {}",
                self.m.len(),
                gs.len()
            )));
        }
        for (i, (name, g)) in gs.iter().enumerate() {
            if g.len() != self.m[i].len() {
                return Err(PpoError::ShapeMismatch(format!(
                    "{name}: optimizer slot holds {} values, gradient has {}",
                    self.m[i].len(),
                    g.len()
                )));
            }
            if let Some(j) = g.iter().position(|x| !x.is_finite()) {
                return Err(PpoError::NonFiniteGradient { path: format!("{name}[{j}]") });
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bc1 = S::one() - b1.powi(t);
        let bc2 = S::one() - b2.powi(t);
        let mut idx = 0usize;
        let m = &mut self.m;
        let v = &mut self.v;
        let cfg = self.cfg;
        params.visit_mut(&mut |_, p| {
            let g = &gs[idx].1;
            let ms = &mut m[idx];
            let vs = &mut v[idx];
            for k in 0..p.len() {
                ms[k] = b1 * ms[k] + (S::one() - b1) * g[k];
                vs[k] = b2 * vs[k] + (S::one() - b2) * g[k] * g[k];
                let m_hat = ms[k] / bc1;
                let v_hat = vs[k] / bc2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            idx += 1;
        });
        Ok(())
    }
}

/// Scale all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<S: Scalar>(grads: &mut dyn GradVisitor<S>, max_norm: S) -> S {
    let mut sq = S::zero();
    grads.visit(&mut |_, slice| {
        for &g in slice {
            sq += g * g;
        }
    });
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.visit_mut(&mut |_, slice| {
            for g in slice {
                *g *= scale;
            }
        });
    }
    norm
}
