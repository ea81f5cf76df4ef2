//! Multilayer perceptron with tanh hidden activations and a linear head,
//! orthogonally initialized, with an exact hand-written reverse pass.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// One dense layer; `w` has shape (out, in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Layer<S: Scalar> {
    pub w: Array2<S>,
    pub b: Array1<S>,
}

impl<S: Scalar> Layer<S> {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Self { w: Array2::zeros((out, inp)), b: Array1::zeros(out) }
    }
}

/// Visitation order over parameter (or gradient) slices is the contract
/// between the network, the optimizer state, and checkpoints: layer by
/// layer, weights before biases.
pub trait GradVisitor<S: Scalar> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[S]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [S]));
}

/// Orthogonal matrix scaled by `gain`, via Gram-Schmidt on a Gaussian draw
/// (two projection passes for orthogonality well below working precision).
/// Rectangular shapes get orthonormal columns if tall, orthonormal rows if
/// wide. Draws happen in f64 so every scalar width sees the same stream.
fn orthogonal<S: Scalar>(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Array2<S> {
    use rand::Rng;
    let n = rows.max(cols);
    let m = rows.min(cols);
    let mut g = vec![vec![0.0f64; m]; n];
    for row in g.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.sample(StandardNormal);
        }
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut v: Vec<f64> = (0..n).map(|r| g[r][j]).collect();
        for _pass in 0..2 {
            for prev in &q {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= dot * pi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 0.0, "Gaussian draw is almost surely full rank");
        for vi in &mut v {
            *vi /= norm;
        }
        q.push(v);
    }
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let val = if rows >= cols { q[c][r] } else { q[r][c] };
        S::from_f64(gain * val)
    })
}

/// The network: hidden layers activate with tanh, the head is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Mlp<S: Scalar> {
    pub layers: Vec<Layer<S>>,
}

/// Forward-pass record: the input followed by each hidden layer's
/// post-activation output. The head output is returned separately.
pub struct ForwardCache<S: Scalar> {
    acts: Vec<Array2<S>>,
}

impl<S: Scalar> Mlp<S> {
    /// `sizes` runs input → hidden… → output. Hidden weights use gain √2,
    /// the head uses `head_gain`; biases start at zero.
    pub fn orthogonal_init(sizes: &[usize], head_gain: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for i in 0..sizes.len() - 1 {
            let (inp, out) = (sizes[i], sizes[i + 1]);
            let gain = if i + 2 == sizes.len() { head_gain } else { std::f64::consts::SQRT_2 };
            layers.push(Layer { w: orthogonal(out, inp, gain, rng), b: Array1::zeros(out) });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    /// Gradient container with this network's shapes, all zero.
    pub fn zero_grads(&self) -> Vec<Layer<S>> {
        self.layers
            .iter()
            .map(|l| Layer::zeros(l.w.nrows(), l.w.ncols()))
            .collect()
    }

    pub fn forward(&self, x: &Array2<S>) -> Array2<S> {
        self.forward_cached(x).0
    }

    pub fn forward_one(&self, x: &[S]) -> Vec<S> {
        let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("one row");
        self.forward(&row).row(0).to_vec()
    }

    /// Batch forward, keeping what the reverse pass needs.
    pub fn forward_cached(&self, x: &Array2<S>) -> (Array2<S>, ForwardCache<S>) {
        assert_eq!(x.ncols(), self.input_dim(), "input width mismatch");
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.clone());
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = cur.dot(&layer.w.t());
            z += &layer.b;
            if i + 1 < self.layers.len() {
                cur = z.mapv(|v| v.tanh());
                acts.push(cur.clone());
            } else {
                cur = z;
            }
        }
        (cur, ForwardCache { acts })
    }

    /// Exact gradients of a scalar loss given ∂loss/∂output. Returns per-layer
    /// gradients shaped like the parameters.
    pub fn backward(&self, cache: &ForwardCache<S>, grad_out: &Array2<S>) -> Vec<Layer<S>> {
        let n_layers = self.layers.len();
        assert_eq!(cache.acts.len(), n_layers, "cache does not match network");
        let mut grads = self.zero_grads();
        let mut g = grad_out.clone();
        for l in (0..n_layers).rev() {
            let a_prev = &cache.acts[l];
            grads[l].w = g.t().dot(a_prev);
            grads[l].b = g.sum_axis(Axis(0));
            if l > 0 {
                let mut upstream = g.dot(&self.layers[l].w);
                let deriv = cache.acts[l].mapv(|a| S::one() - a * a);
                upstream *= &deriv;
                g = upstream;
            }
        }
        grads
    }
}

impl<S: Scalar> GradVisitor<S> for Mlp<S> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[S])) {
        for (i, layer) in self.layers.iter().enumerate() {
            f(&format!("layer{i}/w"), layer.w.as_slice().expect("standard layout"));
            f(&format!("layer{i}/b"), layer.b.as_slice().expect("standard layout"));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            f(&format!("layer{i}/w"), layer.w.as_slice_mut().expect("standard layout"));
            f(&format!("layer{i}/b"), layer.b.as_slice_mut().expect("standard layout"));
        }
    }
}

impl<S: Scalar> GradVisitor<S> for Vec<Layer<S>> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[S])) {
        for (i, layer) in self.iter().enumerate() {
            f(&format!("layer{i}/w"), layer.w.as_slice().expect("standard layout"));
            f(&format!("layer{i}/b"), layer.b.as_slice().expect("standard layout"));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        for (i, layer) in self.iter_mut().enumerate() {
            f(&format!("layer{i}/w"), layer.w.as_slice_mut().expect("standard layout"));
            f(&format!("layer{i}/b"), layer.b.as_slice_mut().expect("standard layout"));
        }
    }
}
