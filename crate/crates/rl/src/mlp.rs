//! Fully connected tanh network over a flat parameter vector.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Layer widths, input first. Hidden layers use tanh, the output is linear.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub sizes: Vec<usize>,
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        MlpShape { sizes }
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().expect("at least one layer")
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Offsets of (weights, bias) of layer `l` in the flat vector.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut at = 0;
        for k in 0..l {
            at += self.sizes[k] * self.sizes[k + 1] + self.sizes[k + 1];
        }
        (at, at + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn param_count(&self) -> usize {
        (0..self.layers()).map(|l| self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1]).sum()
    }
}

/// Activations kept from a batched forward pass for backprop.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each layer; `acts[0]` is the batch itself, rows are samples.
    acts: Vec<DMatrix<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub shape: MlpShape,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(shape: MlpShape) -> Self {
        let n = shape.param_count();
        Mlp { shape, params: vec![0.0; n] }
    }

    /// Glorot-uniform weights, zero biases, output layer scaled by `out_scale`.
    pub fn init<R: Rng>(shape: MlpShape, out_scale: f64, rng: &mut R) -> Self {
        let mut m = Mlp::zeros(shape);
        for l in 0..m.shape.layers() {
            let (fan_in, fan_out) = (m.shape.sizes[l], m.shape.sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let scale = if l + 1 == m.shape.layers() { out_scale } else { 1.0 };
            let (w, b) = m.shape.offsets(l);
            for p in &mut m.params[w..b] {
                *p = rng.random_range(-bound..bound) * scale;
            }
        }
        m
    }

    fn weights(&self, l: usize) -> DMatrix<f64> {
        let (w, _) = self.shape.offsets(l);
        let (r, c) = (self.shape.sizes[l], self.shape.sizes[l + 1]);
        // Stored row-major as `in x out`.
        DMatrix::from_row_slice(r, c, &self.params[w..w + r * c])
    }

    fn bias(&self, l: usize) -> &[f64] {
        let (_, b) = self.shape.offsets(l);
        &self.params[b..b + self.shape.sizes[l + 1]]
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, ForwardCache) {
        assert_eq!(x.ncols(), self.shape.input(), "input width mismatch");
        let mut acts = vec![x.clone()];
        let mut h = x.clone();
        for l in 0..self.shape.layers() {
            let mut z = &h * self.weights(l);
            let b = self.bias(l);
            for mut row in z.row_iter_mut() {
                for (v, bi) in row.iter_mut().zip(b) {
                    *v += bi;
                }
            }
            if l + 1 < self.shape.layers() {
                z.apply(|v| *v = v.tanh());
                acts.push(z.clone());
            }
            h = z;
        }
        (h, ForwardCache { acts })
    }

    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        let (out, _) = self.forward(&DMatrix::from_row_slice(1, x.len(), x));
        out.row(0).iter().copied().collect()
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &DMatrix<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let mut delta = d_out.clone();
        for l in (0..self.shape.layers()).rev() {
            let input = &cache.acts[l];
            let gw = input.transpose() * &delta;
            let (w, b) = self.shape.offsets(l);
            let cols = self.shape.sizes[l + 1];
            for i in 0..gw.nrows() {
                for j in 0..cols {
                    grad[w + i * cols + j] += gw[(i, j)];
                }
            }
            for j in 0..cols {
                grad[b + j] += delta.column(j).sum();
            }
            if l > 0 {
                let mut back = &delta * self.weights(l).transpose();
                // tanh' = 1 - tanh^2, and acts[l] holds tanh outputs.
                back.zip_apply(input, |d, a| *d *= 1.0 - a * a);
                delta = back;
            }
        }
    }
}
