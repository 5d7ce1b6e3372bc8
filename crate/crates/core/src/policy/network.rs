//! The ratio policy: a small fully connected network mapping a curvature
//! summary to the two shape parameters of a Beta distribution.
//!
//! Layers are `67 → 32 → 32 → 2` with tanh hidden units. Both outputs pass
//! through `softplus(x) + 1`, which keeps the density unimodal and bounded.
//! Parameters live in one flat vector, layer by layer, each layer storing
//! its weights row-major (`out × in`) followed by its biases.

use rand::Rng;

use super::summary::{CurvatureSummary, SUMMARY_LEN};
use crate::error::{Error, Result};

pub const HIDDEN: usize = 32;
pub const LAYER_WIDTHS: [usize; 4] = [SUMMARY_LEN, HIDDEN, HIDDEN, 2];

pub fn param_count() -> usize {
    LAYER_WIDTHS.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaPolicy {
    params: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub alpha: f64,
    pub beta: f64,
    input: Vec<f64>,
    hidden: [Vec<f64>; 2],
    logits: [f64; 2],
}

impl BetaPolicy {
    /// All parameters zero: every input maps to `α = β = 1 + ln 2`.
    pub fn zeros() -> Self {
        Self {
            params: vec![0.0; param_count()],
        }
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(param_count());
        for w in LAYER_WIDTHS.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Self { params }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != param_count() {
            return Err(Error::InvalidArgument(format!(
                "policy expects {} parameters, got {}",
                param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite policy parameter".into()));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, s: &CurvatureSummary) -> Result<(f64, f64)> {
        let pass = self.forward_features(&s.features())?;
        Ok((pass.alpha, pass.beta))
    }

    pub fn forward_features(&self, input: &[f64]) -> Result<ForwardPass> {
        if input.len() != LAYER_WIDTHS[0] {
            return Err(Error::LengthMismatch {
                expected: LAYER_WIDTHS[0],
                found: input.len(),
            });
        }
        let mut offset = 0;
        let h1 = dense(&self.params, &mut offset, input, LAYER_WIDTHS[1], true);
        let h2 = dense(&self.params, &mut offset, &h1, LAYER_WIDTHS[2], true);
        let out = dense(&self.params, &mut offset, &h2, LAYER_WIDTHS[3], false);
        let logits = [out[0], out[1]];
        let alpha = softplus(logits[0]) + 1.0;
        let beta = softplus(logits[1]) + 1.0;
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite policy output: logits {logits:?}"
            )));
        }
        Ok(ForwardPass {
            alpha,
            beta,
            input: input.to_vec(),
            hidden: [h1, h2],
            logits,
        })
    }

    /// Gradient with respect to every parameter, given the upstream
    /// derivatives `(∂L/∂α, ∂L/∂β)` at a forward pass.
    pub fn backward(&self, pass: &ForwardPass, d_alpha: f64, d_beta: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let [n0, n1, n2, n3] = LAYER_WIDTHS;
        let off1 = 0;
        let off2 = off1 + n0 * n1 + n1;
        let off3 = off2 + n1 * n2 + n2;

        let d_out = [
            d_alpha * sigmoid(pass.logits[0]),
            d_beta * sigmoid(pass.logits[1]),
        ];
        let d_h2 = dense_backward(&self.params, &mut grad, off3, &pass.hidden[1], &d_out, n3);
        let d_z2: Vec<f64> = d_h2
            .iter()
            .zip(&pass.hidden[1])
            .map(|(d, h)| d * (1.0 - h * h))
            .collect();
        let d_h1 = dense_backward(&self.params, &mut grad, off2, &pass.hidden[0], &d_z2, n2);
        let d_z1: Vec<f64> = d_h1
            .iter()
            .zip(&pass.hidden[0])
            .map(|(d, h)| d * (1.0 - h * h))
            .collect();
        dense_backward(&self.params, &mut grad, off1, &pass.input, &d_z1, n1);
        grad
    }
}

/// `y = W x + b`, optionally through tanh. Advances `offset` past the layer.
fn dense(params: &[f64], offset: &mut usize, x: &[f64], out: usize, tanh: bool) -> Vec<f64> {
    let n_in = x.len();
    let weights = &params[*offset..*offset + out * n_in];
    let bias = &params[*offset + out * n_in..*offset + out * n_in + out];
    *offset += out * n_in + out;
    weights
        .chunks_exact(n_in)
        .zip(bias)
        .map(|(row, b)| {
            let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            if tanh {
                z.tanh()
            } else {
                z
            }
        })
        .collect()
}

/// Accumulates weight and bias gradients for the layer at `offset` and
/// returns the gradient with respect to its input.
fn dense_backward(
    params: &[f64],
    grad: &mut [f64],
    offset: usize,
    x: &[f64],
    d_z: &[f64],
    out: usize,
) -> Vec<f64> {
    let n_in = x.len();
    let mut d_x = vec![0.0; n_in];
    for o in 0..out {
        let row = offset + o * n_in;
        for i in 0..n_in {
            grad[row + i] += d_z[o] * x[i];
            d_x[i] += params[row + i] * d_z[o];
        }
        grad[offset + out * n_in + o] += d_z[o];
    }
    d_x
}
