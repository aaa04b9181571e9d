//! Dense multilayer perceptron with leaky-rectifier hidden layers and a linear
//! output, stored as one flat parameter vector.
//!
//! Parameter layout: for each layer in order, the weight matrix row-major
//! (`out x in`) followed by the bias vector.

use rand::Rng;

use crate::error::{Error, Result};

use super::state::{N_ACTIONS, STATE_DIM};

pub const LEAKY_SLOPE: f64 = 0.01;
/// Layer widths of the Q-network.
pub const Q_LAYERS: [usize; 4] = [STATE_DIM, 24, 16, N_ACTIONS];

fn lrelu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn lrelu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// One regression sample: only `Q(state, action)` is pulled toward `target`.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub state: &'a [f64],
    pub action: usize,
    pub target: f64,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl QNetwork {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        })
    }

    /// Uniform `+-1/sqrt(fan_in)` initialization for weights and biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for p in &mut net.params[off..off + w[0] * w[1] + w[1]] {
                *p = rng.gen_range(-bound..bound);
            }
            off += w[0] * w[1] + w[1];
        }
        Ok(net)
    }

    /// The 22-24-16-5 Q-network.
    pub fn standard<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::init(&Q_LAYERS, rng).expect("static layer sizes are valid")
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = param_count(sizes);
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "{} parameters for layers {sizes:?}, expected {expected}",
                params.len()
            )));
        }
        let mut net = Self::zeros(sizes)?;
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Forward pass, recording pre-activations per layer (bias-added).
    fn forward_into(&self, input: &[f64], pre: &mut [Vec<f64>], act: &mut [Vec<f64>]) {
        let n_layers = self.sizes.len() - 1;
        act[0].clear();
        act[0].extend_from_slice(input);
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            let (before, after) = act.split_at_mut(l + 1);
            let x = &before[l];
            let z = &mut pre[l];
            z.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                z.push(b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
            }
            let y = &mut after[0];
            y.clear();
            if l + 1 == n_layers {
                y.extend_from_slice(z);
            } else {
                y.extend(z.iter().map(|&v| lrelu(v)));
            }
        }
    }

    fn buffers(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let pre = self.sizes[1..].iter().map(|&n| Vec::with_capacity(n)).collect();
        let act = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        (pre, act)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input of length {}, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let (mut pre, mut act) = self.buffers();
        self.forward_into(input, &mut pre, &mut act);
        Ok(act.pop().expect("output layer"))
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// every parameter.
    pub fn loss_and_gradient(&self, batch: &[Sample<'_>]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Training("empty minibatch".into()));
        }
        let n_layers = self.sizes.len() - 1;
        let mut grad = vec![0.0; self.params.len()];
        let (mut pre, mut act) = self.buffers();
        let mut delta: Vec<f64> = Vec::new();
        let mut next_delta: Vec<f64> = Vec::new();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;

        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |off, w| {
                let start = *off;
                *off += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();

        for sample in batch {
            self.check_input(sample.state)?;
            if sample.action >= self.output_dim() {
                return Err(Error::Shape(format!("action {} out of range", sample.action)));
            }
            if !sample.target.is_finite() || sample.state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Training("non-finite value in training sample".into()));
            }
            self.forward_into(sample.state, &mut pre, &mut act);
            let q = act[n_layers][sample.action];
            let residual = q - sample.target;
            loss += residual * residual * scale;

            delta.clear();
            delta.resize(self.output_dim(), 0.0);
            delta[sample.action] = 2.0 * residual * scale;

            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let off = offsets[l];
                let x = &act[l];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let g_row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (g, xi) in g_row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    grad[off + n_in * n_out + o] += d;
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[off..off + n_in * n_out];
                next_delta.clear();
                next_delta.resize(n_in, 0.0);
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (nd, wi) in next_delta.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *nd += d * wi;
                    }
                }
                for (nd, &z) in next_delta.iter_mut().zip(&pre[l - 1]) {
                    *nd *= lrelu_grad(z);
                }
                std::mem::swap(&mut delta, &mut next_delta);
            }
        }
        Ok((loss, grad))
    }

    /// Mean squared error without the gradient.
    pub fn loss(&self, batch: &[Sample<'_>]) -> Result<f64> {
        let mut total = 0.0;
        for s in batch {
            let q = self.forward(s.state)?[s.action];
            total += (q - s.target).powi(2);
        }
        Ok(total / batch.len().max(1) as f64)
    }
}
