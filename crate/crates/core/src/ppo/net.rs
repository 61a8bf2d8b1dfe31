use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Representation {
    /// Affine map of the observation.
    Linear,
    /// One tanh hidden layer followed by an affine output layer.
    OneHiddenLayer { width: usize },
}

impl Representation {
    pub fn param_count(self, n_in: usize, n_out: usize) -> usize {
        match self {
            Representation::Linear => n_out * (n_in + 1),
            Representation::OneHiddenLayer { width } => width * (n_in + 1) + n_out * (width + 1),
        }
    }
}

/// Small dense network with a flat parameter vector.
///
/// Layout: `W` row-major (`n_out x n_in`) then bias for the linear form;
/// `W1, b1, W2, b2` for the hidden-layer form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Net {
    pub representation: Representation,
    pub n_in: usize,
    pub n_out: usize,
    pub params: Vec<f64>,
}

impl Net {
    pub fn zeros(representation: Representation, n_in: usize, n_out: usize) -> Self {
        Self {
            representation,
            n_in,
            n_out,
            params: vec![0.0; representation.param_count(n_in, n_out)],
        }
    }

    /// Linear nets start at zero. Hidden layers get `N(0, 1/n_in)` input
    /// weights and output weights scaled by `out_scale`.
    pub fn init(representation: Representation, n_in: usize, n_out: usize, out_scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(representation, n_in, n_out);
        if let Representation::OneHiddenLayer { width } = representation {
            let s_in = 1.0 / (n_in.max(1) as f64).sqrt();
            let s_out = out_scale / (width.max(1) as f64).sqrt();
            let w1 = width * n_in;
            let w2_start = width * (n_in + 1);
            for k in 0..w1 {
                net.params[k] = s_in * Distribution::<f64>::sample(&StandardNormal, rng);
            }
            for k in 0..n_out * width {
                net.params[w2_start + k] = s_out * Distribution::<f64>::sample(&StandardNormal, rng);
            }
        }
        net
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_out == 0 {
            return Err(Error::invalid("network needs at least one input and one output"));
        }
        if let Representation::OneHiddenLayer { width: 0 } = self.representation {
            return Err(Error::invalid("hidden layer width must be positive"));
        }
        let expect = self.representation.param_count(self.n_in, self.n_out);
        if self.params.len() != expect {
            return Err(Error::invalid(format!(
                "network has {} parameters, its shape needs {expect}",
                self.params.len()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).1
    }

    fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(x.len(), self.n_in);
        let p = &self.params;
        match self.representation {
            Representation::Linear => (Vec::new(), affine(p, 0, x, self.n_out)),
            Representation::OneHiddenLayer { width } => {
                let mut h = affine(p, 0, x, width);
                for v in &mut h {
                    *v = v.tanh();
                }
                let out = affine(p, width * (self.n_in + 1), &h, self.n_out);
                (h, out)
            }
        }
    }

    /// Adds `d(sum_k g_k out_k)/d params` into `grad`.
    pub fn backward(&self, x: &[f64], grad_out: &[f64], grad: &mut [f64]) {
        let (h, _) = self.forward_cached(x);
        match self.representation {
            Representation::Linear => affine_backward(grad, 0, x, grad_out),
            Representation::OneHiddenLayer { width } => {
                let off2 = width * (self.n_in + 1);
                affine_backward(grad, off2, &h, grad_out);
                let mut gz = vec![0.0; width];
                for (k, &g) in grad_out.iter().enumerate() {
                    let row = &self.params[off2 + k * width..off2 + (k + 1) * width];
                    for (z, w) in gz.iter_mut().zip(row) {
                        *z += g * w;
                    }
                }
                for (z, hv) in gz.iter_mut().zip(&h) {
                    *z *= 1.0 - hv * hv;
                }
                affine_backward(grad, 0, x, &gz);
            }
        }
    }
}

/// `W x + b` where `W` (`n_out x x.len()`) starts at `off` and `b` follows it.
fn affine(p: &[f64], off: usize, x: &[f64], n_out: usize) -> Vec<f64> {
    let n_in = x.len();
    let b = off + n_out * n_in;
    (0..n_out)
        .map(|k| {
            let row = &p[off + k * n_in..off + (k + 1) * n_in];
            row.iter().zip(x).fold(p[b + k], |acc, (w, v)| acc + w * v)
        })
        .collect()
}

fn affine_backward(grad: &mut [f64], off: usize, x: &[f64], g: &[f64]) {
    let n_in = x.len();
    let b = off + g.len() * n_in;
    for (k, &gk) in g.iter().enumerate() {
        for (j, &xj) in x.iter().enumerate() {
            grad[off + k * n_in + j] += gk * xj;
        }
        grad[b + k] += gk;
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Categorical policy: softmax over network outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicySpec {
    pub net: Net,
}

impl PolicySpec {
    pub fn new(net: Net) -> Self {
        Self { net }
    }

    pub fn action_count(&self) -> usize {
        self.net.n_out
    }

    pub fn observation_len(&self) -> usize {
        self.net.n_in
    }

    pub fn probabilities(&self, obs: &[f64]) -> Vec<f64> {
        softmax(&self.net.forward(obs))
    }

    pub fn log_probabilities(&self, obs: &[f64]) -> Vec<f64> {
        log_softmax(&self.net.forward(obs))
    }

    /// Inverse-CDF draw; returns the action and its log-probability.
    pub fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> (usize, f64) {
        let logp = self.log_probabilities(obs);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut action = logp.len() - 1;
        for (a, lp) in logp.iter().enumerate() {
            acc += lp.exp();
            if u < acc {
                action = a;
                break;
            }
        }
        (action, logp[action])
    }

    /// Most probable action, lowest index on ties.
    pub fn greedy(&self, obs: &[f64]) -> usize {
        argmax(&self.net.forward(obs))
    }
}

/// State-value function with a scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueSpec {
    pub net: Net,
}

impl ValueSpec {
    pub fn new(net: Net) -> Self {
        Self { net }
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.net.forward(obs)[0]
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
