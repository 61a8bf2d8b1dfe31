use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{log_softmax, PolicySpec, Representation, ValueSpec};
use super::rollout::{compute_gae, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    /// Decay the learning rate linearly to zero over the iterations.
    pub lr_anneal: bool,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Train on rewards minus the environment's reward offset.
    pub center_rewards: bool,
    /// Steps per worker per iteration.
    pub rollout_len: usize,
    /// Independent rollout workers; part of the experiment, not of the hardware.
    pub n_workers: usize,
    pub iterations: usize,
    pub seed: u64,
    pub policy: Representation,
    pub value: Representation,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            epochs: 4,
            minibatch_size: 64,
            learning_rate: 3e-4,
            lr_anneal: true,
            entropy_coef: 0.01,
            value_coef: 0.5,
            center_rewards: true,
            rollout_len: 256,
            n_workers: 4,
            iterations: 100,
            seed: 0,
            policy: Representation::Linear,
            value: Representation::Linear,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let mut keys = Vec::new();
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.gamma) {
            keys.push("gamma");
        }
        if !unit(self.lambda) {
            keys.push("lambda");
        }
        if !(self.clip_eps > 0.0) {
            keys.push("clip_eps");
        }
        if self.epochs == 0 {
            keys.push("epochs");
        }
        if self.minibatch_size == 0 {
            keys.push("minibatch_size");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            keys.push("learning_rate");
        }
        if !(self.entropy_coef >= 0.0 && self.entropy_coef.is_finite()) {
            keys.push("entropy_coef");
        }
        if !(self.value_coef >= 0.0 && self.value_coef.is_finite()) {
            keys.push("value_coef");
        }
        if self.rollout_len == 0 {
            keys.push("rollout_len");
        }
        if self.n_workers == 0 {
            keys.push("n_workers");
        }
        if self.iterations == 0 {
            keys.push("iterations");
        }
        for (key, r) in [("policy.width", self.policy), ("value.width", self.value)] {
            if r == (Representation::OneHiddenLayer { width: 0 }) {
                keys.push(key);
            }
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config {
                keys: keys.into_iter().map(|k| format!("ppo.{k}")).collect(),
            })
        }
    }
}

/// Flattened training samples with advantages and returns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    /// Advantages are estimated per segment, then segments are concatenated in order.
    pub fn from_trajectories(trajs: &[Trajectory], gamma: f64, lambda: f64) -> Self {
        let mut b = Batch::default();
        for t in trajs {
            let (adv, ret) = compute_gae(&t.rewards, &t.values, &t.dones, t.bootstrap, gamma, lambda);
            b.observations.extend(t.observations.iter().cloned());
            b.actions.extend(&t.actions);
            b.log_probs.extend(&t.log_probs);
            b.advantages.extend(adv);
            b.returns.extend(ret);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Shift to mean 0 and scale to (population) standard deviation 1.
/// A constant batch is only centred.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if adv.is_empty() {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if sd > 1e-12 {
            *a /= sd;
        }
    }
}

/// Per-sample clipped surrogate `min(rho A, clip(rho, 1-eps, 1+eps) A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Mean clipped surrogate plus `entropy_coef` times mean entropy over the
/// given samples, with its gradient.
pub fn policy_objective_and_grad(
    policy: &PolicySpec,
    batch: &Batch,
    idx: &[usize],
    clip_eps: f64,
    entropy_coef: f64,
) -> (f64, Vec<f64>, UpdateStats) {
    let net = &policy.net;
    let mut grad = vec![0.0; net.params.len()];
    let mut stats = UpdateStats::default();
    let n = idx.len() as f64;
    let mut g_logits = vec![0.0; net.n_out];
    for &i in idx {
        let obs = &batch.observations[i];
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let logp = log_softmax(&net.forward(obs));
        let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let ratio = (logp[a] - batch.log_probs[i]).exp();
        stats.surrogate += clipped_objective(ratio, adv, clip_eps);
        let entropy: f64 = -p.iter().zip(&logp).map(|(p, l)| p * l).sum::<f64>();
        stats.entropy += entropy;
        if (ratio - 1.0).abs() > clip_eps {
            stats.clip_fraction += 1.0;
        }
        // The clipped branch is flat, so only the unclipped one carries gradient.
        let unclipped_active = ratio * adv <= ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * adv;
        let surr_scale = if unclipped_active { ratio * adv } else { 0.0 };
        for k in 0..net.n_out {
            let onehot = if k == a { 1.0 } else { 0.0 };
            let d_surr = surr_scale * (onehot - p[k]);
            let d_ent = -p[k] * (logp[k] + entropy);
            g_logits[k] = (d_surr + entropy_coef * d_ent) / n;
        }
        net.backward(obs, &g_logits, &mut grad);
    }
    stats.surrogate /= n;
    stats.entropy /= n;
    stats.clip_fraction /= n;
    (stats.surrogate + entropy_coef * stats.entropy, grad, stats)
}

/// Mean squared error against the returns, with its gradient.
pub fn value_loss_and_grad(value: &ValueSpec, batch: &Batch, idx: &[usize]) -> (f64, Vec<f64>) {
    let net = &value.net;
    let mut grad = vec![0.0; net.params.len()];
    let n = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let obs = &batch.observations[i];
        let err = net.forward(obs)[0] - batch.returns[i];
        loss += err * err / n;
        net.backward(obs, &[2.0 * err / n], &mut grad);
    }
    (loss, grad)
}

/// Plain gradient steps on the clipped surrogate (ascent) and the value
/// loss (descent). Advantages are normalized over the whole batch first.
/// Returned statistics average over all minibatches.
pub fn ppo_update(
    policy: &mut PolicySpec,
    value: &mut ValueSpec,
    batch: &Batch,
    config: &PpoConfig,
    learning_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Err(Error::invalid("cannot update on an empty batch"));
    }
    let mut batch = batch.clone();
    normalize_advantages(&mut batch.advantages);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut total = UpdateStats::default();
    let mut n_mb = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for idx in order.chunks(config.minibatch_size) {
            let (_, g_pol, stats) = policy_objective_and_grad(policy, &batch, idx, config.clip_eps, config.entropy_coef);
            let (v_loss, g_val) = value_loss_and_grad(value, &batch, idx);
            if g_pol.iter().chain(&g_val).any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!("non-finite gradient in minibatch {n_mb}")));
            }
            for (p, g) in policy.net.params.iter_mut().zip(&g_pol) {
                *p += learning_rate * g;
            }
            for (p, g) in value.net.params.iter_mut().zip(&g_val) {
                *p -= learning_rate * config.value_coef * g;
            }
            total.surrogate += stats.surrogate;
            total.entropy += stats.entropy;
            total.clip_fraction += stats.clip_fraction;
            total.value_loss += v_loss;
            n_mb += 1;
        }
    }
    let k = n_mb as f64;
    Ok(UpdateStats {
        surrogate: total.surrogate / k,
        value_loss: total.value_loss / k,
        entropy: total.entropy / k,
        clip_fraction: total.clip_fraction / k,
    })
}
