use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::net::{Net, PolicySpec, ValueSpec};
use super::rollout::{Environment, RolloutWorker, Trajectory};
use super::update::{ppo_update, Batch, PpoConfig, UpdateStats};
use crate::env::episode_return;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Mean discounted return of episodes finished during this iteration's rollouts.
    pub mean_return: Option<f64>,
    pub stats: UpdateStats,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PolicySpec,
    pub value: ValueSpec,
    pub log: Vec<IterationLog>,
}

/// Fresh policy and value networks sized for `env`.
pub fn init_networks<E: Environment>(env: &E, config: &PpoConfig, rng: &mut ChaCha8Rng) -> (PolicySpec, ValueSpec) {
    let (n_in, n_act) = (env.observation_len(), env.action_count());
    let policy = PolicySpec::new(Net::init(config.policy, n_in, n_act, 0.01, rng));
    let value = ValueSpec::new(Net::init(config.value, n_in, 1, 1.0, rng));
    (policy, value)
}

/// PPO training. Worker seeds come from `config.seed`, and worker outputs are
/// merged in worker order, so the result does not depend on the thread count.
pub fn train<E: Environment>(env: &E, config: &PpoConfig) -> Result<TrainOutcome> {
    train_with(env, config, |_, _, _, _| Ok(()))
}

/// As [`train`], calling `on_iteration` after every update.
pub fn train_with<E, F>(env: &E, config: &PpoConfig, mut on_iteration: F) -> Result<TrainOutcome>
where
    E: Environment,
    F: FnMut(usize, &PolicySpec, &ValueSpec, &IterationLog) -> Result<()>,
{
    config.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut policy, mut value) = init_networks(env, config, &mut rng);
    let mut workers: Vec<RolloutWorker<E::State>> =
        (0..config.n_workers).map(|_| RolloutWorker::new(rng.random())).collect();
    let offset = if config.center_rewards { env.reward_offset() } else { 0.0 };
    let mut log = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let results: Vec<Result<(Trajectory, Vec<Vec<f64>>)>> = workers
            .par_iter_mut()
            .map(|w| w.collect(env, &policy, &value, config.rollout_len, offset))
            .collect();
        let mut trajs = Vec::with_capacity(results.len());
        let mut returns = Vec::new();
        for r in results {
            let (t, finished) = r?;
            trajs.push(t);
            returns.extend(finished.iter().map(|ep| episode_return(ep, config.gamma)));
        }
        let batch = Batch::from_trajectories(&trajs, config.gamma, config.lambda);
        let lr = if config.lr_anneal {
            config.learning_rate * (1.0 - it as f64 / config.iterations as f64)
        } else {
            config.learning_rate
        };
        let stats = ppo_update(&mut policy, &mut value, &batch, config, lr, &mut rng)?;
        let entry = IterationLog {
            iteration: it,
            mean_return: (!returns.is_empty()).then(|| returns.iter().sum::<f64>() / returns.len() as f64),
            stats,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        on_iteration(it, &policy, &value, &entry)?;
        log.push(entry);
    }
    Ok(TrainOutcome { policy, value, log })
}

/// `iteration,mean_return,surrogate,value_loss,entropy,clip_fraction[,wall_time_s]`.
/// Wall time is opt-in so that logs of identical runs are identical files.
pub fn format_training_log(log: &[IterationLog], wall_time: bool) -> String {
    let mut out = String::from("iteration,mean_return,surrogate,value_loss,entropy,clip_fraction");
    if wall_time {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for e in log {
        let ret = e.mean_return.map(|r| r.to_string()).unwrap_or_default();
        let s = &e.stats;
        let _ = write!(
            out,
            "{},{ret},{},{},{},{}",
            e.iteration, s.surrogate, s.value_loss, s.entropy, s.clip_fraction
        );
        if wall_time {
            let _ = write!(out, ",{}", e.wall_time_s);
        }
        out.push('\n');
    }
    out
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Hex SHA-256 of the configuration's canonical JSON.
pub fn config_hash(config: &PpoConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub iteration: usize,
    pub policy: PolicySpec,
    pub value: ValueSpec,
    pub config: PpoConfig,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn new(iteration: usize, policy: &PolicySpec, value: &ValueSpec, config: &PpoConfig) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            iteration,
            policy: policy.clone(),
            value: value.clone(),
            config: config.clone(),
            config_hash: config_hash(config),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::parse(path, e.line(), "checkpoint", e.to_string()))?;
        if c.format_version != CHECKPOINT_VERSION {
            return Err(Error::parse(path, 0, "format_version", format!("unsupported version {}", c.format_version)));
        }
        if c.config_hash != config_hash(&c.config) {
            return Err(Error::parse(path, 0, "config_hash", "does not match the stored configuration"));
        }
        c.policy.net.validate().map_err(|e| Error::parse(path, 0, "policy", e.to_string()))?;
        c.value.net.validate().map_err(|e| Error::parse(path, 0, "value", e.to_string()))?;
        if c.value.net.n_out != 1 || c.value.net.n_in != c.policy.net.n_in {
            return Err(Error::parse(path, 0, "value", "shape does not match the policy"));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}
