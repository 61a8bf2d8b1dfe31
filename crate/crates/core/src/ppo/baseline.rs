use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::net::PolicySpec;
use super::rollout::Environment;
use crate::env::{episode_return, obs_loss_index, AdaptationMeasure};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Random,
    NoAction,
    GreedyDrainage,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Random, BaselineKind::NoAction, BaselineKind::GreedyDrainage];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::NoAction => "no_action",
            BaselineKind::GreedyDrainage => "greedy_drainage",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown baseline '{s}'")))
    }
}

/// Anything that maps observations to action distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Learned(PolicySpec),
    Baseline(BaselineKind),
}

pub fn make_baseline(kind: BaselineKind) -> Agent {
    Agent::Baseline(kind)
}

/// Adaptation-environment action space: NoOp, then four measures per zone.
fn zones_of(n_actions: usize) -> usize {
    n_actions.saturating_sub(1) / 4
}

/// IncreaseDrainage on the zone with the largest observed loss; lowest zone on ties.
pub fn greedy_drainage_action(obs: &[f64], n_actions: usize) -> usize {
    let z = zones_of(n_actions);
    if z == 0 {
        return 0;
    }
    let mut best = 0;
    for zone in 1..z {
        if obs[obs_loss_index(zone)] > obs[obs_loss_index(best)] {
            best = zone;
        }
    }
    1 + 4 * best + AdaptationMeasure::IncreaseDrainage.index()
}

impl Agent {
    pub fn name(&self) -> String {
        match self {
            Agent::Learned(_) => "ppo".into(),
            Agent::Baseline(k) => k.name().into(),
        }
    }

    pub fn probabilities(&self, obs: &[f64], n_actions: usize) -> Vec<f64> {
        match self {
            Agent::Learned(p) => p.probabilities(obs),
            Agent::Baseline(BaselineKind::Random) => vec![1.0 / n_actions as f64; n_actions],
            Agent::Baseline(kind) => {
                let a = if *kind == BaselineKind::NoAction {
                    0
                } else {
                    greedy_drainage_action(obs, n_actions)
                };
                let mut p = vec![0.0; n_actions];
                p[a] = 1.0;
                p
            }
        }
    }

    /// Evaluation-time action: argmax for learned policies, a uniform draw for Random.
    pub fn act(&self, obs: &[f64], n_actions: usize, rng: &mut ChaCha8Rng) -> usize {
        match self {
            Agent::Learned(p) => p.greedy(obs),
            Agent::Baseline(BaselineKind::Random) => rng.random_range(0..n_actions),
            Agent::Baseline(BaselineKind::NoAction) => 0,
            Agent::Baseline(BaselineKind::GreedyDrainage) => greedy_drainage_action(obs, n_actions),
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Fixed resampling seed so confidence intervals are reproducible.
pub const BOOTSTRAP_SEED: u64 = 0x5EED_B007;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Percentile bootstrap 95% interval of the mean.
pub fn bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single episode.
    pub std: f64,
    pub ci95: (f64, f64),
}

impl EvalSummary {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let std = if returns.len() > 1 {
            (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let ci95 = bootstrap_ci(&returns, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED);
        Self { returns, mean, std, ci95 }
    }
}

/// Per-episode discounted returns, one episode per seed. Action draws of
/// stochastic agents use a stream derived from the episode seed.
pub fn evaluate_policy<E: Environment>(env: &E, agent: &Agent, seeds: &[u64], gamma: f64) -> Result<EvalSummary> {
    if seeds.is_empty() {
        return Err(Error::invalid("evaluation needs at least one episode"));
    }
    let n_actions = env.action_count();
    let mut returns = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xA5A5_5A5A));
        let (mut state, mut obs) = env.reset(seed)?;
        let mut rewards = Vec::new();
        loop {
            let a = agent.act(&obs, n_actions, &mut rng);
            let (next, r, done, next_obs) = env.step(&state, a)?;
            rewards.push(r);
            if done {
                break;
            }
            state = next;
            obs = next_obs;
        }
        returns.push(episode_return(&rewards, gamma));
    }
    Ok(EvalSummary::from_returns(returns))
}

/// Mean of `a - b` over paired episodes with its bootstrap interval.
pub fn paired_difference(a: &EvalSummary, b: &EvalSummary) -> EvalSummary {
    EvalSummary::from_returns(a.returns.iter().zip(&b.returns).map(|(x, y)| x - y).collect())
}
