use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::net::{PolicySpec, ValueSpec};
use crate::env::{AdaptationAction, AdaptationEnv, EnvState};
use crate::error::{Error, Result};

/// Episodic environment with a discrete action space and functional state.
pub trait Environment: Sync {
    type State: Clone + Send;

    fn observation_len(&self) -> usize;
    fn action_count(&self) -> usize;
    fn reset(&self, seed: u64) -> Result<(Self::State, Vec<f64>)>;
    /// Returns the next state, reward, done flag and next observation.
    fn step(&self, state: &Self::State, action: usize) -> Result<(Self::State, f64, bool, Vec<f64>)>;

    /// Reward level subtracted from every reward during training when
    /// `PpoConfig::center_rewards` is set. Episodes of fixed length make
    /// this shift policy-invariant.
    fn reward_offset(&self) -> f64 {
        0.0
    }
}

impl Environment for AdaptationEnv {
    type State = EnvState;

    fn observation_len(&self) -> usize {
        AdaptationEnv::observation_len(self)
    }

    fn action_count(&self) -> usize {
        AdaptationEnv::action_count(self)
    }

    fn reset(&self, seed: u64) -> Result<(EnvState, Vec<f64>)> {
        AdaptationEnv::reset(self, seed)
    }

    fn step(&self, state: &EnvState, action: usize) -> Result<(EnvState, f64, bool, Vec<f64>)> {
        let action = AdaptationAction::from_index(action, self.n_zones())?;
        let (next, tr) = AdaptationEnv::step(self, state, action)?;
        Ok((next, tr.reward, tr.done, tr.observation))
    }

    /// Reward of a flood-free step without any action.
    fn reward_offset(&self) -> f64 {
        self.reward_for(self.baseline_wellbeing(), AdaptationAction::NoOp)
    }
}

/// One contiguous rollout segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    /// Behaviour-policy log-probabilities of the taken actions.
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when the step ended an episode.
    pub dones: Vec<bool>,
    /// Value of the observation following the last step; 0 if it ended an episode.
    pub bootstrap: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Persistent rollout stream: carries the episode in progress across
/// successive collections.
#[derive(Debug, Clone)]
pub struct RolloutWorker<S> {
    state: Option<(S, Vec<f64>)>,
    rng: ChaCha8Rng,
    episode_rewards: Vec<f64>,
    steps: usize,
}

impl<S: Clone + Send> RolloutWorker<S> {
    pub fn new(seed: u64) -> Self {
        Self {
            state: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            episode_rewards: Vec::new(),
            steps: 0,
        }
    }

    /// Runs `n_steps` steps, resetting on episode end with seeds drawn from
    /// the worker's stream. Stored rewards are shifted by `-reward_offset`.
    /// Also returns the unshifted reward sequences of episodes completed
    /// during this call.
    pub fn collect<E: Environment<State = S>>(
        &mut self,
        env: &E,
        policy: &PolicySpec,
        value: &ValueSpec,
        n_steps: usize,
        reward_offset: f64,
    ) -> Result<(Trajectory, Vec<Vec<f64>>)> {
        if n_steps == 0 {
            return Err(Error::invalid("rollouts need at least one step"));
        }
        let mut traj = Trajectory::default();
        let mut finished = Vec::new();
        for _ in 0..n_steps {
            let (state, obs) = match self.state.take() {
                Some(s) => s,
                None => {
                    let seed = self.rng.random();
                    env.reset(seed).map_err(|e| wrap(self.steps, e))?
                }
            };
            let (action, logp) = policy.sample(&obs, &mut self.rng);
            let v = value.value(&obs);
            let (next, reward, done, next_obs) = env.step(&state, action).map_err(|e| wrap(self.steps, e))?;
            self.steps += 1;
            traj.observations.push(obs);
            traj.actions.push(action);
            traj.log_probs.push(logp);
            traj.rewards.push(reward - reward_offset);
            traj.values.push(v);
            traj.dones.push(done);
            self.episode_rewards.push(reward);
            if done {
                finished.push(std::mem::take(&mut self.episode_rewards));
            } else {
                self.state = Some((next, next_obs));
            }
        }
        traj.bootstrap = match &self.state {
            Some((_, obs)) => value.value(obs),
            None => 0.0,
        };
        Ok((traj, finished))
    }
}

fn wrap(step: usize, e: Error) -> Error {
    Error::Rollout {
        step,
        source: Box::new(e),
    }
}

/// Samples `n_steps` transitions from fresh episodes seeded by `seed`.
pub fn collect_rollouts<E: Environment>(
    env: &E,
    policy: &PolicySpec,
    value: &ValueSpec,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if policy.observation_len() != env.observation_len() || policy.action_count() != env.action_count() {
        return Err(Error::invalid("policy shape does not match the environment"));
    }
    RolloutWorker::new(seed).collect(env, policy, value, n_steps, 0.0).map(|r| r.0)
}

/// Generalised advantage estimates and returns (advantages + values).
/// `dones[t]` cuts both bootstrapping and the advantage recursion after step `t`.
pub fn compute_gae(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        if dones[t] {
            next_value = 0.0;
            next_adv = 0.0;
        }
        let delta = rewards[t] + gamma * next_value - values[t];
        adv[t] = delta + gamma * lambda * next_adv;
        next_adv = adv[t];
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gae_hand_cases() {
        let (a, r) = compute_gae(&[1.0, 1.0], &[0.5, 0.5], &[false, false], 0.0, 0.99, 0.95);
        assert!((a[1] - 0.5).abs() <= 1e-12);
        assert!((a[0] - 1.46525).abs() <= 1e-9);
        assert_eq!(r[1], 1.0);
        let (a, _) = compute_gae(&[2.0], &[0.0], &[false], 0.0, 0.99, 0.95);
        assert_eq!(a, vec![2.0]);
        let (a, _) = compute_gae(&[1.0, 2.0, 3.0], &[0.5, 1.0, 4.0], &[false, false, false], 9.0, 0.0, 0.95);
        assert_eq!(a, vec![0.5, 1.0, -1.0]);
    }

    #[test]
    fn terminal_steps_cut_the_recursion() {
        let (a, _) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], &[true, false], 5.0, 0.9, 1.0);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], 1.0 + 0.9 * 5.0);
    }
}
