mod common;

use climate_pathways::ppo::*;
use climate_pathways::{Error, Result};
use common::toy_env;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed-length chain: every action earns `reward`; the episode ends after `len` steps.
struct Chain {
    len: usize,
    actions: usize,
    reward: f64,
    fail_at: Option<usize>,
}

impl Environment for Chain {
    type State = usize;

    fn observation_len(&self) -> usize {
        2
    }

    fn action_count(&self) -> usize {
        self.actions
    }

    fn reset(&self, _seed: u64) -> Result<(usize, Vec<f64>)> {
        Ok((0, vec![0.0, 1.0]))
    }

    fn step(&self, t: &usize, action: usize) -> Result<(usize, f64, bool, Vec<f64>)> {
        if Some(*t) == self.fail_at {
            return Err(Error::InvalidAction {
                action,
                reason: "scripted failure".into(),
            });
        }
        let next = t + 1;
        let obs = vec![next as f64 / self.len as f64, (action as f64).sin()];
        Ok((next, self.reward, next == self.len, obs))
    }
}

fn random_batch(n_in: usize, n_act: usize, n: usize, policy: &PolicySpec, rng: &mut ChaCha8Rng) -> Batch {
    let mut b = Batch::default();
    while b.len() < n {
        let obs: Vec<f64> = (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = rng.random_range(0..n_act);
        let logp = policy.log_probabilities(&obs)[a];
        let old = logp + rng.random_range(-0.4..0.4);
        let ratio = (logp - old).exp();
        // Stay away from the clip kinks, where the objective is not differentiable.
        if (ratio - 0.8).abs() < 1e-3 || (ratio - 1.2).abs() < 1e-3 {
            continue;
        }
        b.observations.push(obs);
        b.actions.push(a);
        b.log_probs.push(old);
        b.advantages.push(rng.random_range(-2.0..2.0));
        b.returns.push(rng.random_range(-3.0..3.0));
    }
    b
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    diff / scale.max(1e-300)
}

fn central_diff(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-5;
    let mut p = params.to_vec();
    (0..params.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p);
            p[k] = orig - h;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn representations() -> [Representation; 2] {
    [Representation::Linear, Representation::OneHiddenLayer { width: 6 }]
}

#[test]
fn policy_gradient_matches_finite_differences() {
    for (k, repr) in representations().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let mut net = Net::init(repr, 5, 4, 0.5, &mut rng);
        for p in &mut net.params {
            *p += rng.random_range(-0.3..0.3);
        }
        let policy = PolicySpec::new(net);
        let batch = random_batch(5, 4, 32, &policy, &mut rng);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let (_, g, stats) = policy_objective_and_grad(&policy, &batch, &idx, 0.2, 0.01);
        assert!(stats.clip_fraction > 0.0, "batch should exercise clipping");
        let fd = central_diff(&policy.net.params, |p| {
            let mut q = policy.clone();
            q.net.params = p.to_vec();
            policy_objective_and_grad(&q, &batch, &idx, 0.2, 0.01).0
        });
        let err = relative_error(&g, &fd);
        assert!(err <= 1e-5, "{repr:?}: {err}");
    }
}

#[test]
fn value_gradient_matches_finite_differences() {
    for (k, repr) in representations().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(10 + k as u64);
        let mut net = Net::init(repr, 5, 1, 1.0, &mut rng);
        for p in &mut net.params {
            *p += rng.random_range(-0.3..0.3);
        }
        let value = ValueSpec::new(net);
        let policy = PolicySpec::new(Net::zeros(Representation::Linear, 5, 3));
        let batch = random_batch(5, 3, 32, &policy, &mut rng);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let (_, g) = value_loss_and_grad(&value, &batch, &idx);
        let fd = central_diff(&value.net.params, |p| {
            let mut q = value.clone();
            q.net.params = p.to_vec();
            value_loss_and_grad(&q, &batch, &idx).0
        });
        let err = relative_error(&g, &fd);
        assert!(err <= 1e-5, "{repr:?}: {err}");
    }
}

#[test]
fn unclipped_update_follows_the_vanilla_policy_gradient() {
    for (k, repr) in representations().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(20 + k as u64);
        let policy = PolicySpec::new(Net::init(repr, 4, 3, 0.5, &mut rng));
        let mut batch = random_batch(4, 3, 50, &policy, &mut rng);
        for i in 0..batch.len() {
            batch.log_probs[i] = policy.log_probabilities(&batch.observations[i])[batch.actions[i]];
        }
        let config = PpoConfig {
            clip_eps: 1e9,
            epochs: 1,
            minibatch_size: batch.len(),
            entropy_coef: 0.0,
            ..PpoConfig::default()
        };
        let mut updated = policy.clone();
        let mut value = ValueSpec::new(Net::zeros(Representation::Linear, 4, 1));
        let lr = 1e-3;
        ppo_update(&mut updated, &mut value, &batch, &config, lr, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let step: Vec<f64> = updated.net.params.iter().zip(&policy.net.params).map(|(a, b)| (a - b) / lr).collect();

        let mut adv = batch.advantages.clone();
        normalize_advantages(&mut adv);
        // REINFORCE direction: mean of A * grad log pi(a|s), by differences.
        let pg = central_diff(&policy.net.params, |p| {
            let mut q = policy.clone();
            q.net.params = p.to_vec();
            (0..batch.len())
                .map(|i| adv[i] * q.log_probabilities(&batch.observations[i])[batch.actions[i]])
                .sum::<f64>()
                / batch.len() as f64
        });
        let dot: f64 = step.iter().zip(&pg).map(|(a, b)| a * b).sum();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cosine = dot / (norm(&step) * norm(&pg));
        assert!(cosine >= 0.999, "{repr:?}: {cosine}");
    }
}

#[test]
fn unchanged_parameters_give_unit_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let policy = PolicySpec::new(Net::init(Representation::OneHiddenLayer { width: 4 }, 3, 4, 0.5, &mut rng));
    let mut batch = random_batch(3, 4, 40, &policy, &mut rng);
    for i in 0..batch.len() {
        batch.log_probs[i] = policy.log_probabilities(&batch.observations[i])[batch.actions[i]];
    }
    normalize_advantages(&mut batch.advantages);
    let idx: Vec<usize> = (0..batch.len()).collect();
    let (_, _, stats) = policy_objective_and_grad(&policy, &batch, &idx, 0.2, 0.0);
    assert!(stats.surrogate.abs() <= 1e-12);
    assert_eq!(stats.clip_fraction, 0.0);
}

#[test]
fn non_finite_gradients_name_the_minibatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut policy = PolicySpec::new(Net::zeros(Representation::Linear, 3, 2));
    let mut batch = random_batch(3, 2, 8, &policy, &mut rng);
    batch.observations[5][0] = f64::NAN;
    let mut value = ValueSpec::new(Net::zeros(Representation::Linear, 3, 1));
    let config = PpoConfig {
        minibatch_size: 8,
        ..PpoConfig::default()
    };
    match ppo_update(&mut policy, &mut value, &batch, &config, 0.1, &mut rng) {
        Err(Error::Numerical(msg)) => assert!(msg.contains("minibatch 0"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn rollouts_have_requested_length_and_consistent_log_probs() {
    let env = Chain {
        len: 3,
        actions: 4,
        reward: 1.0,
        fail_at: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let policy = PolicySpec::new(Net::init(Representation::OneHiddenLayer { width: 3 }, 2, 4, 2.0, &mut rng));
    let value = ValueSpec::new(Net::zeros(Representation::Linear, 2, 1));
    let t = collect_rollouts(&env, &policy, &value, 5, 9).unwrap();
    assert_eq!(t.len(), 5);
    assert_eq!(t.dones, vec![false, false, true, false, false]);
    assert_eq!(t, collect_rollouts(&env, &policy, &value, 5, 9).unwrap());
    for i in 0..t.len() {
        let lp = policy.log_probabilities(&t.observations[i])[t.actions[i]];
        assert!((lp - t.log_probs[i]).abs() <= 1e-12);
        assert!(t.log_probs[i] <= 0.0);
    }
}

#[test]
fn single_action_environment_has_zero_log_probs() {
    let env = Chain {
        len: 4,
        actions: 1,
        reward: 0.5,
        fail_at: None,
    };
    let policy = PolicySpec::new(Net::zeros(Representation::Linear, 2, 1));
    let value = ValueSpec::new(Net::zeros(Representation::Linear, 2, 1));
    let t = collect_rollouts(&env, &policy, &value, 10, 0).unwrap();
    assert!(t.log_probs.iter().all(|&l| l == 0.0));
}

#[test]
fn environment_errors_carry_the_step_index() {
    let env = Chain {
        len: 10,
        actions: 2,
        reward: 1.0,
        fail_at: Some(3),
    };
    let policy = PolicySpec::new(Net::zeros(Representation::Linear, 2, 2));
    let value = ValueSpec::new(Net::zeros(Representation::Linear, 2, 1));
    match collect_rollouts(&env, &policy, &value, 8, 0) {
        Err(Error::Rollout { step, source }) => {
            assert_eq!(step, 3);
            assert!(matches!(*source, Error::InvalidAction { .. }));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn evaluation_of_a_known_two_step_environment() {
    let env = Chain {
        len: 2,
        actions: 5,
        reward: 1.0,
        fail_at: None,
    };
    let seeds: Vec<u64> = (0..7).collect();
    for kind in BaselineKind::ALL {
        let s = evaluate_policy(&env, &make_baseline(kind), &seeds, 0.5).unwrap();
        assert_eq!(s.mean, 1.5);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.ci95, (1.5, 1.5));
    }
    let one = evaluate_policy(&env, &make_baseline(BaselineKind::NoAction), &[3], 0.5).unwrap();
    assert_eq!(one.ci95, (one.mean, one.mean));
}

#[test]
fn training_is_bit_reproducible_and_thread_count_free() {
    let env = toy_env(&[30.0]);
    let config = PpoConfig {
        iterations: 5,
        rollout_len: 64,
        n_workers: 3,
        learning_rate: 0.1,
        policy: Representation::OneHiddenLayer { width: 8 },
        ..PpoConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&env, &config).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.policy, b.policy);
    assert_eq!(a.value, b.value);
    assert_eq!(format_training_log(&a.log, false), format_training_log(&b.log, false));
}

#[test]
fn checkpoints_round_trip_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let config = PpoConfig::default();
    let mut policy = PolicySpec::new(Net::init(Representation::OneHiddenLayer { width: 5 }, 4, 3, 0.3, &mut rng));
    for p in &mut policy.net.params {
        *p += rng.random::<f64>() * 1e-7;
    }
    let value = ValueSpec::new(Net::init(Representation::Linear, 4, 1, 1.0, &mut rng));
    let c = Checkpoint::new(12, &policy, &value, &config);
    let back = Checkpoint::from_json(&c.to_json(), std::path::Path::new("c.json")).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_json(), c.to_json());
    let tampered = c.to_json().replace("\"gamma\": 0.99", "\"gamma\": 0.98");
    assert!(Checkpoint::from_json(&tampered, std::path::Path::new("c.json")).is_err());
}

proptest! {
    #[test]
    fn softmax_is_a_strictly_positive_distribution(logits in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gae_without_discount_is_the_one_step_residual(
        data in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20),
        bootstrap in -5.0f64..5.0,
        lambda in 0.0f64..=1.0,
    ) {
        let (r, v): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
        let dones = vec![false; r.len()];
        let (a, ret) = compute_gae(&r, &v, &dones, bootstrap, 0.0, lambda);
        for t in 0..r.len() {
            prop_assert_eq!(a[t], r[t] - v[t]);
            prop_assert_eq!(ret[t], a[t] + v[t]);
        }
    }

    #[test]
    fn normalized_advantages_are_standardized(adv in proptest::collection::vec(-100.0f64..100.0, 2..200)) {
        prop_assume!(adv.iter().any(|&a| (a - adv[0]).abs() > 1e-3));
        let mut a = adv.clone();
        normalize_advantages(&mut a);
        let n = a.len() as f64;
        let m = a.iter().sum::<f64>() / n;
        let sd = (a.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        prop_assert!(m.abs() <= 1e-10);
        prop_assert!((sd - 1.0).abs() <= 1e-10);
    }
}
