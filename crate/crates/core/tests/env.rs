mod common;

use climate_pathways::env::{
    episode_return, AdaptationAction, AdaptationEnv, AdaptationMeasure, EnvParams, EnvState, EPISODE_STEPS,
};
use climate_pathways::synth::toy_city;
use climate_pathways::Error;
use common::{fitted_model, small_synth_env, toy_env};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_actions(env: &AdaptationEnv, n: usize, seed: u64) -> Vec<AdaptationAction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| AdaptationAction::from_index(rng.random_range(0..env.action_count()), env.n_zones()).unwrap())
        .collect()
}

fn rollout(env: &AdaptationEnv, state: &EnvState, actions: &[AdaptationAction]) -> Vec<(Vec<f64>, f64, bool)> {
    let mut s = state.clone();
    let mut out = Vec::new();
    for &a in actions {
        if s.is_done() {
            break;
        }
        let (next, tr) = env.step(&s, a).unwrap();
        out.push((tr.observation, tr.reward, tr.done));
        s = next;
    }
    out
}

#[test]
fn reset_and_trajectories_are_deterministic() {
    let env = small_synth_env(3);
    let actions = random_actions(&env, 20, 9);
    let (s1, o1) = env.reset(42).unwrap();
    let (s2, o2) = env.reset(42).unwrap();
    assert_eq!(o1, o2);
    assert_eq!(s1, s2);
    assert_eq!(rollout(&env, &s1, &actions), rollout(&env, &s2, &actions));
}

#[test]
fn scenario_draw_is_uniform() {
    let env = toy_env(&[0.0, 0.0, 0.0]);
    let mut counts = [0usize; 3];
    for seed in 0..3000 {
        counts[env.reset(seed).unwrap().0.scenario] += 1;
    }
    for c in counts {
        assert!((c as f64 / 3000.0 - 1.0 / 3.0).abs() <= 0.03, "{counts:?}");
    }
    let single = toy_env(&[10.0]);
    assert!((0..50).all(|s| single.reset(s).unwrap().0.scenario == 0));
}

#[test]
fn zero_rain_reward_is_the_baseline() {
    let env = toy_env(&[0.0]);
    let (mut s, _) = env.reset(1).unwrap();
    for _ in 0..5 {
        let (next, tr) = env.step(&s, AdaptationAction::NoOp).unwrap();
        assert_eq!(tr.reward, env.baseline_wellbeing());
        assert!(next.zone_loss.iter().all(|&l| l == 0.0));
        s = next;
    }
}

#[test]
fn drainage_never_deepens_the_replayed_event() {
    let env = small_synth_env(5);
    let (mut s, _) = env.reset(11).unwrap();
    for step in 0..30 {
        for zone in 0..env.n_zones() {
            let act = AdaptationAction::Install {
                measure: AdaptationMeasure::IncreaseDrainage,
                zone,
            };
            let (with, _) = env.step(&s, act).unwrap();
            let (without, _) = env.step(&s, AdaptationAction::NoOp).unwrap();
            assert_eq!(with.last_rain_mm, without.last_rain_mm);
            assert!(
                with.zone_mean_depth_mm[zone] <= without.zone_mean_depth_mm[zone],
                "step {step} zone {zone}"
            );
        }
        let a = random_actions(&env, 1, step)[0];
        s = env.step(&s, a).unwrap().0;
    }
}

#[test]
fn restored_state_replays_the_rest_of_the_episode() {
    let env = small_synth_env(2);
    let actions = random_actions(&env, EPISODE_STEPS, 4);
    let (mut s, _) = env.reset(8).unwrap();
    for &a in &actions[..30] {
        s = env.step(&s, a).unwrap().0;
    }
    let json = serde_json::to_string(&s).unwrap();
    let restored: EnvState = serde_json::from_str(&json).unwrap();
    assert_eq!(restored, s);
    assert_eq!(rollout(&env, &s, &actions[30..]), rollout(&env, &restored, &actions[30..]));
}

#[test]
fn episodes_last_78_steps_with_bounded_observations() {
    let env = small_synth_env(1);
    let len = env.observation_len();
    assert_eq!(len, 7 + 6 * env.n_zones());
    for seed in 0..3 {
        let (s, obs) = env.reset(seed).unwrap();
        assert_eq!(obs.len(), len);
        let steps = rollout(&env, &s, &random_actions(&env, 200, seed));
        assert_eq!(steps.len(), EPISODE_STEPS);
        assert_eq!(EPISODE_STEPS, 78);
        assert!(steps[..77].iter().all(|s| !s.2) && steps[77].2);
        for (obs, r, _) in &steps {
            assert_eq!(obs.len(), len);
            assert!(obs.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((1.0..=5.0).contains(r));
        }
    }
}

#[test]
fn rescaled_rewards_lie_in_unit_interval() {
    let params = EnvParams {
        reward_rescale: true,
        ..EnvParams::default()
    };
    let base = toy_env(&[30.0]);
    let env = AdaptationEnv::new(toy_city(1).unwrap(), base.scenarios().to_vec(), fitted_model(), params).unwrap();
    let (s, _) = env.reset(0).unwrap();
    for (_, r, _) in rollout(&env, &s, &random_actions(&env, 10, 0)) {
        assert!((0.0..=1.0).contains(&r));
    }
}

#[test]
fn invalid_zone_is_rejected_without_touching_the_episode() {
    let env = toy_env(&[30.0]);
    let (s, _) = env.reset(0).unwrap();
    let before = s.clone();
    let bad = AdaptationAction::Install {
        measure: AdaptationMeasure::EarlyWarning,
        zone: 7,
    };
    assert!(matches!(env.step(&s, bad), Err(Error::InvalidAction { .. })));
    assert_eq!(s, before);
    assert!(AdaptationAction::from_index(env.action_count(), env.n_zones()).is_err());
}

#[test]
fn configuration_errors_name_every_key() {
    let params = EnvParams {
        days_per_year: 0,
        rain_scale_mm: -1.0,
        ..EnvParams::default()
    };
    let base = toy_env(&[30.0]);
    match AdaptationEnv::new(toy_city(1).unwrap(), base.scenarios().to_vec(), fitted_model(), params) {
        Err(Error::Config { keys }) => assert_eq!(keys, vec!["days_per_year", "rain_scale_mm"]),
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn measure_counters_saturate_at_the_cap() {
    let env = toy_env(&[30.0]);
    let (mut s, _) = env.reset(0).unwrap();
    let act = AdaptationAction::Install {
        measure: AdaptationMeasure::IncreaseDrainage,
        zone: 0,
    };
    let mut rewards = Vec::new();
    for _ in 0..5 {
        let (n, tr) = env.step(&s, act).unwrap();
        rewards.push(tr.reward);
        s = n;
    }
    assert_eq!(s.counters[0][0], 3);
    assert!(rewards[0] < rewards[1] && rewards[1] < rewards[2]);
    assert_eq!(rewards[2], rewards[3]);
    assert_eq!(rewards[3], rewards[4]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn discounted_return_matches_direct_sum(rewards in proptest::collection::vec(0.0f64..5.0, 0..30), gamma in 0.0f64..=1.0) {
        let direct: f64 = rewards.iter().enumerate().map(|(t, r)| gamma.powi(t as i32) * r).sum();
        prop_assert!((episode_return(&rewards, gamma) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }
}
