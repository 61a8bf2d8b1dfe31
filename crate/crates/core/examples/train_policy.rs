//! PPO on a two-zone city where draining the western basin is the one
//! useful action, then a comparison with the baseline policies.
//!
//!     cargo run --release --example train_policy

use climate_pathways::climate::ScenarioId;
use climate_pathways::env::{AdaptationEnv, EnvParams};
use climate_pathways::ppo::{evaluate_policy, make_baseline, train_with, Agent, BaselineKind, PpoConfig};
use climate_pathways::synth::{constant_scenario, toy_city};
use climate_pathways::wellbeing::{fit_wellbeing, synthetic_survey, SyntheticSurveySpec};

fn main() -> climate_pathways::Result<()> {
    let (model, _) = fit_wellbeing(&synthetic_survey(&SyntheticSurveySpec::default())?)?;
    let scenarios = vec![constant_scenario(ScenarioId::Rcp45, 30.0)?];
    let env = AdaptationEnv::new(toy_city(1)?, scenarios, model, EnvParams::default())?;
    let (_, first_obs) = env.reset(0)?;

    let config = PpoConfig {
        learning_rate: 0.2,
        iterations: 200,
        rollout_len: 128,
        n_workers: 2,
        ..PpoConfig::default()
    };
    let outcome = train_with(&env, &config, |it, policy, _, entry| {
        if it % 40 == 0 {
            println!(
                "iteration {it:>3}: P(drain zone 0) = {:.3}, entropy {:.3}",
                policy.probabilities(&first_obs)[1],
                entry.stats.entropy
            );
        }
        Ok(())
    })?;
    println!("final P(drain zone 0) = {:.4}", outcome.policy.probabilities(&first_obs)[1]);

    let seeds: Vec<u64> = (0..20).collect();
    let mut agents = vec![Agent::Learned(outcome.policy)];
    agents.extend(BaselineKind::ALL.map(make_baseline));
    for agent in &agents {
        let s = evaluate_policy(&env, agent, &seeds, config.gamma)?;
        println!("{:<16} mean return {:.4} (95% CI {:.4} .. {:.4})", agent.name(), s.mean, s.ci95.0, s.ci95.1);
    }
    Ok(())
}
