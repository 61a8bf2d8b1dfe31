//! One 78-year episode of the adaptation environment under two fixed
//! policies, replaying identical rainfall.
//!
//!     cargo run --example adaptation_episode [SEED]

use climate_pathways::env::{episode_return, AdaptationAction, AdaptationEnv, EnvParams};
use climate_pathways::ppo::{greedy_drainage_action, Environment};
use climate_pathways::synth::{generate_synth_city, SynthCitySpec};
use climate_pathways::wellbeing::{fit_wellbeing, synthetic_survey, SyntheticSurveySpec};

fn main() -> climate_pathways::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let synth = generate_synth_city(&SynthCitySpec::default())?;
    let (model, _) = fit_wellbeing(&synthetic_survey(&SyntheticSurveySpec::default())?)?;
    let env = AdaptationEnv::new(synth.city, synth.scenarios, model, EnvParams::default())?;
    println!("{} zones, {} actions, observation length {}", env.n_zones(), env.action_count(), env.observation_len());

    for greedy in [false, true] {
        let (mut state, mut obs) = env.reset(seed)?;
        let mut rewards = Vec::new();
        loop {
            let idx = if greedy { greedy_drainage_action(&obs, Environment::action_count(&env)) } else { 0 };
            let action = AdaptationAction::from_index(idx, env.n_zones())?;
            let (next, tr) = env.step(&state, action)?;
            if tr.year % 20 == 0 || tr.done {
                let worst = next.zone_loss.iter().copied().fold(0.0, f64::max);
                println!(
                    "  {} {:<8} rain {:>6.1} mm  action {:<22} reward {:.4}  worst zone loss {:.3}",
                    tr.year,
                    next.scenario_id.to_string(),
                    next.last_rain_mm,
                    action.to_string(),
                    tr.reward,
                    worst
                );
            }
            rewards.push(tr.reward);
            if tr.done {
                break;
            }
            state = next;
            obs = tr.observation;
        }
        let name = if greedy { "greedy drainage" } else { "no action" };
        println!("{name}: {} steps, discounted return {:.4}\n", rewards.len(), episode_return(&rewards, 0.99));
    }
    Ok(())
}
