use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::city::City;
use super::params::{EnvParams, FIRST_YEAR, LAST_YEAR};
use super::{AdaptationAction, AdaptationMeasure};
use crate::access::{accessibility_loss, compute_accessibility, AccessibilityTable, LossTable};
use crate::climate::{ClimateScenario, ScenarioId};
use crate::error::{Error, Result};
use crate::flood::{apply_adaptation, DrainageGrid, FloodModel};
use crate::transport::map_depths_to_edges;
use crate::wellbeing::{population_wellbeing, PopulationProfile, WellbeingModel, SATISFACTION_LEVELS};

/// Observation entries before the per-zone blocks: scenario one-hot (3),
/// period one-hot (3), rainfall.
pub const OBS_HEADER: usize = 7;
/// Per zone: mean depth, accessibility loss, four measure counters.
pub const OBS_PER_ZONE: usize = 6;

pub fn observation_len(zones: usize) -> usize {
    OBS_HEADER + OBS_PER_ZONE * zones
}

/// Index of zone `z`'s accessibility loss in an observation.
pub fn obs_loss_index(z: usize) -> usize {
    OBS_HEADER + OBS_PER_ZONE * z + 1
}

/// Serializable mid-episode state. Restoring it reproduces the rest of the
/// episode exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// Year of the next event; the episode is over once it passes the last year.
    pub year: i32,
    pub scenario: usize,
    pub scenario_id: ScenarioId,
    /// Period of the most recently evaluated event.
    pub period: usize,
    /// Installed units per zone, indexed by measure.
    pub counters: Vec<[u32; 4]>,
    pub drainage: DrainageGrid,
    pub last_rain_mm: f64,
    pub zone_mean_depth_mm: Vec<f64>,
    pub zone_max_depth_mm: Vec<f64>,
    pub zone_loss: Vec<f64>,
    pub wellbeing: f64,
    pub rng: ChaCha8Rng,
}

impl EnvState {
    pub fn is_done(&self) -> bool {
        self.year > LAST_YEAR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
    pub observation: Vec<f64>,
    /// Year whose event produced the reward.
    pub year: i32,
}

struct EventOutcome {
    rain_mm: f64,
    period: usize,
    zone_mean: Vec<f64>,
    zone_max: Vec<f64>,
    zone_loss: Vec<f64>,
    wellbeing: f64,
}

/// Flood, accessibility and wellbeing chain over a fixed city. Immutable;
/// all episode data lives in [`EnvState`].
pub struct AdaptationEnv {
    city: City,
    scenarios: Vec<ClimateScenario>,
    model: WellbeingModel,
    coupling: Vec<f64>,
    params: EnvParams,
    flood: FloodModel,
    profile: PopulationProfile,
    baseline: AccessibilityTable,
    baseline_wellbeing: f64,
}

impl AdaptationEnv {
    pub fn new(city: City, scenarios: Vec<ClimateScenario>, model: WellbeingModel, params: EnvParams) -> Result<Self> {
        params.validate()?;
        city.validate()?;
        model.validate()?;
        if scenarios.is_empty() {
            return Err(Error::Config {
                keys: vec!["scenarios".into()],
            });
        }
        if let Some(s) = scenarios.iter().find(|s| !s.covers(FIRST_YEAR, LAST_YEAR)) {
            return Err(Error::invalid(format!("scenario {} does not cover {FIRST_YEAR}-{LAST_YEAR}", s.id)));
        }
        let coupling = params.coupling.clone().unwrap_or_else(|| model.coupling.clone());
        if coupling.len() != model.pca.retained {
            return Err(Error::Config {
                keys: vec!["coupling".into()],
            });
        }
        let weights: Vec<f64> = city.zones.zones().iter().map(|z| z.population).collect();
        let profile = PopulationProfile::from_residents(&city.residents, &model, &weights)?;
        let flood = FloodModel::new(city.dem.clone())?;
        let dry = vec![0.0; city.network.edges().len()];
        let baseline = compute_accessibility(
            &city.network,
            &city.zones,
            &city.destinations,
            &dry,
            &params.depth_speed,
            &params.gravity,
        )?;
        let baseline_wellbeing =
            population_wellbeing(&profile, &LossTable::zeros(city.n_zones()), &model.clm, &coupling, None)?.overall;
        Ok(Self {
            city,
            scenarios,
            model,
            coupling,
            params,
            flood,
            profile,
            baseline,
            baseline_wellbeing,
        })
    }

    pub fn city(&self) -> &City {
        &self.city
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn model(&self) -> &WellbeingModel {
        &self.model
    }

    pub fn scenarios(&self) -> &[ClimateScenario] {
        &self.scenarios
    }

    pub fn n_zones(&self) -> usize {
        self.city.n_zones()
    }

    pub fn action_count(&self) -> usize {
        AdaptationAction::count(self.n_zones())
    }

    pub fn observation_len(&self) -> usize {
        observation_len(self.n_zones())
    }

    /// Overall wellbeing with no accessibility loss.
    pub fn baseline_wellbeing(&self) -> f64 {
        self.baseline_wellbeing
    }

    /// Reward for a given overall wellbeing and action.
    pub fn reward_for(&self, wellbeing: f64, action: AdaptationAction) -> f64 {
        let cost = if action == AdaptationAction::NoOp { 0.0 } else { self.params.action_cost };
        let r = wellbeing - cost;
        if self.params.reward_rescale {
            (r - 1.0) / (SATISFACTION_LEVELS as f64 - 1.0)
        } else {
            r
        }
    }

    pub fn reset(&self, seed: u64) -> Result<(EnvState, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = rng.random_range(0..self.scenarios.len());
        let counters = vec![[0u32; 4]; self.n_zones()];
        let drainage = self.city.drainage.clone();
        let ev = self.evaluate(scenario, FIRST_YEAR, &drainage, &counters, &mut rng)?;
        let state = EnvState {
            year: FIRST_YEAR,
            scenario,
            scenario_id: self.scenarios[scenario].id,
            period: ev.period,
            counters,
            drainage,
            last_rain_mm: ev.rain_mm,
            zone_mean_depth_mm: ev.zone_mean,
            zone_max_depth_mm: ev.zone_max,
            zone_loss: ev.zone_loss,
            wellbeing: ev.wellbeing,
            rng,
        };
        let obs = self.observe(&state);
        Ok((state, obs))
    }

    /// Install the action, simulate this year's event, then advance the year.
    pub fn step(&self, state: &EnvState, action: AdaptationAction) -> Result<(EnvState, Transition)> {
        if state.is_done() {
            return Err(Error::invalid("episode is over; reset first"));
        }
        let z = self.n_zones();
        if let AdaptationAction::Install { zone, .. } = action {
            if zone >= z {
                return Err(Error::InvalidAction {
                    action: action.index(),
                    reason: format!("zone {zone} does not exist ({z} zones)"),
                });
            }
        }
        let mut next = state.clone();
        if let AdaptationAction::Install { measure, zone } = action {
            let count = &mut next.counters[zone][measure.index()];
            if *count < self.params.adaptation.max_units {
                *count += 1;
                if measure.is_physical() {
                    next.drainage = apply_adaptation(
                        &next.drainage,
                        measure,
                        &self.city.zones.zones()[zone].cells,
                        &self.params.adaptation,
                    )?;
                }
            }
        }
        let ev = self.evaluate(next.scenario, next.year, &next.drainage, &next.counters, &mut next.rng)?;
        let year = next.year;
        next.period = ev.period;
        next.last_rain_mm = ev.rain_mm;
        next.zone_mean_depth_mm = ev.zone_mean;
        next.zone_max_depth_mm = ev.zone_max;
        next.zone_loss = ev.zone_loss;
        next.wellbeing = ev.wellbeing;
        next.year += 1;
        let observation = self.observe(&next);
        let transition = Transition {
            reward: self.reward_for(ev.wellbeing, action),
            done: next.is_done(),
            observation,
            year,
        };
        Ok((next, transition))
    }

    /// Loss multiplier per zone from the installed non-physical measures.
    pub fn mitigation(&self, counters: &[[u32; 4]]) -> Vec<f64> {
        let a = &self.params.adaptation;
        counters
            .iter()
            .map(|c| {
                (1.0 - a.early_warning_mitigation).powi(c[AdaptationMeasure::EarlyWarning.index()] as i32)
                    * (1.0 - a.emergency_mitigation).powi(c[AdaptationMeasure::EmergencyServices.index()] as i32)
            })
            .collect()
    }

    /// Zone losses and overall wellbeing for a given rainfall.
    pub fn evaluate_rain(&self, drainage: &DrainageGrid, counters: &[[u32; 4]], rain_mm: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        let outcome = self.flood.simulate(drainage, rain_mm)?;
        let depths = &outcome.depths;
        let n_zones = self.n_zones();
        let mut zone_mean = vec![0.0; n_zones];
        let mut zone_max = vec![0.0f64; n_zones];
        for zone in self.city.zones.zones() {
            if zone.cells.is_empty() {
                continue;
            }
            let mut sum = 0.0;
            for &c in &zone.cells {
                let d = depths.depths_mm[c];
                sum += d;
                zone_max[zone.id] = zone_max[zone.id].max(d);
            }
            zone_mean[zone.id] = sum / zone.cells.len() as f64;
        }
        let loss = if depths.is_dry() {
            LossTable::zeros(n_zones)
        } else {
            let edge_depths = map_depths_to_edges(depths, &self.city.network)?;
            let flooded = compute_accessibility(
                &self.city.network,
                &self.city.zones,
                &self.city.destinations,
                &edge_depths,
                &self.params.depth_speed,
                &self.params.gravity,
            )?;
            accessibility_loss(&self.baseline, &flooded, &self.params.loss_weights)?
        };
        let mitigation = self.mitigation(counters);
        let wb = population_wellbeing(&self.profile, &loss, &self.model.clm, &self.coupling, Some(&mitigation))?;
        Ok((zone_mean, zone_max, loss.zone_losses().to_vec(), wb.overall))
    }

    fn evaluate(
        &self,
        scenario: usize,
        year: i32,
        drainage: &DrainageGrid,
        counters: &[[u32; 4]],
        rng: &mut ChaCha8Rng,
    ) -> Result<EventOutcome> {
        let sc = &self.scenarios[scenario];
        let period = sc
            .periods()
            .iter()
            .position(|p| p.contains(year))
            .ok_or_else(|| Error::OutOfRange(format!("year {year} outside scenario {}", sc.id)))?;
        let days = self.params.days_per_year as usize;
        let n_zones = self.n_zones();
        let mut acc = EventOutcome {
            rain_mm: 0.0,
            period,
            zone_mean: vec![0.0; n_zones],
            zone_max: vec![0.0; n_zones],
            zone_loss: vec![0.0; n_zones],
            wellbeing: 0.0,
        };
        for _ in 0..days {
            let rain = sc.sample_rainfall(year, rng.random())?;
            let (mean, max, loss, wb) = self.evaluate_rain(drainage, counters, rain)?;
            if days == 1 {
                return Ok(EventOutcome {
                    rain_mm: rain,
                    period,
                    zone_mean: mean,
                    zone_max: max,
                    zone_loss: loss,
                    wellbeing: wb,
                });
            }
            acc.rain_mm += rain / days as f64;
            acc.wellbeing += wb / days as f64;
            for z in 0..n_zones {
                acc.zone_mean[z] += mean[z] / days as f64;
                acc.zone_max[z] = acc.zone_max[z].max(max[z]);
                acc.zone_loss[z] += loss[z] / days as f64;
            }
        }
        Ok(acc)
    }

    pub fn observe(&self, state: &EnvState) -> Vec<f64> {
        let mut obs = vec![0.0; self.observation_len()];
        let sid = ScenarioId::ALL.iter().position(|s| *s == state.scenario_id).unwrap_or(0);
        obs[sid] = 1.0;
        obs[3 + state.period.min(2)] = 1.0;
        obs[6] = (state.last_rain_mm / self.params.rain_scale_mm).clamp(0.0, 1.0);
        let cap = self.params.adaptation.max_units.max(1) as f64;
        for z in 0..self.n_zones() {
            let o = OBS_HEADER + OBS_PER_ZONE * z;
            obs[o] = (state.zone_mean_depth_mm[z] / self.params.depth_scale_mm).clamp(0.0, 1.0);
            obs[o + 1] = state.zone_loss[z].clamp(0.0, 1.0);
            for m in 0..4 {
                obs[o + 2 + m] = state.counters[z][m] as f64 / cap;
            }
        }
        obs
    }
}

/// Discounted sum `sum_t gamma^t r_t`.
pub fn episode_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// One logged step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub year: i32,
    pub scenario: ScenarioId,
    pub rain_mm: f64,
    pub action: AdaptationAction,
    pub reward: f64,
    pub zone_loss: Vec<f64>,
}

/// `year,scenario,rain_mm,action,reward,loss_0,...`
pub fn format_trajectory(records: &[TrajectoryRecord], n_zones: usize) -> String {
    let mut out = String::from("year,scenario,rain_mm,action,reward");
    for z in 0..n_zones {
        let _ = write!(out, ",loss_{z}");
    }
    out.push('\n');
    for r in records {
        let _ = write!(out, "{},{},{},{},{}", r.year, r.scenario, r.rain_mm, r.action, r.reward);
        for l in &r.zone_loss {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_returns() {
        assert_eq!(episode_return(&[1.0, 1.0, 1.0], 0.0), 1.0);
        assert_eq!(episode_return(&[1.0, 1.0], 0.5), 1.5);
        assert_eq!(episode_return(&[0.0; 5], 0.9), 0.0);
        assert_eq!(episode_return(&[], 0.9), 0.0);
    }
}
