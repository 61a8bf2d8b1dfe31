use serde::{Deserialize, Serialize};

use crate::access::{GravityParams, LossWeights};
use crate::error::{Error, Result};
use crate::flood::AdaptationEffects;
use crate::transport::DepthSpeedCurve;

pub const FIRST_YEAR: i32 = 2023;
pub const LAST_YEAR: i32 = 2100;
/// Steps per episode: one per simulated year.
pub const EPISODE_STEPS: usize = (LAST_YEAR - FIRST_YEAR + 1) as usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Rainfall events averaged into each yearly step.
    pub days_per_year: u32,
    /// Map rewards from [1, 5] onto [0, 1].
    pub reward_rescale: bool,
    /// Rainfall that saturates the observation entry.
    pub rain_scale_mm: f64,
    /// Mean zone depth that saturates the observation entry.
    pub depth_scale_mm: f64,
    /// Reward charged for any non-NoOp action.
    pub action_cost: f64,
    pub adaptation: AdaptationEffects,
    pub gravity: GravityParams,
    pub depth_speed: DepthSpeedCurve,
    pub loss_weights: LossWeights,
    /// Per-component coupling to accessibility loss; the model's own when absent.
    pub coupling: Option<Vec<f64>>,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            days_per_year: 1,
            reward_rescale: false,
            rain_scale_mm: 100.0,
            depth_scale_mm: 1000.0,
            action_cost: 0.0,
            adaptation: AdaptationEffects::default(),
            gravity: GravityParams::default(),
            depth_speed: DepthSpeedCurve::default(),
            loss_weights: LossWeights::default(),
            coupling: None,
        }
    }
}

impl EnvParams {
    /// Collects every offending key rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut keys = Vec::new();
        if self.days_per_year == 0 {
            keys.push("days_per_year".to_string());
        }
        if !(self.rain_scale_mm > 0.0 && self.rain_scale_mm.is_finite()) {
            keys.push("rain_scale_mm".into());
        }
        if !(self.depth_scale_mm > 0.0 && self.depth_scale_mm.is_finite()) {
            keys.push("depth_scale_mm".into());
        }
        if !(self.action_cost >= 0.0 && self.action_cost.is_finite()) {
            keys.push("action_cost".into());
        }
        for check in [
            self.adaptation.validate(),
            self.gravity.validate(),
            self.depth_speed.validate(),
            self.loss_weights.validate(),
        ] {
            if let Err(Error::Config { keys: k }) = check {
                keys.extend(k);
            }
        }
        if self.coupling.as_ref().is_some_and(|c| c.iter().any(|v| !v.is_finite())) {
            keys.push("coupling".into());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys })
        }
    }
}
