//! Adaptation planning as a Markov decision process.

mod action;
mod city;
mod mdp;
mod params;

pub use action::{AdaptationAction, AdaptationMeasure};
pub use city::City;
pub use mdp::{
    episode_return, format_trajectory, obs_loss_index, observation_len, AdaptationEnv, EnvState, Transition,
    TrajectoryRecord, OBS_HEADER, OBS_PER_ZONE,
};
pub use params::{EnvParams, EPISODE_STEPS, FIRST_YEAR, LAST_YEAR};
