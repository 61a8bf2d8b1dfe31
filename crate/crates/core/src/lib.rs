pub mod access;
pub mod climate;
pub mod cli;
pub mod env;
pub mod error;
pub mod flood;
pub mod io;
pub mod ppo;
pub mod raster;
pub mod synth;
pub mod transport;
pub mod wellbeing;

pub use error::{Error, Result};
