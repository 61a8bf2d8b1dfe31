//! Terrain, depressions and event-based fill-and-spill flooding.

mod drainage;
mod flow;
mod hierarchy;
mod simulate;

pub use drainage::{apply_adaptation, AdaptationEffects, DrainageGrid};
pub use flow::{compute_flow_directions, Direction, Flow, FlowField};
pub use hierarchy::{build_depression_hierarchy, DepressionHierarchy, DepressionNode, SpillTarget};
pub use simulate::{simulate_flood, FloodModel, FloodOutcome};
