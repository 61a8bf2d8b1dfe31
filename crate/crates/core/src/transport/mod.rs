//! Multimodal road network, depth-degraded speeds, shortest travel times and
//! hexagonal analysis zones.

mod network;
mod route;
mod speed;
mod zones;

pub use network::{Category, Destination, DestinationSet, Edge, Mode, NetworkNode, RoadNetwork};
pub use route::{cells_on_segment, edge_times, map_depths_to_edges, shortest_time_to_nearest, times_to_nearest};
pub use speed::{adjusted_speed, DepthSpeedCurve, SpeedCurve};
pub use zones::{build_hex_zones, Zone, ZoneGrid};
