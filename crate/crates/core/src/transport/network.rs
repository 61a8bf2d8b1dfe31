use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Drive,
    Cycle,
    Walk,
    Transit,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Drive, Mode::Cycle, Mode::Walk, Mode::Transit];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Drive => "drive",
            Mode::Cycle => "cycle",
            Mode::Walk => "walk",
            Mode::Transit => "transit",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkNode {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

/// Undirected edge between node indices. A mode is allowed iff its free-flow
/// speed is present.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub length_m: f64,
    pub free_flow_kmh: [Option<f64>; 4],
}

impl Edge {
    pub fn allows(&self, mode: Mode) -> bool {
        self.free_flow_kmh[mode.index()].is_some()
    }

    pub fn free_flow(&self, mode: Mode) -> Option<f64> {
        self.free_flow_kmh[mode.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<NetworkNode>,
    edges: Vec<Edge>,
    index: HashMap<u64, usize>,
    /// Per node: (edge index, opposite node index).
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<NetworkNode>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !n.x.is_finite() || !n.y.is_finite() {
                return Err(Error::invalid(format!("node {} has non-finite coordinates", n.id)));
            }
            if index.insert(n.id, i).is_some() {
                return Err(Error::invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (k, e) in edges.iter().enumerate() {
            if e.from >= nodes.len() || e.to >= nodes.len() {
                return Err(Error::invalid(format!("edge {k} references a missing node")));
            }
            if !(e.length_m > 0.0 && e.length_m.is_finite()) {
                return Err(Error::invalid(format!("edge {k} has length {}", e.length_m)));
            }
            if let Some(v) = e.free_flow_kmh.iter().flatten().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Error::invalid(format!("edge {k} has free-flow speed {v}")));
            }
            adjacency[e.from].push((k, e.to));
            if e.to != e.from {
                adjacency[e.to].push((k, e.from));
            }
        }
        Ok(Self {
            nodes,
            edges,
            index,
            adjacency,
        })
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Critical,
    TransportInfra,
    Everyday,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Critical, Category::TransportInfra, Category::Everyday];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Critical => "critical",
            Category::TransportInfra => "transport_infra",
            Category::Everyday => "everyday",
        }
    }

    /// Subtype labels used by the synthetic city generator.
    pub fn subtypes(self) -> &'static [&'static str] {
        match self {
            Category::Critical => &["hospital", "fire_department", "police"],
            Category::TransportInfra => &["transit_stop", "ev_charging", "fuel_station"],
            Category::Everyday => &["supermarket", "school", "cafe", "pharmacy"],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown destination category '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Destination {
    /// Node index in the network.
    pub node: usize,
    pub category: Category,
    pub subtype: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DestinationSet {
    entries: Vec<Destination>,
}

impl DestinationSet {
    pub fn new(entries: Vec<Destination>, network: &RoadNetwork) -> Result<Self> {
        if let Some(d) = entries.iter().find(|d| d.node >= network.len()) {
            return Err(Error::invalid(format!("destination references node index {}", d.node)));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Destination] {
        &self.entries
    }

    /// Sorted, deduplicated node indices of a category.
    pub fn nodes_of(&self, category: Category) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .entries
            .iter()
            .filter(|d| d.category == category)
            .map(|d| d.node)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
