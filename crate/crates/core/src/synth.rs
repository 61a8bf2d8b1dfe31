//! Seeded synthetic cities standing in for real terrain, road and survey data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::climate::{build_cdf, ClimateScenario, ScenarioId, PERIODS};
use crate::env::City;
use crate::error::{Error, Result};
use crate::flood::DrainageGrid;
use crate::raster::{Dem, GridGeometry, DEFAULT_NODATA};
use crate::transport::{build_hex_zones, Category, Destination, DestinationSet, Edge, NetworkNode, RoadNetwork};
use crate::wellbeing::{synthetic_residents, SyntheticSurveySpec};

/// Free-flow speeds (km/h) on synthetic roads, indexed like `Mode::ALL`.
pub const SYNTH_SPEEDS_KMH: [f64; 4] = [50.0, 15.0, 5.0, 30.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthCitySpec {
    pub n_cols: usize,
    pub n_rows: usize,
    pub cell_size_m: f64,
    pub depressions: usize,
    /// Pit depths are drawn uniformly from this range, metres.
    pub pit_depth_m: (f64, f64),
    /// Pit widths (Gaussian sigma) in cells.
    pub pit_sigma_cells: (f64, f64),
    /// Road spacing in cells.
    pub road_pitch: usize,
    /// Destination counts per category: critical, transport infrastructure, everyday.
    pub destinations: [usize; 3],
    pub zone_radius_m: f64,
    pub residents_per_zone: usize,
    pub drainage_mm: f64,
    pub runoff_coeff: f64,
    /// Rainfall samples per climate period in the generated scenarios.
    pub scenario_samples: usize,
    pub seed: u64,
}

impl Default for SynthCitySpec {
    fn default() -> Self {
        Self {
            n_cols: 16,
            n_rows: 16,
            cell_size_m: 200.0,
            depressions: 5,
            pit_depth_m: (1.0, 3.0),
            pit_sigma_cells: (1.0, 2.0),
            road_pitch: 2,
            destinations: [2, 3, 4],
            zone_radius_m: 800.0,
            residents_per_zone: 40,
            drainage_mm: 5.0,
            runoff_coeff: 0.9,
            scenario_samples: 1000,
            seed: 7,
        }
    }
}

impl SynthCitySpec {
    pub fn validate(&self) -> Result<()> {
        let mut keys = Vec::new();
        if self.n_cols < 2 {
            keys.push("n_cols");
        }
        if self.n_rows < 2 {
            keys.push("n_rows");
        }
        if !(self.cell_size_m > 0.0 && self.cell_size_m.is_finite()) {
            keys.push("cell_size_m");
        }
        let (d0, d1) = self.pit_depth_m;
        if !(d0 > 0.0 && d0 <= d1 && d1.is_finite()) {
            keys.push("pit_depth_m");
        }
        let (s0, s1) = self.pit_sigma_cells;
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            keys.push("pit_sigma_cells");
        }
        if self.road_pitch == 0 || self.road_pitch >= self.n_cols.max(self.n_rows) {
            keys.push("road_pitch");
        }
        if self.destinations.contains(&0) {
            keys.push("destinations");
        }
        if !(self.zone_radius_m > 0.0 && self.zone_radius_m.is_finite()) {
            keys.push("zone_radius_m");
        }
        if self.residents_per_zone == 0 {
            keys.push("residents_per_zone");
        }
        if !(self.drainage_mm >= 0.0 && self.drainage_mm.is_finite()) {
            keys.push("drainage_mm");
        }
        if !(0.0..=1.0).contains(&self.runoff_coeff) {
            keys.push("runoff_coeff");
        }
        if self.scenario_samples == 0 {
            keys.push("scenario_samples");
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config {
                keys: keys.into_iter().map(|k| format!("city.{k}")).collect(),
            })
        }
    }
}

/// Tilted plane with seeded Gaussian pits. The plane alone drains every
/// cell to the boundary.
pub fn synth_dem(spec: &SynthCitySpec, rng: &mut ChaCha8Rng) -> Result<Dem> {
    let g = GridGeometry::new(spec.n_cols, spec.n_rows, spec.cell_size_m)?;
    let sx = rng.random_range(0.0002..0.0008);
    let sy = rng.random_range(0.0002..0.0008);
    let pits: Vec<(f64, f64, f64, f64)> = (0..spec.depressions)
        .map(|_| {
            let r = rng.random_range(1..spec.n_rows.max(3) - 1) as f64;
            let c = rng.random_range(1..spec.n_cols.max(3) - 1) as f64;
            let depth = rng.random_range(spec.pit_depth_m.0..=spec.pit_depth_m.1);
            let sigma = rng.random_range(spec.pit_sigma_cells.0..=spec.pit_sigma_cells.1);
            (r, c, depth, sigma)
        })
        .collect();
    let z = (0..g.len())
        .map(|i| {
            let (x, y) = g.cell_center(i);
            let (row, col) = g.row_col(i);
            let mut z = 20.0 + sx * (x - g.xll) + sy * (y - g.yll);
            for &(r, c, depth, sigma) in &pits {
                let d2 = (row as f64 - r).powi(2) + (col as f64 - c).powi(2);
                z -= depth * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            // Millimetre resolution keeps the ASCII grid compact.
            (z * 1000.0).round() / 1000.0
        })
        .collect();
    Dem::new(g, z, DEFAULT_NODATA)
}

/// Road lattice through cell centres every `pitch` cells; every link carries all four modes.
pub fn synth_network(g: &GridGeometry, pitch: usize) -> Result<RoadNetwork> {
    let rows: Vec<usize> = (0..g.n_rows).step_by(pitch).collect();
    let cols: Vec<usize> = (0..g.n_cols).step_by(pitch).collect();
    let mut nodes = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            let (x, y) = g.cell_center(g.index(r, c));
            nodes.push(NetworkNode {
                id: nodes.len() as u64 + 1,
                x,
                y,
            });
        }
    }
    let speeds = SYNTH_SPEEDS_KMH.map(Some);
    let mut edges = Vec::new();
    let id = |i: usize, j: usize| i * cols.len() + j;
    let len = |a: usize, b: usize| {
        let (p, q) = (&nodes[a], &nodes[b]);
        ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt()
    };
    for i in 0..rows.len() {
        for j in 0..cols.len() {
            let a = id(i, j);
            if j + 1 < cols.len() {
                let b = id(i, j + 1);
                edges.push(Edge {
                    from: a,
                    to: b,
                    length_m: len(a, b),
                    free_flow_kmh: speeds,
                });
            }
            if i + 1 < rows.len() {
                let b = id(i + 1, j);
                edges.push(Edge {
                    from: a,
                    to: b,
                    length_m: len(a, b),
                    free_flow_kmh: speeds,
                });
            }
        }
    }
    RoadNetwork::new(nodes, edges)
}

pub fn synth_destinations(network: &RoadNetwork, counts: [usize; 3], rng: &mut ChaCha8Rng) -> Result<DestinationSet> {
    let mut entries = Vec::new();
    for cat in Category::ALL {
        let subtypes = cat.subtypes();
        for k in 0..counts[cat.index()] {
            entries.push(Destination {
                node: rng.random_range(0..network.len()),
                category: cat,
                subtype: subtypes[k % subtypes.len()].to_string(),
            });
        }
    }
    DestinationSet::new(entries, network)
}

/// Everything generated from one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCity {
    pub city: City,
    pub scenarios: Vec<ClimateScenario>,
}

/// Deterministic per spec: a fresh RNG stream is derived for each part.
pub fn generate_synth_city(spec: &SynthCitySpec) -> Result<SynthCity> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dem = synth_dem(spec, &mut rng)?;
    let g = dem.geometry;
    let network = synth_network(&g, spec.road_pitch)?;
    let destinations = synth_destinations(&network, spec.destinations, &mut rng)?;
    let zones = build_hex_zones(&g, spec.zone_radius_m, &network)?;
    let drainage = DrainageGrid::uniform(g, spec.drainage_mm, spec.runoff_coeff)?;
    let blocks = SyntheticSurveySpec::default().blocks;
    let residents = synthetic_residents(zones.len(), spec.residents_per_zone, &blocks, rng.random());
    let scenario_seed: u64 = rng.random();
    let scenarios = ScenarioId::ALL
        .iter()
        .map(|&id| ClimateScenario::synthetic(id, spec.scenario_samples, scenario_seed))
        .collect();
    let city = City {
        dem,
        drainage,
        network,
        zones,
        destinations,
        residents,
    };
    city.validate()?;
    Ok(SynthCity { city, scenarios })
}

/// Scenario whose every period holds a single rainfall value.
pub fn constant_scenario(id: ScenarioId, rain_mm: f64) -> Result<ClimateScenario> {
    let periods = PERIODS
        .iter()
        .map(|&(s, e)| build_cdf(&[rain_mm], s, e))
        .collect::<Result<Vec<_>>>()?;
    ClimateScenario::new(id, periods)
}

/// Two-zone city with a basin in the west zone that floods the only road
/// from that zone to every destination. Extra drainage in zone 0 is the one
/// action that shortens those trips.
pub fn toy_city(seed: u64) -> Result<City> {
    let (n_cols, n_rows, cell) = (8, 3, 500.0);
    let g = GridGeometry::new(n_cols, n_rows, cell)?;
    let z = (0..g.len())
        .map(|i| {
            let (row, col) = g.row_col(i);
            let mut z = 20.0 - 0.5 * col as f64;
            if row == 1 && col == 1 {
                z -= 3.0;
            }
            z
        })
        .collect();
    let dem = Dem::new(g, z, DEFAULT_NODATA)?;
    let nodes: Vec<NetworkNode> = (0..n_cols)
        .map(|c| {
            let (x, y) = g.cell_center(g.index(1, c));
            NetworkNode { id: c as u64 + 1, x, y }
        })
        .collect();
    let edges = (0..n_cols - 1)
        .map(|a| Edge {
            from: a,
            to: a + 1,
            length_m: cell,
            free_flow_kmh: SYNTH_SPEEDS_KMH.map(Some),
        })
        .collect();
    let network = RoadNetwork::new(nodes, edges)?;
    let last = n_cols - 1;
    let destinations = DestinationSet::new(
        Category::ALL
            .iter()
            .map(|&category| Destination {
                node: last,
                category,
                subtype: category.subtypes()[0].to_string(),
            })
            .collect(),
        &network,
    )?;
    let zones = build_hex_zones(&g, 1200.0, &network)?;
    let drainage = DrainageGrid::uniform(g, 0.0, 1.0)?;
    let blocks = SyntheticSurveySpec::default().blocks;
    let residents = synthetic_residents(zones.len(), 20, &blocks, seed);
    let city = City {
        dem,
        drainage,
        network,
        zones,
        destinations,
        residents,
    };
    city.validate()?;
    Ok(city)
}
