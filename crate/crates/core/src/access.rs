//! Gravity-based accessibility and the loss of a flooded state against the
//! dry baseline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{edge_times, times_to_nearest, Category, DepthSpeedCurve, DestinationSet, Mode, RoadNetwork, ZoneGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GravityKind {
    InversePower,
    NegExponential,
    ModGaussian,
}

impl GravityKind {
    pub const ALL: [GravityKind; 3] = [GravityKind::InversePower, GravityKind::NegExponential, GravityKind::ModGaussian];
}

/// Impedance parameters of one mode: power exponent, exponential rate
/// (per minute) and gaussian scale (minutes squared).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impedance {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravityParams {
    pub drive: Impedance,
    pub cycle: Impedance,
    pub walk: Impedance,
    pub transit: Impedance,
    pub t_min: f64,
}

impl Default for GravityParams {
    fn default() -> Self {
        let motor = Impedance {
            alpha: 1.5,
            beta: 0.08,
            nu: 400.0,
        };
        Self {
            drive: motor,
            cycle: Impedance {
                alpha: 1.2,
                beta: 0.12,
                nu: 225.0,
            },
            walk: Impedance {
                alpha: 1.0,
                beta: 0.20,
                nu: 100.0,
            },
            transit: motor,
            t_min: 1.0,
        }
    }
}

impl GravityParams {
    pub fn mode(&self, mode: Mode) -> &Impedance {
        match mode {
            Mode::Drive => &self.drive,
            Mode::Cycle => &self.cycle,
            Mode::Walk => &self.walk,
            Mode::Transit => &self.transit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        let mut keys = Vec::new();
        for m in Mode::ALL {
            let p = self.mode(m);
            for (name, v) in [("alpha", p.alpha), ("beta", p.beta), ("nu", p.nu)] {
                if !ok(v) {
                    keys.push(format!("gravity.{m}.{name}"));
                }
            }
        }
        if !ok(self.t_min) {
            keys.push("gravity.t_min".into());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys })
        }
    }
}

/// Impedance of a trip of `t` minutes (`None` = unreachable), clamped to [0, 1].
pub fn gravity_value(kind: GravityKind, params: &GravityParams, mode: Mode, t: Option<f64>) -> f64 {
    let Some(t) = t else { return 0.0 };
    let p = params.mode(mode);
    let v = match kind {
        GravityKind::InversePower => t.max(params.t_min).powf(-p.alpha),
        GravityKind::NegExponential => (-p.beta * t).exp(),
        GravityKind::ModGaussian => (-t * t / p.nu).exp(),
    };
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessCell {
    pub time_min: Option<f64>,
    /// Indexed like [`GravityKind::ALL`].
    pub gravity: [f64; 3],
}

const N_CAT: usize = 3;
const N_MODE: usize = 4;

fn slot(zone: usize, category: Category, mode: Mode) -> usize {
    (zone * N_CAT + category.index()) * N_MODE + mode.index()
}

/// Travel times and gravity values per (zone, category, mode).
#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityTable {
    n_zones: usize,
    cells: Vec<AccessCell>,
}

impl AccessibilityTable {
    /// Build from per-(zone, category, mode) minutes laid out zone-major,
    /// then category, then mode.
    pub fn from_times(n_zones: usize, times_min: &[Option<f64>], params: &GravityParams) -> Result<Self> {
        if times_min.len() != n_zones * N_CAT * N_MODE {
            return Err(Error::invalid(format!("{} times for {n_zones} zones", times_min.len())));
        }
        let cells = times_min
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let mode = Mode::ALL[k % N_MODE];
                AccessCell {
                    time_min: t,
                    gravity: GravityKind::ALL.map(|g| gravity_value(g, params, mode, t)),
                }
            })
            .collect();
        Ok(Self { n_zones, cells })
    }

    pub fn n_zones(&self) -> usize {
        self.n_zones
    }

    pub fn get(&self, zone: usize, category: Category, mode: Mode) -> &AccessCell {
        &self.cells[slot(zone, category, mode)]
    }
}

/// Per-mode edge times reused across categories and zones.
pub fn compute_accessibility(
    network: &RoadNetwork,
    zones: &ZoneGrid,
    destinations: &DestinationSet,
    edge_depths: &[f64],
    curve: &DepthSpeedCurve,
    params: &GravityParams,
) -> Result<AccessibilityTable> {
    let n_zones = zones.len();
    let mut times = vec![None; n_zones * N_CAT * N_MODE];
    let targets: Vec<Vec<usize>> = Category::ALL.iter().map(|&c| destinations.nodes_of(c)).collect();
    for mode in Mode::ALL {
        let w = edge_times(network, edge_depths, curve, mode)?;
        for category in Category::ALL {
            let node_times = times_to_nearest(network, &w, &targets[category.index()]);
            for z in zones.zones() {
                times[slot(z.id, category, mode)] = node_times[z.nearest_node].map(|s| s / 60.0);
            }
        }
    }
    AccessibilityTable::from_times(n_zones, &times, params)
}

/// Aggregation weights over categories and modes (uniform by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub category: [f64; 3],
    pub mode: [f64; 4],
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            category: [1.0; 3],
            mode: [1.0; 4],
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let bad = |w: &[f64]| w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || w.iter().sum::<f64>() <= 0.0;
        let mut keys = Vec::new();
        if bad(&self.category) {
            keys.push("loss_weights.category".to_string());
        }
        if bad(&self.mode) {
            keys.push("loss_weights.mode".to_string());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    n_zones: usize,
    cells: Vec<f64>,
    /// Per zone and mode, weighted over categories.
    zone_mode: Vec<f64>,
    zone: Vec<f64>,
}

impl LossTable {
    pub fn zeros(n_zones: usize) -> Self {
        Self {
            n_zones,
            cells: vec![0.0; n_zones * N_CAT * N_MODE],
            zone_mode: vec![0.0; n_zones * N_MODE],
            zone: vec![0.0; n_zones],
        }
    }

    pub fn n_zones(&self) -> usize {
        self.n_zones
    }

    pub fn get(&self, zone: usize, category: Category, mode: Mode) -> f64 {
        self.cells[slot(zone, category, mode)]
    }

    pub fn zone_mode(&self, zone: usize, mode: Mode) -> f64 {
        self.zone_mode[zone * N_MODE + mode.index()]
    }

    /// Weighted mean over categories and modes.
    pub fn zone(&self, zone: usize) -> f64 {
        self.zone[zone]
    }

    pub fn zone_losses(&self) -> &[f64] {
        &self.zone
    }
}

/// Relative loss per gravity function, averaged over the three functions and
/// clamped to [0, 1]. A function with zero baseline value contributes 0.
pub fn cell_loss(base: &AccessCell, flooded: &AccessCell) -> f64 {
    let sum: f64 = base
        .gravity
        .iter()
        .zip(&flooded.gravity)
        .map(|(&b, &f)| if b > 0.0 { (b - f) / b } else { 0.0 })
        .sum();
    (sum / 3.0).clamp(0.0, 1.0)
}

pub fn accessibility_loss(baseline: &AccessibilityTable, flooded: &AccessibilityTable, weights: &LossWeights) -> Result<LossTable> {
    if baseline.n_zones != flooded.n_zones || baseline.cells.len() != flooded.cells.len() {
        return Err(Error::invalid(format!(
            "baseline covers {} zones, flooded covers {}",
            baseline.n_zones, flooded.n_zones
        )));
    }
    weights.validate()?;
    let cells: Vec<f64> = baseline.cells.iter().zip(&flooded.cells).map(|(b, f)| cell_loss(b, f)).collect();
    let cat_total: f64 = weights.category.iter().sum();
    let mode_total: f64 = weights.mode.iter().sum();
    let mut zone_mode = vec![0.0; baseline.n_zones * N_MODE];
    let mut zone = vec![0.0; baseline.n_zones];
    for z in 0..baseline.n_zones {
        for m in Mode::ALL {
            let v: f64 = Category::ALL
                .iter()
                .map(|&c| weights.category[c.index()] * cells[slot(z, c, m)])
                .sum::<f64>()
                / cat_total;
            zone_mode[z * N_MODE + m.index()] = v;
            zone[z] += weights.mode[m.index()] * v / mode_total;
        }
        zone[z] = zone[z].clamp(0.0, 1.0);
    }
    Ok(LossTable {
        n_zones: baseline.n_zones,
        cells,
        zone_mode,
        zone,
    })
}

fn fmt_time(t: Option<f64>) -> String {
    t.map(|t| t.to_string()).unwrap_or_default()
}

/// `zone_id,category,mode,t_base_min,t_flood_min,loss`; unreachable times are empty.
pub fn format_loss_csv(baseline: &AccessibilityTable, flooded: &AccessibilityTable, loss: &LossTable) -> String {
    let mut out = String::from("zone_id,category,mode,t_base_min,t_flood_min,loss\n");
    for z in 0..loss.n_zones {
        for c in Category::ALL {
            for m in Mode::ALL {
                let _ = writeln!(
                    out,
                    "{z},{c},{m},{},{},{}",
                    fmt_time(baseline.get(z, c, m).time_min),
                    fmt_time(flooded.get(z, c, m).time_min),
                    loss.get(z, c, m)
                );
            }
        }
    }
    out
}

/// `zone_id,loss,drive,cycle,walk,transit`.
pub fn format_zone_loss_csv(loss: &LossTable) -> String {
    let mut out = String::from("zone_id,loss,drive,cycle,walk,transit\n");
    for z in 0..loss.n_zones {
        let modes: Vec<String> = Mode::ALL.iter().map(|&m| loss.zone_mode(z, m).to_string()).collect();
        let _ = writeln!(out, "{z},{},{}", loss.zone(z), modes.join(","));
    }
    out
}
