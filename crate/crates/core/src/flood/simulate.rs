use crate::error::{Error, Result};
use crate::flood::drainage::DrainageGrid;
use crate::flood::hierarchy::{DepressionHierarchy, Sink, SpillTarget};
use crate::raster::{Dem, DepthRaster};

/// Result of one rainfall event, with its water budget in cubic meters.
#[derive(Debug, Clone, PartialEq)]
pub struct FloodOutcome {
    pub depths: DepthRaster,
    /// Rain times runoff coefficient over all valid cells.
    pub effective_rain_m3: f64,
    pub drained_m3: f64,
    pub stored_m3: f64,
    pub outflow_m3: f64,
}

impl FloodOutcome {
    /// Relative imbalance of `effective rain = drained + stored + outflow`.
    pub fn mass_balance_error(&self) -> f64 {
        let rhs = self.drained_m3 + self.stored_m3 + self.outflow_m3;
        let scale = self.effective_rain_m3.abs().max(f64::MIN_POSITIVE);
        (self.effective_rain_m3 - rhs).abs() / scale
    }
}

/// A terrain with its depression hierarchy precomputed, ready to run events.
#[derive(Debug, Clone)]
pub struct FloodModel {
    dem: Dem,
    hierarchy: DepressionHierarchy,
}

struct FillState {
    stored: Vec<f64>,
    full: Vec<bool>,
    outflow: f64,
}

impl FloodModel {
    pub fn new(dem: Dem) -> Result<Self> {
        let hierarchy = DepressionHierarchy::build(&dem)?;
        Ok(FloodModel { dem, hierarchy })
    }

    pub fn dem(&self) -> &Dem {
        &self.dem
    }

    pub fn hierarchy(&self) -> &DepressionHierarchy {
        &self.hierarchy
    }

    /// Instantaneous uniform rain event of `rain_mm` over the whole raster.
    pub fn simulate(&self, drainage: &DrainageGrid, rain_mm: f64) -> Result<FloodOutcome> {
        if !(rain_mm >= 0.0 && rain_mm.is_finite()) {
            return Err(Error::invalid(format!(
                "rain must be finite and >= 0, got {rain_mm}"
            )));
        }
        let g = self.dem.geometry;
        if drainage.geometry.n_cols != g.n_cols || drainage.geometry.n_rows != g.n_rows {
            return Err(Error::invalid("drainage grid shape differs from the DEM"));
        }
        drainage.validate()?;

        let area = g.cell_area();
        let h = &self.hierarchy;
        let mut inflow = vec![0.0; h.nodes.len()];
        let mut effective_rain = 0.0;
        let mut drained = 0.0;
        let mut direct_outflow = 0.0;
        for c in 0..g.len() {
            let Some(sink) = h.sinks[c] else { continue };
            let wet_mm = rain_mm * drainage.runoff_coeff[c];
            let runoff_mm = (wet_mm - drainage.capacity_mm[c]).max(0.0);
            effective_rain += wet_mm / 1000.0 * area;
            drained += wet_mm.min(drainage.capacity_mm[c]) / 1000.0 * area;
            let v = runoff_mm / 1000.0 * area;
            match sink {
                Sink::Leaf(k) => inflow[k] += v,
                Sink::Outlet => direct_outflow += v,
            }
        }

        let mut st = FillState {
            stored: vec![0.0; h.nodes.len()],
            full: vec![false; h.nodes.len()],
            outflow: direct_outflow,
        };
        for (leaf, &v) in inflow.iter().enumerate() {
            if v > 0.0 {
                self.pour(&mut st, leaf, v);
            }
        }

        let depths = self.depths(&st);
        let stored_m3 = depths.volume_m3();
        Ok(FloodOutcome {
            depths,
            effective_rain_m3: effective_rain,
            drained_m3: drained,
            stored_m3,
            outflow_m3: st.outflow,
        })
    }

    fn children_full(&self, st: &FillState, node: usize) -> bool {
        self.hierarchy.nodes[node]
            .children
            .iter()
            .all(|&k| st.full[k])
    }

    /// Deepest node with spare room inside a non-full subtree.
    fn descend(&self, st: &FillState, mut node: usize) -> usize {
        loop {
            let next = self.hierarchy.nodes[node]
                .children
                .iter()
                .copied()
                .find(|&k| !st.full[k]);
            match next {
                Some(k) => node = k,
                None => return node,
            }
        }
    }

    /// Child of `ancestor` on the path up from `node`, if `ancestor` is above it.
    fn branch_under(&self, mut node: usize, ancestor: usize) -> Option<usize> {
        let nodes = &self.hierarchy.nodes;
        while let Some(p) = nodes[node].parent {
            if p == ancestor {
                return Some(node);
            }
            node = p;
        }
        None
    }

    /// Put `v` cubic meters of water into `node`, which must have all its
    /// children full, and pass any overflow along the spill routes.
    fn pour(&self, st: &mut FillState, mut node: usize, mut v: f64) {
        let nodes = &self.hierarchy.nodes;
        loop {
            if !st.full[node] {
                let free = nodes[node].own_capacity_m3 - st.stored[node];
                if v < free {
                    st.stored[node] += v;
                    return;
                }
                st.stored[node] = nodes[node].own_capacity_m3;
                st.full[node] = true;
                v -= free;
                if v <= 0.0 {
                    return;
                }
            }
            match nodes[node].parent {
                Some(p) if self.children_full(st, p) => node = p,
                Some(p) => {
                    // Spill into the sibling the saddle leads to, or else the
                    // first sibling that still has room.
                    let preferred = nodes[node]
                        .target_leaf
                        .and_then(|t| self.branch_under(t, p))
                        .filter(|&b| !st.full[b]);
                    let branch = preferred.unwrap_or_else(|| {
                        nodes[p]
                            .children
                            .iter()
                            .copied()
                            .find(|&k| !st.full[k])
                            .expect("parent with a non-full child")
                    });
                    node = match preferred {
                        Some(_) => nodes[node].target_leaf.expect("preferred implies target"),
                        None => self.descend(st, branch),
                    };
                }
                None => match nodes[node].spill_target {
                    SpillTarget::DomainOutlet => {
                        st.outflow += v;
                        return;
                    }
                    SpillTarget::Node(leaf) => node = leaf,
                },
            }
        }
    }

    fn depths(&self, st: &FillState) -> DepthRaster {
        let h = &self.hierarchy;
        let g = self.dem.geometry;
        let area = g.cell_area();
        let n = h.nodes.len();
        let mut level = vec![f64::NEG_INFINITY; n];
        for (k, node) in h.nodes.iter().enumerate() {
            let v = st.stored[k];
            if st.full[k] {
                level[k] = node.spill_elevation;
            } else if v > 0.0 {
                let (base, base_count, extras) = if node.is_leaf() {
                    let first = node.own_cells[0];
                    (self.dem.z(first), 1usize, &node.own_cells[1..])
                } else {
                    let s = h.nodes[node.children[0]].spill_elevation;
                    let count = node.children.iter().map(|&c| h.nodes[c].cell_count).sum();
                    (s, count, &node.own_cells[..])
                };
                level[k] = fill_level(v / area, base, base_count, extras, &self.dem.elevations)
                    .min(node.spill_elevation);
            }
        }
        // Parents are created after their children, so walk ids downward.
        let mut effective = level.clone();
        for k in (0..n).rev() {
            if let Some(p) = h.nodes[k].parent {
                effective[k] = effective[k].max(effective[p]);
            }
        }
        let mut out = DepthRaster::zeros(g);
        for c in 0..g.len() {
            if let Some(k) = h.cell_node[c] {
                let d = effective[k] - self.dem.z(c);
                if d > 0.0 {
                    out.depths_mm[c] = d * 1000.0;
                }
            }
        }
        out
    }
}

/// Water surface at which `height_volume` (volume / cell area) is stored over
/// `base_count` cells already at `base` plus the sorted `extras` cells.
fn fill_level(
    height_volume: f64,
    base: f64,
    base_count: usize,
    extras: &[usize],
    elevations: &[f64],
) -> f64 {
    let mut level = base;
    let mut count = base_count as f64;
    let mut acc = 0.0;
    for &c in extras {
        let z = elevations[c];
        let step = count * (z - level);
        if acc + step >= height_volume {
            break;
        }
        acc += step;
        level = z;
        count += 1.0;
    }
    level + (height_volume - acc) / count
}

/// One-shot event: builds the hierarchy for `dem` and floods it.
pub fn simulate_flood(dem: &Dem, drainage: &DrainageGrid, rain_mm: f64) -> Result<FloodOutcome> {
    FloodModel::new(dem.clone())?.simulate(drainage, rain_mm)
}
