use serde::{Deserialize, Serialize};

use super::RoadNetwork;
use crate::error::{Error, Result};
use crate::raster::GridGeometry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Raster cell indices whose centers are nearest to this centroid.
    pub cells: Vec<usize>,
    /// Node index of the nearest network node.
    pub nearest_node: usize,
    pub population: f64,
}

/// Pointy-top hexagonal tiling. Zones are numbered row by row from the
/// lower-left corner; odd rows are offset east by half a column.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneGrid {
    pub radius: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    zones: Vec<Zone>,
    cell_zone: Vec<usize>,
}

impl ZoneGrid {
    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    /// Zone id of every raster cell.
    pub fn cell_zone(&self) -> &[usize] {
        &self.cell_zone
    }

    pub fn set_population(&mut self, population: &[f64]) -> Result<()> {
        if population.len() != self.zones.len() {
            return Err(Error::invalid(format!(
                "{} population weights for {} zones",
                population.len(),
                self.zones.len()
            )));
        }
        if let Some(p) = population.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid(format!("population weight {p} is negative or non-finite")));
        }
        for (z, &p) in self.zones.iter_mut().zip(population) {
            z.population = p;
        }
        Ok(())
    }

    /// Rebuild from stored zones, checking that they partition the raster.
    pub fn from_zones(geometry: &GridGeometry, radius: f64, zones: Vec<Zone>, network: &RoadNetwork) -> Result<Self> {
        let mut cell_zone = vec![usize::MAX; geometry.len()];
        for (k, z) in zones.iter().enumerate() {
            if z.id != k {
                return Err(Error::invalid(format!("zone ids must be 0..{}; found {} at {k}", zones.len(), z.id)));
            }
            if z.nearest_node >= network.len() {
                return Err(Error::invalid(format!("zone {k} references node index {}", z.nearest_node)));
            }
            if !(z.population >= 0.0 && z.population.is_finite()) {
                return Err(Error::invalid(format!("zone {k} has population {}", z.population)));
            }
            for &c in &z.cells {
                if c >= cell_zone.len() || cell_zone[c] != usize::MAX {
                    return Err(Error::invalid(format!("zone {k}: cell {c} is out of range or shared")));
                }
                cell_zone[c] = k;
            }
        }
        if let Some(c) = cell_zone.iter().position(|&z| z == usize::MAX) {
            return Err(Error::invalid(format!("cell {c} belongs to no zone")));
        }
        let w = 3f64.sqrt() * radius;
        Ok(Self {
            radius,
            n_cols: (geometry.width() / w).ceil() as usize,
            n_rows: (geometry.height() / (1.5 * radius)).ceil() as usize,
            zones,
            cell_zone,
        })
    }
}

fn centroid(g: &GridGeometry, radius: f64, row: usize, col: usize) -> (f64, f64) {
    let w = 3f64.sqrt() * radius;
    let offset = if row % 2 == 1 { 0.5 * w } else { 0.0 };
    (g.xll + col as f64 * w + offset, g.yll + row as f64 * 1.5 * radius)
}

/// Tile the raster extent with hexagons of circumradius `radius`. Each cell
/// joins the zone with the nearest centroid (lowest id on ties), which is
/// hexagon containment away from the extent border. Zone population defaults
/// to the member cell count.
pub fn build_hex_zones(geometry: &GridGeometry, radius: f64, network: &RoadNetwork) -> Result<ZoneGrid> {
    geometry.validate()?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("zone radius {radius} must be positive")));
    }
    if network.is_empty() {
        return Err(Error::invalid("cannot assign zones to an empty network"));
    }
    let w = 3f64.sqrt() * radius;
    let h = 1.5 * radius;
    let n_cols = (geometry.width() / w).ceil().max(1.0) as usize;
    let n_rows = (geometry.height() / h).ceil().max(1.0) as usize;

    let mut zones: Vec<Zone> = Vec::with_capacity(n_cols * n_rows);
    for row in 0..n_rows {
        for col in 0..n_cols {
            let (x, y) = centroid(geometry, radius, row, col);
            let nearest_node = network
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, n)| (i, (n.x - x).powi(2) + (n.y - y).powi(2)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
                .0;
            zones.push(Zone {
                id: zones.len(),
                x,
                y,
                cells: Vec::new(),
                nearest_node,
                population: 0.0,
            });
        }
    }

    let mut cell_zone = Vec::with_capacity(geometry.len());
    for i in 0..geometry.len() {
        let (x, y) = geometry.cell_center(i);
        // The nearest lattice point is within two rows and columns of the
        // rounded position.
        let r0 = ((y - geometry.yll) / h).round() as i64;
        let c0 = ((x - geometry.xll) / w).round() as i64;
        let mut best = (usize::MAX, f64::INFINITY);
        for r in (r0 - 2).max(0)..=(r0 + 2).min(n_rows as i64 - 1) {
            for c in (c0 - 2).max(0)..=(c0 + 2).min(n_cols as i64 - 1) {
                let id = r as usize * n_cols + c as usize;
                let z = &zones[id];
                let d = (z.x - x).powi(2) + (z.y - y).powi(2);
                if d < best.1 || (d == best.1 && id < best.0) {
                    best = (id, d);
                }
            }
        }
        zones[best.0].cells.push(i);
        cell_zone.push(best.0);
    }
    for z in &mut zones {
        z.population = z.cells.len() as f64;
    }
    Ok(ZoneGrid {
        radius,
        n_cols,
        n_rows,
        zones,
        cell_zone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::NetworkNode;

    fn one_node() -> RoadNetwork {
        RoadNetwork::new(vec![NetworkNode { id: 0, x: 0.0, y: 0.0 }], vec![]).unwrap()
    }

    #[test]
    fn hundred_meter_extent() {
        let g = GridGeometry::new(10, 10, 10.0).unwrap();
        let zg = build_hex_zones(&g, 50.0, &one_node()).unwrap();
        assert_eq!((zg.n_cols, zg.n_rows, zg.len()), (2, 2, 4));
        assert_eq!(zg.zones().iter().map(|z| z.cells.len()).sum::<usize>(), 100);
    }

    #[test]
    fn partition_matches_brute_force() {
        let g = GridGeometry::new(37, 23, 7.0).unwrap();
        for radius in [9.0, 20.0, 50.0, 300.0] {
            let zg = build_hex_zones(&g, radius, &one_node()).unwrap();
            for i in 0..g.len() {
                let (x, y) = g.cell_center(i);
                let mut best = (0, f64::INFINITY);
                for z in zg.zones() {
                    let d = (z.x - x).powi(2) + (z.y - y).powi(2);
                    if d < best.1 {
                        best = (z.id, d);
                    }
                }
                assert_eq!(zg.cell_zone()[i], best.0, "radius {radius} cell {i}");
            }
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let g = GridGeometry::new(4, 4, 10.0).unwrap();
        assert!(build_hex_zones(&g, 0.0, &one_node()).is_err());
        assert!(build_hex_zones(&g, f64::NAN, &one_node()).is_err());
    }
}
