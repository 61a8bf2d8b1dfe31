use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Dem, GridGeometry, D8_OFFSETS};

/// Compass neighbor, listed in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
    ];

    pub fn offset(self) -> (isize, isize) {
        D8_OFFSETS[self as usize]
    }

    pub fn is_diagonal(self) -> bool {
        (self as usize) % 2 == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flow {
    To(Direction),
    /// Interior cell without a strictly lower neighbor.
    Pit,
    /// Edge cell without a strictly lower neighbor; drains out of the domain.
    Boundary,
    NoData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub geometry: GridGeometry,
    pub flows: Vec<Flow>,
}

impl FlowField {
    /// Index of the downstream cell, if the cell drains to a neighbor.
    pub fn receiver(&self, index: usize) -> Option<usize> {
        match self.flows[index] {
            Flow::To(d) => {
                let (r, c) = self.geometry.row_col(index);
                let (dr, dc) = d.offset();
                Some(
                    self.geometry
                        .index((r as isize + dr) as usize, (c as isize + dc) as usize),
                )
            }
            _ => None,
        }
    }
}

/// D8 steepest descent. Slopes are drop over distance, with diagonal steps
/// `cell_size * sqrt(2)` long; equal slopes resolve to the first direction in
/// N, NE, E, SE, S, SW, W, NW order. Nodata cells neither give nor take water.
pub fn compute_flow_directions(dem: &Dem) -> Result<FlowField> {
    dem.validate()?;
    let g = dem.geometry;
    if dem.valid_cells() == 0 {
        return Err(Error::invalid("raster contains only nodata cells"));
    }
    let diag = g.cell_size * std::f64::consts::SQRT_2;
    let flows = (0..g.len())
        .map(|i| {
            if dem.is_nodata(i) {
                return Flow::NoData;
            }
            let z = dem.z(i);
            let mut best: Option<(f64, Direction)> = None;
            for (slot, n) in g.neighbors(i) {
                if dem.is_nodata(n) {
                    continue;
                }
                let dir = Direction::ALL[slot];
                let dist = if dir.is_diagonal() { diag } else { g.cell_size };
                let slope = (z - dem.z(n)) / dist;
                if slope > 0.0 && best.is_none_or(|(s, _)| slope > s) {
                    best = Some((slope, dir));
                }
            }
            match best {
                Some((_, d)) => Flow::To(d),
                None if g.is_edge(i) => Flow::Boundary,
                None => Flow::Pit,
            }
        })
        .collect();
    Ok(FlowField { geometry: g, flows })
}
