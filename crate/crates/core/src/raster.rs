//! Regular raster grids shared by the flood, transport and zoning code.
//!
//! Rows run north to south (row 0 is the top of the grid, as in ESRI ASCII
//! files); columns run west to east. Cell values are stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NODATA: f64 = -9999.0;

/// Placement and resolution of a raster in map coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub n_cols: usize,
    pub n_rows: usize,
    pub cell_size: f64,
    pub xll: f64,
    pub yll: f64,
}

impl GridGeometry {
    pub fn new(n_cols: usize, n_rows: usize, cell_size: f64) -> Result<Self> {
        let g = GridGeometry {
            n_cols,
            n_rows,
            cell_size,
            xll: 0.0,
            yll: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cols < 2 || self.n_rows < 2 {
            return Err(Error::invalid(format!(
                "raster must be at least 2x2, got {}x{}",
                self.n_cols, self.n_rows
            )));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::invalid(format!(
                "cell size must be positive, got {}",
                self.cell_size
            )));
        }
        if !self.xll.is_finite() || !self.yll.is_finite() {
            return Err(Error::invalid("raster corner coordinates must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_cols, index % self.n_cols)
    }

    #[inline]
    pub fn is_edge(&self, index: usize) -> bool {
        let (r, c) = self.row_col(index);
        r == 0 || c == 0 || r + 1 == self.n_rows || c + 1 == self.n_cols
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.cell_size
    }

    pub fn y_top(&self) -> f64 {
        self.yll + self.height()
    }

    /// Map coordinates of a cell center.
    pub fn cell_center(&self, index: usize) -> (f64, f64) {
        let (r, c) = self.row_col(index);
        (
            self.xll + (c as f64 + 0.5) * self.cell_size,
            self.y_top() - (r as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xll && x <= self.xll + self.width() && y >= self.yll && y <= self.y_top()
    }

    /// Continuous grid coordinates (column, row) of a map point; cell (r, c)
    /// spans `[c, c+1) x [r, r+1)`.
    pub fn to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.xll) / self.cell_size,
            (self.y_top() - y) / self.cell_size,
        )
    }

    /// In-bounds neighbors of a cell as `(direction slot, neighbor index)`.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (r, c) = self.row_col(index);
        D8_OFFSETS
            .iter()
            .enumerate()
            .filter_map(move |(slot, &(dr, dc))| {
                let nr = r as isize + dr;
                let nc = c as isize + dc;
                if nr < 0 || nc < 0 || nr >= self.n_rows as isize || nc >= self.n_cols as isize {
                    None
                } else {
                    Some((slot, self.index(nr as usize, nc as usize)))
                }
            })
    }
}

/// Neighbor offsets `(d_row, d_col)` in the order N, NE, E, SE, S, SW, W, NW.
pub const D8_OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Digital elevation model in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Dem {
    pub geometry: GridGeometry,
    pub elevations: Vec<f64>,
    pub nodata: f64,
}

impl Dem {
    pub fn new(geometry: GridGeometry, elevations: Vec<f64>, nodata: f64) -> Result<Self> {
        let dem = Dem {
            geometry,
            elevations,
            nodata,
        };
        dem.validate()?;
        Ok(dem)
    }

    /// Convenience constructor for a grid at the origin without nodata cells.
    pub fn from_rows(rows: &[Vec<f64>], cell_size: f64) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid("ragged elevation rows"));
        }
        let geometry = GridGeometry::new(n_cols, n_rows, cell_size)?;
        Dem::new(geometry, rows.concat(), DEFAULT_NODATA)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.elevations.len() != self.geometry.len() {
            return Err(Error::invalid(format!(
                "expected {} elevations, got {}",
                self.geometry.len(),
                self.elevations.len()
            )));
        }
        if let Some(i) = self
            .elevations
            .iter()
            .position(|&z| !self.is_nodata_value(z) && !z.is_finite())
        {
            return Err(Error::invalid(format!("non-finite elevation at cell {i}")));
        }
        Ok(())
    }

    fn is_nodata_value(&self, z: f64) -> bool {
        z == self.nodata || z.is_nan()
    }

    #[inline]
    pub fn is_nodata(&self, index: usize) -> bool {
        self.is_nodata_value(self.elevations[index])
    }

    #[inline]
    pub fn z(&self, index: usize) -> f64 {
        self.elevations[index]
    }

    pub fn valid_cells(&self) -> usize {
        (0..self.elevations.len()).filter(|&i| !self.is_nodata(i)).count()
    }
}

/// Ponded water depth per cell, in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub geometry: GridGeometry,
    pub depths_mm: Vec<f64>,
}

impl DepthRaster {
    pub fn zeros(geometry: GridGeometry) -> Self {
        DepthRaster {
            geometry,
            depths_mm: vec![0.0; geometry.len()],
        }
    }

    pub fn max_mm(&self) -> f64 {
        self.depths_mm.iter().copied().fold(0.0, f64::max)
    }

    /// Stored water volume in cubic meters.
    pub fn volume_m3(&self) -> f64 {
        self.depths_mm.iter().sum::<f64>() / 1000.0 * self.geometry.cell_area()
    }

    pub fn is_dry(&self) -> bool {
        self.depths_mm.iter().all(|&d| d == 0.0)
    }
}
