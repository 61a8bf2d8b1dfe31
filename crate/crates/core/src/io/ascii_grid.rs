//! ESRI ASCII grid (`.asc`) reading and writing.
//!
//! ```text
//! ncols         4
//! nrows         3
//! xllcorner     0
//! yllcorner     0
//! cellsize      10
//! NODATA_value  -9999
//! 12.5 12.1 11.9 11.0
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{Dem, DepthRaster, GridGeometry, DEFAULT_NODATA};

/// Parsed grid: geometry, row-major values and the nodata sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct AsciiGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
    pub nodata: f64,
}

const REQUIRED: [&str; 5] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize"];

pub fn parse_ascii_grid(text: &str, path: &Path) -> Result<AsciiGrid> {
    let mut header: Vec<(String, f64)> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(ln, line)) = lines.peek() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic()) {
            break;
        }
        let key_lc = key.to_ascii_lowercase();
        if !REQUIRED.contains(&key_lc.as_str()) && key_lc != "nodata_value" {
            return Err(Error::parse(path, ln + 1, key, "unknown header key"));
        }
        let value = parts
            .next()
            .ok_or_else(|| Error::parse(path, ln + 1, key, "missing header value"))?;
        if parts.next().is_some() {
            return Err(Error::parse(path, ln + 1, key, "trailing tokens after header value"));
        }
        let v: f64 = value
            .parse()
            .map_err(|_| Error::parse(path, ln + 1, key, format!("'{value}' is not a number")))?;
        if header.iter().any(|(k, _)| *k == key_lc) {
            return Err(Error::parse(path, ln + 1, key, "duplicate header key"));
        }
        header.push((key_lc, v));
        lines.next();
    }

    let get = |k: &str| -> Result<f64> {
        header
            .iter()
            .find(|(key, _)| key == k)
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::parse(path, 0, k, "missing header key"))
    };
    let count = |k: &str| -> Result<usize> {
        let v = get(k)?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(Error::parse(path, 0, k, format!("{v} is not a cell count")));
        }
        Ok(v as usize)
    };
    let geometry = GridGeometry {
        n_cols: count("ncols")?,
        n_rows: count("nrows")?,
        cell_size: get("cellsize")?,
        xll: get("xllcorner")?,
        yll: get("yllcorner")?,
    };
    geometry
        .validate()
        .map_err(|e| Error::parse(path, 0, "header", e.to_string()))?;
    let nodata = get("nodata_value").unwrap_or(DEFAULT_NODATA);

    let mut values = Vec::with_capacity(geometry.len());
    for (ln, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                Error::parse(
                    path,
                    ln + 1,
                    format!("cell {}", values.len()),
                    format!("'{tok}' is not a number"),
                )
            })?;
            if values.len() == geometry.len() {
                return Err(Error::parse(path, ln + 1, "data", "more cells than ncols * nrows"));
            }
            values.push(v);
        }
    }
    if values.len() != geometry.len() {
        return Err(Error::parse(
            path,
            0,
            "data",
            format!("expected {} cells, found {}", geometry.len(), values.len()),
        ));
    }
    Ok(AsciiGrid {
        geometry,
        values,
        nodata,
    })
}

pub fn format_ascii_grid(geometry: &GridGeometry, values: &[f64], nodata: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols         {}", geometry.n_cols);
    let _ = writeln!(out, "nrows         {}", geometry.n_rows);
    let _ = writeln!(out, "xllcorner     {}", geometry.xll);
    let _ = writeln!(out, "yllcorner     {}", geometry.yll);
    let _ = writeln!(out, "cellsize      {}", geometry.cell_size);
    let _ = writeln!(out, "NODATA_value  {}", nodata);
    for row in values.chunks(geometry.n_cols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_ascii_grid(path: &Path) -> Result<AsciiGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

pub fn read_dem(path: &Path) -> Result<Dem> {
    let grid = read_ascii_grid(path)?;
    Dem::new(grid.geometry, grid.values, grid.nodata)
        .map_err(|e| Error::parse(path, 0, "data", e.to_string()))
}

pub fn write_dem(dem: &Dem, path: &Path) -> Result<()> {
    super::write_file(path, &format_ascii_grid(&dem.geometry, &dem.elevations, dem.nodata))
}

/// Depths are written in millimeters with the default nodata sentinel.
pub fn write_depths(depths: &DepthRaster, path: &Path) -> Result<()> {
    super::write_file(
        path,
        &format_ascii_grid(&depths.geometry, &depths.depths_mm, DEFAULT_NODATA),
    )
}
