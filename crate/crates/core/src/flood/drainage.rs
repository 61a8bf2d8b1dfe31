use serde::{Deserialize, Serialize};

use crate::env::AdaptationMeasure;
use crate::error::{Error, Result};
use crate::raster::GridGeometry;

/// Per-cell drainage capacity (mm per event) and runoff coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrainageGrid {
    pub geometry: GridGeometry,
    pub capacity_mm: Vec<f64>,
    pub runoff_coeff: Vec<f64>,
}

impl DrainageGrid {
    pub fn uniform(geometry: GridGeometry, capacity_mm: f64, runoff_coeff: f64) -> Result<Self> {
        let grid = DrainageGrid {
            geometry,
            capacity_mm: vec![capacity_mm; geometry.len()],
            runoff_coeff: vec![runoff_coeff; geometry.len()],
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.geometry.len();
        if self.capacity_mm.len() != n || self.runoff_coeff.len() != n {
            return Err(Error::invalid(format!(
                "drainage grid layers must have {n} cells"
            )));
        }
        if let Some(i) = self
            .capacity_mm
            .iter()
            .position(|&d| !(d >= 0.0 && d.is_finite()))
        {
            return Err(Error::invalid(format!(
                "drainage capacity at cell {i} must be finite and >= 0"
            )));
        }
        if let Some(i) = self
            .runoff_coeff
            .iter()
            .position(|&k| !(0.0..=1.0).contains(&k))
        {
            return Err(Error::invalid(format!(
                "runoff coefficient at cell {i} must lie in [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Strength of the physical adaptation measures and the caps they saturate at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptationEffects {
    /// Extra drainage per installed unit, mm per event.
    pub drainage_step_mm: f64,
    pub drainage_cap_mm: f64,
    /// Runoff coefficient reduction per permeable-pavement unit.
    pub permeable_step: f64,
    pub permeable_floor: f64,
    /// Fractional loss mitigation per early-warning unit.
    pub early_warning_mitigation: f64,
    /// Fractional loss mitigation per emergency-services unit.
    pub emergency_mitigation: f64,
    /// Units of each measure a zone can hold.
    pub max_units: u32,
}

impl Default for AdaptationEffects {
    fn default() -> Self {
        AdaptationEffects {
            drainage_step_mm: 10.0,
            drainage_cap_mm: 60.0,
            permeable_step: 0.15,
            permeable_floor: 0.2,
            early_warning_mitigation: 0.15,
            emergency_mitigation: 0.10,
            max_units: 3,
        }
    }
}

impl AdaptationEffects {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.drainage_step_mm >= 0.0) {
            bad.push("adaptation.drainage_step_mm".to_string());
        }
        if !(self.drainage_cap_mm >= 0.0) {
            bad.push("adaptation.drainage_cap_mm".to_string());
        }
        if !(0.0..=1.0).contains(&self.permeable_step) {
            bad.push("adaptation.permeable_step".to_string());
        }
        if !(0.0..=1.0).contains(&self.permeable_floor) {
            bad.push("adaptation.permeable_floor".to_string());
        }
        if !(0.0..=1.0).contains(&self.early_warning_mitigation) {
            bad.push("adaptation.early_warning_mitigation".to_string());
        }
        if !(0.0..=1.0).contains(&self.emergency_mitigation) {
            bad.push("adaptation.emergency_mitigation".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }
}

/// Install one unit of a measure over `zone_cells`.
///
/// Only drainage and permeable pavement touch the grid; the early-warning and
/// emergency-services measures act on accessibility loss instead.
pub fn apply_adaptation(
    drainage: &DrainageGrid,
    measure: AdaptationMeasure,
    zone_cells: &[usize],
    effects: &AdaptationEffects,
) -> Result<DrainageGrid> {
    let n = drainage.geometry.len();
    if let Some(&c) = zone_cells.iter().find(|&&c| c >= n) {
        return Err(Error::OutOfRange(format!(
            "zone cell {c} outside raster of {n} cells"
        )));
    }
    let mut out = drainage.clone();
    match measure {
        AdaptationMeasure::IncreaseDrainage => {
            for &c in zone_cells {
                let cur = out.capacity_mm[c];
                // Never lower a capacity that already exceeds the cap.
                out.capacity_mm[c] = (cur + effects.drainage_step_mm)
                    .min(effects.drainage_cap_mm)
                    .max(cur);
            }
        }
        AdaptationMeasure::PermeablePavement => {
            for &c in zone_cells {
                let cur = out.runoff_coeff[c];
                out.runoff_coeff[c] = (cur - effects.permeable_step)
                    .max(effects.permeable_floor)
                    .min(cur);
            }
        }
        AdaptationMeasure::EarlyWarning | AdaptationMeasure::EmergencyServices => {}
    }
    Ok(out)
}
