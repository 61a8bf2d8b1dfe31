use serde::{Deserialize, Serialize};

use super::Mode;
use crate::error::{Error, Result};

/// `v(d) = a d^2 + b d + c` km/h for depth `d` in millimeters, valid below
/// `critical_mm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub critical_mm: f64,
}

impl SpeedCurve {
    pub const fn linear(c: f64, critical_mm: f64) -> Self {
        Self {
            a: 0.0,
            b: -c / critical_mm,
            c,
            critical_mm,
        }
    }

    pub fn eval(&self, depth_mm: f64) -> f64 {
        (self.a * depth_mm + self.b) * depth_mm + self.c
    }

    /// Non-increasing and positive on `[0, critical)`. The derivative is
    /// linear, so checking both ends suffices.
    fn check(&self, name: &str, keys: &mut Vec<String>) {
        let finite = [self.a, self.b, self.c, self.critical_mm].iter().all(|v| v.is_finite());
        let slope = |d: f64| 2.0 * self.a * d + self.b;
        if !finite
            || self.critical_mm <= 0.0
            || self.c <= 0.0
            || slope(0.0) > 0.0
            || slope(self.critical_mm) > 0.0
            || self.eval(self.critical_mm) < 0.0
        {
            keys.push(format!("depth_speed.{name}"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthSpeedCurve {
    pub drive: SpeedCurve,
    pub cycle: SpeedCurve,
    pub walk: SpeedCurve,
    pub transit: SpeedCurve,
    pub v_min_kmh: f64,
}

const DRIVE: SpeedCurve = SpeedCurve {
    a: 0.0009,
    b: -0.5529,
    c: 86.9448,
    critical_mm: 300.0,
};

impl Default for DepthSpeedCurve {
    fn default() -> Self {
        Self {
            drive: DRIVE,
            cycle: SpeedCurve::linear(15.0, 200.0),
            walk: SpeedCurve::linear(5.0, 300.0),
            transit: DRIVE,
            v_min_kmh: 1.0,
        }
    }
}

impl DepthSpeedCurve {
    pub fn curve(&self, mode: Mode) -> &SpeedCurve {
        match mode {
            Mode::Drive => &self.drive,
            Mode::Cycle => &self.cycle,
            Mode::Walk => &self.walk,
            Mode::Transit => &self.transit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut keys = Vec::new();
        for mode in Mode::ALL {
            self.curve(mode).check(mode.name(), &mut keys);
        }
        if !(self.v_min_kmh > 0.0 && self.v_min_kmh.is_finite()) {
            keys.push("depth_speed.v_min_kmh".into());
        }
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys })
        }
    }
}

/// Speed on a flooded segment, `None` when the depth reaches the critical cutoff.
pub fn adjusted_speed(curve: &DepthSpeedCurve, mode: Mode, free_flow_kmh: f64, depth_mm: f64) -> Result<Option<f64>> {
    if !(depth_mm >= 0.0) {
        return Err(Error::invalid(format!("depth {depth_mm} mm is negative")));
    }
    let c = curve.curve(mode);
    if depth_mm >= c.critical_mm {
        return Ok(None);
    }
    Ok(Some(free_flow_kmh.min(c.eval(depth_mm)).max(curve.v_min_kmh)))
}
