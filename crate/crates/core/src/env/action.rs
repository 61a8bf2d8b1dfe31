use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four adaptation measures an agent can install in a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdaptationMeasure {
    IncreaseDrainage,
    PermeablePavement,
    EarlyWarning,
    EmergencyServices,
}

impl AdaptationMeasure {
    pub const ALL: [AdaptationMeasure; 4] = [
        AdaptationMeasure::IncreaseDrainage,
        AdaptationMeasure::PermeablePavement,
        AdaptationMeasure::EarlyWarning,
        AdaptationMeasure::EmergencyServices,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::invalid(format!("unknown adaptation measure index {i}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            AdaptationMeasure::IncreaseDrainage => "increase_drainage",
            AdaptationMeasure::PermeablePavement => "permeable_pavement",
            AdaptationMeasure::EarlyWarning => "early_warning",
            AdaptationMeasure::EmergencyServices => "emergency_services",
        }
    }

    pub fn is_physical(self) -> bool {
        matches!(
            self,
            AdaptationMeasure::IncreaseDrainage | AdaptationMeasure::PermeablePavement
        )
    }
}

impl fmt::Display for AdaptationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdaptationMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown adaptation measure '{s}'")))
    }
}

/// A decision for one step: do nothing, or install a measure in a zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptationAction {
    NoOp,
    Install {
        measure: AdaptationMeasure,
        zone: usize,
    },
}

impl AdaptationAction {
    /// Number of discrete actions for `zones` zones: NoOp plus four per zone.
    pub fn count(zones: usize) -> usize {
        4 * zones + 1
    }

    /// Index 0 is NoOp; `1 + 4 * zone + measure` installs a measure.
    pub fn from_index(index: usize, zones: usize) -> Result<Self> {
        if index == 0 {
            return Ok(AdaptationAction::NoOp);
        }
        if index >= Self::count(zones) {
            return Err(Error::InvalidAction {
                action: index,
                reason: format!("only {} actions for {zones} zones", Self::count(zones)),
            });
        }
        let k = index - 1;
        Ok(AdaptationAction::Install {
            measure: AdaptationMeasure::from_index(k % 4)?,
            zone: k / 4,
        })
    }

    pub fn index(self) -> usize {
        match self {
            AdaptationAction::NoOp => 0,
            AdaptationAction::Install { measure, zone } => 1 + 4 * zone + measure.index(),
        }
    }
}

impl fmt::Display for AdaptationAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptationAction::NoOp => f.write_str("noop"),
            AdaptationAction::Install { measure, zone } => write!(f, "{measure}@{zone}"),
        }
    }
}
