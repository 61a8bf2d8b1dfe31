use crate::error::{Error, Result};
use crate::flood::DrainageGrid;
use crate::raster::Dem;
use crate::transport::{DestinationSet, RoadNetwork, ZoneGrid};
use crate::wellbeing::Resident;

/// Everything the simulator needs about one city.
#[derive(Debug, Clone, PartialEq)]
pub struct City {
    pub dem: Dem,
    pub drainage: DrainageGrid,
    pub network: RoadNetwork,
    pub zones: ZoneGrid,
    pub destinations: DestinationSet,
    pub residents: Vec<Resident>,
}

impl City {
    pub fn validate(&self) -> Result<()> {
        self.dem.validate()?;
        self.drainage.validate()?;
        if self.drainage.geometry != self.dem.geometry {
            return Err(Error::invalid("drainage grid does not match the terrain grid"));
        }
        if self.zones.cell_zone().len() != self.dem.geometry.len() {
            return Err(Error::invalid("zones do not partition the terrain grid"));
        }
        if let Some(n) = self.network.nodes().iter().find(|n| !self.dem.geometry.contains(n.x, n.y)) {
            return Err(Error::OutOfRange(format!("network node {} lies outside the terrain", n.id)));
        }
        Ok(())
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }
}
