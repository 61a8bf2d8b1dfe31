//! Self-describing city bundle: a directory of plain-text files plus a JSON manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ascii_grid::{format_ascii_grid, parse_ascii_grid};
use super::network::{format_destinations, format_edges, format_nodes, format_zones, parse_destinations, parse_network, parse_zones};
use super::write_file;
use crate::climate::ClimateScenario;
use crate::env::City;
use crate::error::{Error, Result};
use crate::flood::DrainageGrid;
use crate::raster::{Dem, DEFAULT_NODATA};
use crate::synth::{generate_synth_city, SynthCitySpec};
use crate::wellbeing::{
    fit_wellbeing, format_residents, format_survey, parse_residents, synthetic_survey, FitReport, SyntheticSurveySpec,
    WellbeingModel,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BUNDLE_VERSION: u32 = 1;

/// Bundle-relative file paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFiles {
    pub dem: String,
    pub drainage_capacity: String,
    pub runoff_coeff: String,
    pub nodes: String,
    pub edges: String,
    pub destinations: String,
    pub zones: String,
    pub residents: String,
    pub scenarios: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wellbeing_model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub zone_radius_m: f64,
    pub files: BundleFiles,
    /// File role to format name and version.
    pub formats: BTreeMap<String, String>,
    /// Generator settings, when the bundle is synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SynthCitySpec>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let m: Manifest =
            serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), "manifest", e.to_string()))?;
        if m.format_version != BUNDLE_VERSION {
            return Err(Error::parse(path, 0, "format_version", format!("unsupported version {}", m.format_version)));
        }
        if !(m.zone_radius_m > 0.0 && m.zone_radius_m.is_finite()) {
            return Err(Error::parse(path, 0, "zone_radius_m", "must be positive"));
        }
        if m.files.scenarios.is_empty() {
            return Err(Error::parse(path, 0, "files.scenarios", "at least one scenario is required"));
        }
        Ok(m)
    }
}

fn default_formats() -> BTreeMap<String, String> {
    [
        ("dem", "esri_ascii_grid/1"),
        ("drainage", "esri_ascii_grid/1"),
        ("network", "csv/1"),
        ("destinations", "csv/1"),
        ("zones", "csv/1"),
        ("residents", "csv/1"),
        ("scenarios", "json/1"),
        ("survey", "csv/1"),
        ("wellbeing_model", "json/1"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// A loaded bundle.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub city: City,
    pub scenarios: Vec<ClimateScenario>,
}

impl Bundle {
    pub fn survey_path(&self) -> Option<PathBuf> {
        self.manifest.files.survey.as_ref().map(|p| self.root.join(p))
    }

    pub fn model_path(&self) -> Option<PathBuf> {
        self.manifest.files.wellbeing_model.as_ref().map(|p| self.root.join(p))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Load and cross-validate every file of a bundle directory.
pub fn load_bundle(root: &Path) -> Result<Bundle> {
    let manifest_path = root.join(MANIFEST_FILE);
    let manifest = Manifest::from_json(&read(&manifest_path)?, &manifest_path)?;
    let f = &manifest.files;
    let at = |p: &str| root.join(p);

    let dem_path = at(&f.dem);
    let grid = parse_ascii_grid(&read(&dem_path)?, &dem_path)?;
    let dem = Dem::new(grid.geometry, grid.values, grid.nodata).map_err(|e| Error::parse(&dem_path, 0, "data", e.to_string()))?;
    let layer = |rel: &str| -> Result<Vec<f64>> {
        let path = at(rel);
        let g = parse_ascii_grid(&read(&path)?, &path)?;
        if g.geometry != dem.geometry {
            return Err(Error::parse(&path, 0, "header", "grid does not match the terrain grid"));
        }
        Ok(g.values)
    };
    let drainage = DrainageGrid {
        geometry: dem.geometry,
        capacity_mm: layer(&f.drainage_capacity)?,
        runoff_coeff: layer(&f.runoff_coeff)?,
    };
    drainage
        .validate()
        .map_err(|e| Error::parse(at(&f.drainage_capacity), 0, "data", e.to_string()))?;

    let (nodes_path, edges_path) = (at(&f.nodes), at(&f.edges));
    let network = parse_network(&read(&nodes_path)?, &nodes_path, &read(&edges_path)?, &edges_path)?;
    let dest_path = at(&f.destinations);
    let destinations = parse_destinations(&read(&dest_path)?, &dest_path, &network)?;
    let zones_path = at(&f.zones);
    let zones = parse_zones(&read(&zones_path)?, &zones_path, &dem.geometry, manifest.zone_radius_m, &network)?;
    let res_path = at(&f.residents);
    let (_, residents) = parse_residents(&read(&res_path)?, &res_path)?;
    if let Some(r) = residents.iter().find(|r| r.zone >= zones.len()) {
        return Err(Error::parse(&res_path, 0, "zone_id", format!("zone {} does not exist", r.zone)));
    }
    let scenarios = f
        .scenarios
        .iter()
        .map(|p| ClimateScenario::load(&at(p)))
        .collect::<Result<Vec<_>>>()?;
    let city = City {
        dem,
        drainage,
        network,
        zones,
        destinations,
        residents,
    };
    city.validate()?;
    Ok(Bundle {
        root: root.to_path_buf(),
        manifest,
        city,
        scenarios,
    })
}

/// Render a synthetic city, its survey and the wellbeing model fitted to
/// that survey as `(relative path, contents)` pairs, manifest last.
pub fn render_synth_bundle(spec: &SynthCitySpec) -> Result<(Vec<(String, String)>, FitReport)> {
    let s = generate_synth_city(spec)?;
    let survey = synthetic_survey(&SyntheticSurveySpec {
        seed: spec.seed.wrapping_add(1),
        ..SyntheticSurveySpec::default()
    })?;
    let (model, report) = fit_wellbeing(&survey)?;
    let c = &s.city;
    let g = &c.dem.geometry;
    let mut files = vec![
        ("dem.asc".to_string(), format_ascii_grid(g, &c.dem.elevations, c.dem.nodata)),
        ("drainage_capacity.asc".into(), format_ascii_grid(g, &c.drainage.capacity_mm, DEFAULT_NODATA)),
        ("runoff_coeff.asc".into(), format_ascii_grid(g, &c.drainage.runoff_coeff, DEFAULT_NODATA)),
        ("nodes.csv".into(), format_nodes(&c.network)),
        ("edges.csv".into(), format_edges(&c.network)),
        ("destinations.csv".into(), format_destinations(&c.destinations, &c.network)),
        ("zones.csv".into(), format_zones(&c.zones, &c.network)),
        ("residents.csv".into(), format_residents(&c.residents, &survey.labels)),
        ("survey.csv".into(), format_survey(&survey)),
        ("wellbeing.json".into(), model.to_json()),
    ];
    let mut scenario_files = Vec::new();
    for sc in &s.scenarios {
        let name = format!("scenarios/{}.json", sc.id.name().to_ascii_lowercase().replace('.', ""));
        files.push((name.clone(), sc.to_json()));
        scenario_files.push(name);
    }
    let manifest = Manifest {
        format_version: BUNDLE_VERSION,
        zone_radius_m: spec.zone_radius_m,
        files: BundleFiles {
            dem: "dem.asc".into(),
            drainage_capacity: "drainage_capacity.asc".into(),
            runoff_coeff: "runoff_coeff.asc".into(),
            nodes: "nodes.csv".into(),
            edges: "edges.csv".into(),
            destinations: "destinations.csv".into(),
            zones: "zones.csv".into(),
            residents: "residents.csv".into(),
            scenarios: scenario_files,
            survey: Some("survey.csv".into()),
            wellbeing_model: Some("wellbeing.json".into()),
        },
        formats: default_formats(),
        generator: Some(spec.clone()),
    };
    files.push((MANIFEST_FILE.into(), manifest.to_json()));
    Ok((files, report))
}

/// Write rendered files under `root`.
pub fn write_files(root: &Path, files: &[(String, String)]) -> Result<()> {
    for (rel, contents) in files {
        write_file(&root.join(rel), contents)?;
    }
    Ok(())
}

/// Generate a synthetic city bundle in `root`.
pub fn generate_synth_bundle(spec: &SynthCitySpec, root: &Path) -> Result<FitReport> {
    let (files, report) = render_synth_bundle(spec)?;
    write_files(root, &files)?;
    Ok(report)
}

/// Load the wellbeing model a bundle ships with.
pub fn bundle_model(bundle: &Bundle) -> Result<WellbeingModel> {
    let path = bundle
        .model_path()
        .ok_or_else(|| Error::Config {
            keys: vec!["wellbeing_model".into()],
        })?;
    WellbeingModel::load(&path)
}
