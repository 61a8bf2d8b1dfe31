mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use climate_pathways::climate::ScenarioId;
use climate_pathways::env::{AdaptationEnv, EnvParams};
use climate_pathways::flood::{simulate_flood, DrainageGrid};
use climate_pathways::io::ascii_grid::{format_ascii_grid, read_ascii_grid, read_dem};
use climate_pathways::io::bundle::{load_bundle, Manifest, MANIFEST_FILE};
use climate_pathways::io::network::{format_destinations, format_edges, format_nodes, format_zones, parse_network};
use climate_pathways::raster::DEFAULT_NODATA;
use climate_pathways::synth::{constant_scenario, generate_synth_city, SynthCitySpec};
use climate_pathways::wellbeing::{format_residents, WellbeingModel};
use climate_pathways::Error;
use tempfile::TempDir;

fn pathways(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathways"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

const SMALL_CONFIG: &str = r#"{
  "bundle": "city",
  "city": { "n_cols": 10, "n_rows": 10, "zone_radius_m": 600.0, "residents_per_zone": 8, "scenario_samples": 100 },
  "ppo": { "iterations": 3, "rollout_len": 40, "n_workers": 2, "learning_rate": 0.1 },
  "evaluation": { "episodes": 4 }
}"#;

/// Temp directory holding `config.json` and a generated `city/` bundle.
fn small_workspace(seed: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("config.json"), SMALL_CONFIG).unwrap();
    let o = pathways(&["synth-city", "--config", "config.json", "--seed", seed, "--out", "city"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn golden_dem_parses_to_known_elevations() {
    let dem = read_dem(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_3x3.asc"))).unwrap();
    assert_eq!((dem.geometry.n_cols, dem.geometry.n_rows), (3, 3));
    assert_eq!(dem.geometry.xll, 1000.0);
    assert_eq!(dem.geometry.cell_size, 10.0);
    assert_eq!(dem.elevations[..8], [5.0, 4.0, 3.0, 4.0, 2.5, 2.0, 3.0, 2.0]);
    assert!(dem.is_nodata(8));
}

#[test]
fn dangling_edge_reference_names_the_row() {
    let nodes = "id,x_m,y_m\n1,0,0\n2,10,0\n";
    let edges = "from,to,length_m,modes,drive_kmh,cycle_kmh,walk_kmh,transit_kmh\n1,2,10,walk,,,5,\n2,7,10,walk,,,5,\n";
    match parse_network(nodes, Path::new("nodes.csv"), edges, Path::new("edges.csv")) {
        Err(Error::DanglingReference { line, node, path }) => {
            assert_eq!(line, 3);
            assert_eq!(node, "7");
            assert_eq!(path, Path::new("edges.csv"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn synth_city_is_byte_identical_per_seed() {
    let a = small_workspace("5");
    let b = small_workspace("5");
    let c = small_workspace("6");
    assert_eq!(tree(&a.path().join("city")), tree(&b.path().join("city")));
    assert_ne!(tree(&a.path().join("city")), tree(&c.path().join("city")));
}

#[test]
fn bundle_files_round_trip_through_the_parsers() {
    let w = small_workspace("2");
    let root = w.path().join("city");
    let b = load_bundle(&root).unwrap();
    let text = |f: &str| std::fs::read_to_string(root.join(f)).unwrap();
    let c = &b.city;
    let g = &c.dem.geometry;
    assert_eq!(format_ascii_grid(g, &c.dem.elevations, c.dem.nodata), text("dem.asc"));
    assert_eq!(format_ascii_grid(g, &c.drainage.capacity_mm, DEFAULT_NODATA), text("drainage_capacity.asc"));
    assert_eq!(format_nodes(&c.network), text("nodes.csv"));
    assert_eq!(format_edges(&c.network), text("edges.csv"));
    assert_eq!(format_destinations(&c.destinations, &c.network), text("destinations.csv"));
    assert_eq!(format_zones(&c.zones, &c.network), text("zones.csv"));
    let model = WellbeingModel::load(&root.join("wellbeing.json")).unwrap();
    assert_eq!(model.to_json(), text("wellbeing.json"));
    assert_eq!(format_residents(&c.residents, &model.pca.labels), text("residents.csv"));
    for (sc, f) in b.scenarios.iter().zip(&b.manifest.files.scenarios) {
        assert_eq!(sc.to_json(), text(f));
    }
    let m = Manifest::from_json(&text(MANIFEST_FILE), Path::new(MANIFEST_FILE)).unwrap();
    assert_eq!(m.to_json(), text(MANIFEST_FILE));
}

#[test]
fn four_zone_spec_writes_four_zone_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{ "city": { "n_cols": 8, "n_rows": 8, "cell_size_m": 100.0, "zone_radius_m": 300.0, "residents_per_zone": 5, "scenario_samples": 20 } }"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = pathways(&["synth-city", "--config", "c.json", "--out", "city"], dir.path());
    assert!(o.status.success());
    let zones = std::fs::read_to_string(dir.path().join("city/zones.csv")).unwrap();
    assert_eq!(zones.lines().count() - 1, 4);
}

#[test]
fn terrain_without_depressions_stores_no_water() {
    let spec = SynthCitySpec {
        depressions: 0,
        ..SynthCitySpec::default()
    };
    let city = generate_synth_city(&spec).unwrap().city;
    let no_drainage = DrainageGrid::uniform(city.dem.geometry, 0.0, 1.0).unwrap();
    for rain in [1.0, 10.0, 100.0, 500.0] {
        let d = simulate_flood(&city.dem, &no_drainage, rain).unwrap();
        assert!(d.depths.depths_mm.iter().all(|&v| v == 0.0), "rain {rain}");
    }
}

#[test]
fn flood_without_rain_writes_a_dry_raster() {
    let w = small_workspace("1");
    let o = pathways(&["flood", "--config", "config.json", "--rain", "0", "--out", "fl"], w.path());
    assert_eq!(o.status.code(), Some(0));
    let g = read_ascii_grid(&w.path().join("fl/depth_0mm.asc")).unwrap();
    assert!(g.values.iter().all(|&v| v == 0.0));
    assert!(w.path().join("fl/depth_0mm.pgm").exists());
}

#[test]
fn flood_default_reproduces_the_four_rain_cases() {
    let w = small_workspace("1");
    let o = pathways(&["flood", "--config", "config.json", "--out", "fl"], w.path());
    assert!(o.status.success());
    let mut volumes = Vec::new();
    for r in ["0", "10", "50", "100"] {
        let g = read_ascii_grid(&w.path().join(format!("fl/depth_{r}mm.asc"))).unwrap();
        volumes.push(g.values.iter().sum::<f64>());
    }
    assert_eq!(volumes[0], 0.0);
    assert!(volumes.windows(2).all(|v| v[0] <= v[1]), "{volumes:?}");
}

#[test]
fn fit_wellbeing_reports_five_components() {
    let w = small_workspace("1");
    let o = pathways(&["fit-wellbeing", "--config", "config.json", "--out", "fw"], w.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("retained 5 components"), "{out}");
    assert!(out.contains("SRMR"));
    WellbeingModel::load(&w.path().join("fw/wellbeing.json")).unwrap();
}

#[test]
fn no_action_on_dry_scenario_earns_the_discounted_baseline() {
    let w = small_workspace("4");
    let dry = constant_scenario(ScenarioId::Rcp26, 0.0).unwrap();
    std::fs::write(w.path().join("dry.json"), dry.to_json()).unwrap();
    let cfg = SMALL_CONFIG.replace("\"bundle\": \"city\",", "\"bundle\": \"city\", \"scenarios\": [\"dry.json\"],");
    std::fs::write(w.path().join("dry_config.json"), cfg).unwrap();
    let o = pathways(&["evaluate", "--config", "dry_config.json", "--episodes", "3", "--out", "ev"], w.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let b = load_bundle(&w.path().join("city")).unwrap();
    let model = WellbeingModel::load(&w.path().join("city/wellbeing.json")).unwrap();
    let env = AdaptationEnv::new(b.city, vec![dry], model, EnvParams::default()).unwrap();
    let gamma: f64 = 0.99;
    let expected = env.baseline_wellbeing() * (0..78).map(|t| gamma.powi(t)).sum::<f64>();
    let csv = std::fs::read_to_string(w.path().join("ev/evaluation.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("no_action,")).unwrap();
    let mean: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean - expected).abs() <= 1e-9 * expected, "{mean} vs {expected}");
}

#[test]
fn train_then_evaluate_writes_checkpoint_and_comparisons() {
    let w = small_workspace("3");
    let o = pathways(&["train", "--config", "config.json", "--out", "run", "--seed", "9"], w.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(w.path().join("run/training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(!log.contains("wall_time"));
    let o = pathways(
        &["evaluate", "--config", "config.json", "--checkpoint", "run/checkpoint.json", "--out", "ev", "--seed", "9"],
        w.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let paired = std::fs::read_to_string(w.path().join("ev/paired_differences.csv")).unwrap();
    assert!(paired.contains("ppo-no_action") && paired.contains("ppo-random"));
    let traj = std::fs::read_to_string(w.path().join("ev/trajectory_ppo.csv")).unwrap();
    assert_eq!(traj.lines().count(), 79);
    assert!(traj.starts_with("year,scenario,rain_mm,action,reward,loss_0"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = pathways(&["explode"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = pathways(&["flood", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_two_without_outputs() {
    let w = small_workspace("1");
    let bad = SMALL_CONFIG.replace("\"iterations\": 3", "\"iterations\": 0, \"gamma\": 2.0");
    std::fs::write(w.path().join("bad.json"), bad).unwrap();
    let o = pathways(&["train", "--config", "bad.json", "--out", "never"], w.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ppo.gamma") && err.contains("ppo.iterations"), "{err}");
    assert!(!w.path().join("never").exists());

    // Corrupt one edge so that it references a node that does not exist.
    let edges = w.path().join("city/edges.csv");
    let text = std::fs::read_to_string(&edges).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
    fields[1] = "999999".into();
    lines[2] = fields.join(",");
    std::fs::write(&edges, lines.join("\n") + "\n").unwrap();
    let o = pathways(&["flood", "--config", "config.json", "--out", "never"], w.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("edges.csv:3") && err.contains("999999"), "{err}");
    assert!(!w.path().join("never").exists());
}

#[test]
fn overlapping_scenario_file_is_rejected() {
    let w = small_workspace("1");
    let path = w.path().join("city/scenarios/rcp45.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"start_year\": 2041", "\"start_year\": 2030", 1)).unwrap();
    let o = pathways(&["evaluate", "--config", "config.json", "--out", "never"], w.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rcp45.json"));
}

#[test]
fn runtime_errors_exit_one() {
    let w = small_workspace("1");
    std::fs::write(w.path().join("blocker"), "a file, not a directory").unwrap();
    let o = pathways(&["flood", "--config", "config.json", "--rain", "5", "--out", "blocker/sub"], w.path());
    assert_eq!(o.status.code(), Some(1));
}
