//! Write a synthetic city bundle, load it back with full validation, and
//! drive the command-line interface on it in-process.
//!
//!     cargo run --example city_bundle [DIR]

use climate_pathways::cli::run_command;
use climate_pathways::io::bundle::{generate_synth_bundle, load_bundle};
use climate_pathways::synth::SynthCitySpec;

fn main() -> climate_pathways::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pathways-city"));
    let spec = SynthCitySpec {
        seed: 21,
        ..SynthCitySpec::default()
    };
    let report = generate_synth_bundle(&spec, &dir)?;
    println!("bundle written to {} (survey model keeps {} components)", dir.display(), report.retained);

    let bundle = load_bundle(&dir)?;
    let c = &bundle.city;
    println!(
        "loaded: {} cells, {} nodes, {} edges, {} destinations, {} zones, {} residents, {} scenarios",
        c.dem.geometry.len(),
        c.network.len(),
        c.network.edges().len(),
        c.destinations.entries().len(),
        c.n_zones(),
        c.residents.len(),
        bundle.scenarios.len()
    );

    let out = dir.join("flood-out");
    let args = ["pathways", "flood", "--config", dir.to_str().unwrap(), "--rain", "50", "--out", out.to_str().unwrap()];
    let status = run_command(args);
    println!("`pathways flood` exited with {status}; outputs in {}", out.display());
    Ok(())
}
