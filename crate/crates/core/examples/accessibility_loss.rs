//! Flood depths slow or close roads; gravity-based accessibility then drops
//! for the zones whose trips cross the water.
//!
//!     cargo run --example accessibility_loss [RAIN_MM]

use climate_pathways::access::{accessibility_loss, compute_accessibility, GravityParams, LossWeights};
use climate_pathways::flood::FloodModel;
use climate_pathways::synth::{generate_synth_city, SynthCitySpec};
use climate_pathways::transport::{map_depths_to_edges, Category, DepthSpeedCurve, Mode};

fn main() -> climate_pathways::Result<()> {
    let rain: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60.0);
    let city = generate_synth_city(&SynthCitySpec::default())?.city;
    let (curve, gravity) = (DepthSpeedCurve::default(), GravityParams::default());

    let dry = vec![0.0; city.network.edges().len()];
    let base = compute_accessibility(&city.network, &city.zones, &city.destinations, &dry, &curve, &gravity)?;
    let depths = FloodModel::new(city.dem.clone())?.simulate(&city.drainage, rain)?.depths;
    let edge_depths = map_depths_to_edges(&depths, &city.network)?;
    let closed = edge_depths.iter().filter(|&&d| d >= 300.0).count();
    println!("{rain} mm: {} of {} road links flooded, {closed} impassable by car", edge_depths.iter().filter(|&&d| d > 0.0).count(), edge_depths.len());

    let flooded = compute_accessibility(&city.network, &city.zones, &city.destinations, &edge_depths, &curve, &gravity)?;
    let loss = accessibility_loss(&base, &flooded, &LossWeights::default())?;
    println!("zone  car-to-critical (min)  dry -> flooded   zone loss");
    for z in 0..city.n_zones() {
        let fmt = |t: Option<f64>| t.map(|t| format!("{t:.1}")).unwrap_or_else(|| "none".into());
        println!(
            "{z:>4}  {:>22} -> {:<8}  {:.4}",
            fmt(base.get(z, Category::Critical, Mode::Drive).time_min),
            fmt(flooded.get(z, Category::Critical, Mode::Drive).time_min),
            loss.zone(z)
        );
    }
    Ok(())
}
