//! Empirical rainfall distributions per climate scenario and period, and
//! inverse-CDF sampling from them.
//!
//!     cargo run --example climate_sampling

use climate_pathways::climate::{ClimateScenario, ScenarioId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> climate_pathways::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:<8} {:<11} {:>8} {:>8} {:>8} {:>10}", "scenario", "period", "mean", "p50", "p99", "draw mean");
    for id in ScenarioId::ALL {
        let sc = ClimateScenario::synthetic(id, 5000, 11);
        for p in sc.periods() {
            let n = 20_000;
            let draws: f64 = (0..n)
                .map(|_| sc.sample_rainfall(p.start_year, rng.random()))
                .sum::<climate_pathways::Result<f64>>()?;
            println!(
                "{:<8} {}-{} {:>8.2} {:>8.1} {:>8.1} {:>10.2}",
                id.to_string(),
                p.start_year,
                p.end_year,
                p.mean(),
                p.quantile(0.5),
                p.quantile(0.99),
                draws / n as f64
            );
        }
    }
    match ClimateScenario::synthetic(ScenarioId::Rcp45, 10, 0).sample_rainfall(2150, 0.5) {
        Err(e) => println!("outside the scenario: {e}"),
        Ok(v) => println!("unexpected sample {v}"),
    }
    Ok(())
}
