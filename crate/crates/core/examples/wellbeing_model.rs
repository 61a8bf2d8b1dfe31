//! Motility survey to wellbeing: standardise, PCA with the Kaiser rule,
//! varimax rotation, then an ordinal cumulative-logit model of life
//! satisfaction on the component scores.
//!
//!     cargo run --example wellbeing_model

use climate_pathways::wellbeing::{clm_expected, covariate_names, fit_wellbeing, synthetic_survey, SyntheticSurveySpec};

fn main() -> climate_pathways::Result<()> {
    let survey = synthetic_survey(&SyntheticSurveySpec::default())?;
    let (model, report) = fit_wellbeing(&survey)?;
    println!("respondents {}, items {}", survey.items.nrows(), survey.labels.len());
    println!("eigenvalues {:?}", model.pca.eigenvalues.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    println!(
        "retained {} components, explained variance {:.3}, SRMR {:.4}",
        report.retained, report.explained_variance, report.srmr
    );
    for (c, item) in model.pca.dominant_items().iter().enumerate() {
        println!("  component {c}: dominated by {} (coupling {})", model.pca.labels[*item], model.coupling[c]);
    }
    println!("ordinal model thresholds {:?}", model.clm.thresholds);
    for (name, b) in covariate_names(report.retained).iter().zip(&model.clm.coefficients) {
        println!("  {name:<16} {b:+.3}");
    }

    // One respondent with average scores and mid-range controls.
    let mut x = vec![0.0; report.retained];
    x.extend([6.0, 1.0, 0.0, 1.0, 3.0]);
    let (probs, expected) = clm_expected(&model.clm, &x)?;
    println!("P(satisfaction = 1..5) = {:?}", probs.iter().map(|p| (p * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    println!("expected satisfaction {expected:.3}");
    Ok(())
}
