use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::survey::{dimension_of, Dimension, Survey, CONTROLS, SATISFACTION_LEVELS};
use super::{correlation, fit_clm, fit_pca, srmr, standardize, ClmFitOptions, ClmModel, PcaModel};
use crate::error::{Error, Result};

/// PCA components feeding a cumulative link model, with the coupling of each
/// component to accessibility loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellbeingModel {
    pub pca: PcaModel,
    /// Coefficients: one per retained component, then the controls.
    pub clm: ClmModel,
    /// One per retained component.
    pub coupling: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub retained: usize,
    pub explained_variance: f64,
    pub srmr: f64,
    pub log_likelihood: f64,
    pub clm_iterations: usize,
}

/// Coupling 1 for components whose dominant item belongs to the Access
/// dimension, 0 otherwise.
pub fn default_coupling(pca: &PcaModel) -> Vec<f64> {
    pca.dominant_items()
        .into_iter()
        .map(|i| match dimension_of(&pca.labels[i]) {
            Some(Dimension::Access) => 1.0,
            _ => 0.0,
        })
        .collect()
}

pub fn covariate_names(k: usize) -> Vec<String> {
    (1..=k)
        .map(|j| format!("component_{j}"))
        .chain(CONTROLS.iter().map(|s| s.to_string()))
        .collect()
}

/// Covariate matrix `[scores | controls]`.
pub fn covariates(pca: &PcaModel, items: &DMatrix<f64>, controls: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scores = pca.scores(items)?;
    let (n, k) = scores.shape();
    let m = controls.ncols();
    Ok(DMatrix::from_fn(n, k + m, |i, j| if j < k { scores[(i, j)] } else { controls[(i, j - k)] }))
}

pub fn fit_wellbeing(survey: &Survey) -> Result<(WellbeingModel, FitReport)> {
    let std = standardize(&survey.items, &survey.labels)?;
    let pca = fit_pca(&std, &survey.labels)?;
    let fit_srmr = srmr(&correlation(&std.z), &pca.rotated_matrix())?;
    let x = covariates(&pca, &survey.items, &survey.controls)?;
    let fit = fit_clm(&x, &survey.life_satisfaction, SATISFACTION_LEVELS, ClmFitOptions::default())?;
    let mut clm = fit.model;
    clm.covariates = covariate_names(pca.retained);
    let coupling = default_coupling(&pca);
    let report = FitReport {
        retained: pca.retained,
        explained_variance: pca.explained_variance,
        srmr: fit_srmr,
        log_likelihood: fit.log_likelihood,
        clm_iterations: fit.iterations,
    };
    Ok((WellbeingModel { pca, clm, coupling }, report))
}

impl WellbeingModel {
    pub fn validate(&self) -> Result<()> {
        self.clm.validate()?;
        let k = self.pca.retained;
        let p = self.pca.means.len();
        let shape_ok = self.pca.sds.len() == p
            && self.pca.labels.len() == p
            && self.pca.rotated.len() == p
            && self.pca.rotated.iter().all(|r| r.len() == k)
            && self.pca.rotation.len() == k
            && self.coupling.len() == k
            && self.clm.coefficients.len() == k + CONTROLS.len();
        if !shape_ok {
            return Err(Error::invalid("wellbeing model dimensions are inconsistent"));
        }
        if self.coupling.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coupling must be finite"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::parse(path, e.line(), "model", e.to_string()))?;
        m.validate().map_err(|e| Error::parse(path, 0, "model", e.to_string()))?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}
