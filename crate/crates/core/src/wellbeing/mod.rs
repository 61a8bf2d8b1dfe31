//! Motility components and ordinal life-satisfaction modeling.

mod clm;
mod model;
mod pca;
mod population;
mod survey;

pub use clm::{category_probabilities, clm_expected, fit_clm, log_likelihood, sigmoid, ClmData, ClmFit, ClmFitOptions, ClmModel};
pub use model::{covariate_names, covariates, default_coupling, fit_wellbeing, FitReport, WellbeingModel};
pub use pca::{
    correlation, fit_pca, pca_from_correlation, sorted_eigen, srmr, standardize, varimax, varimax_criterion, PcaModel,
    Standardized, VARIMAX_MAX_ITER, VARIMAX_TOL,
};
pub use population::{
    format_residents, parse_residents, population_wellbeing, synthetic_residents, Individual, PopulationProfile,
    Resident, WellbeingSummary,
};
pub use survey::{
    dimension_of, format_survey, item_labels, parse_survey, read_survey, synthetic_respondents, synthetic_survey,
    Dimension, Survey, SyntheticSurveySpec, CONTROLS, ITEMS, SATISFACTION_LEVELS,
};
