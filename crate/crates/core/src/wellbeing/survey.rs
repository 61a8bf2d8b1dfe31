use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::clm::category_probabilities;
use crate::error::{Error, Result};
use crate::io::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Access,
    Skills,
    Attitudes,
}

/// Default motility items in column order.
pub const ITEMS: [(&str, Dimension); 17] = [
    ("pt_access", Dimension::Access),
    ("cars_per_household", Dimension::Access),
    ("bike_access", Dimension::Access),
    ("car_license", Dimension::Skills),
    ("pt_smart_card", Dimension::Skills),
    ("ease_without_car", Dimension::Skills),
    ("ease_with_pt", Dimension::Skills),
    ("mobility_difficulties", Dimension::Skills),
    ("ease_by_bike", Dimension::Skills),
    ("car_identity", Dimension::Attitudes),
    ("pt_hedonic", Dimension::Attitudes),
    ("pt_privacy", Dimension::Attitudes),
    ("cyclist_identity", Dimension::Attitudes),
    ("cycle_weather_sensitivity", Dimension::Attitudes),
    ("cycle_autonomy", Dimension::Attitudes),
    ("cycle_hedonic", Dimension::Attitudes),
    ("mobility_necessities", Dimension::Attitudes),
];

pub fn dimension_of(label: &str) -> Option<Dimension> {
    ITEMS.iter().find(|(l, _)| *l == label).map(|&(_, d)| d)
}

/// Control covariates in model order: income (1-11), woman (0/1), two
/// education dummies against less than secondary, age category (1-6).
pub const CONTROLS: [&str; 5] = ["income", "woman", "edu_vocational", "edu_tertiary", "age_category"];

const EDUCATION: [&str; 3] = ["less_than_secondary", "vocational", "tertiary"];

#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub labels: Vec<String>,
    /// n x p item responses.
    pub items: DMatrix<f64>,
    /// n x 5, ordered as [`CONTROLS`].
    pub controls: DMatrix<f64>,
    /// Categories 1..=5.
    pub life_satisfaction: Vec<usize>,
}

pub const SATISFACTION_LEVELS: usize = 5;

fn education_level(controls: &DMatrix<f64>, i: usize) -> usize {
    if controls[(i, 3)] == 1.0 {
        2
    } else if controls[(i, 2)] == 1.0 {
        1
    } else {
        0
    }
}

/// Columns: item labels, then `income,woman,education,age_category,life_satisfaction`.
pub fn parse_survey(text: &str, path: &Path) -> Result<Survey> {
    let t = Table::parse(text, path, &[])?;
    let tail = ["income", "woman", "education", "age_category", "life_satisfaction"];
    let n_items = t.header.len().saturating_sub(tail.len());
    if n_items < 2 || t.header[n_items..] != tail {
        return Err(Error::parse(
            path,
            1,
            "header",
            format!("expected at least two item columns followed by {}", tail.join(",")),
        ));
    }
    let n = t.rows.len();
    let mut items = DMatrix::zeros(n, n_items);
    let mut controls = DMatrix::zeros(n, CONTROLS.len());
    let mut life_satisfaction = Vec::with_capacity(n);
    for (i, row) in t.rows.iter().enumerate() {
        if row.fields.len() != t.header.len() {
            return Err(Error::parse(path, row.line, "row", "wrong number of fields"));
        }
        for j in 0..n_items {
            items[(i, j)] = t.finite(row, j)?;
        }
        let income = t.finite(row, n_items)?;
        if !(1.0..=11.0).contains(&income) {
            return Err(t.error(row, n_items, "income must lie in 1..=11"));
        }
        let woman = t.finite(row, n_items + 1)?;
        if woman != 0.0 && woman != 1.0 {
            return Err(t.error(row, n_items + 1, "woman must be 0 or 1"));
        }
        let edu = t.str(row, n_items + 2);
        let level = EDUCATION
            .iter()
            .position(|e| *e == edu)
            .ok_or_else(|| t.error(row, n_items + 2, format!("'{edu}' is not one of {}", EDUCATION.join("|"))))?;
        let age = t.finite(row, n_items + 3)?;
        let sat: usize = t.get(row, n_items + 4)?;
        if !(1..=SATISFACTION_LEVELS).contains(&sat) {
            return Err(t.error(row, n_items + 4, "life satisfaction must lie in 1..=5"));
        }
        controls[(i, 0)] = income;
        controls[(i, 1)] = woman;
        controls[(i, 2)] = (level == 1) as u8 as f64;
        controls[(i, 3)] = (level == 2) as u8 as f64;
        controls[(i, 4)] = age;
        life_satisfaction.push(sat);
    }
    Ok(Survey {
        labels: t.header[..n_items].to_vec(),
        items,
        controls,
        life_satisfaction,
    })
}

pub fn read_survey(path: &Path) -> Result<Survey> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_survey(&text, path)
}

pub fn format_survey(s: &Survey) -> String {
    let mut out = s.labels.join(",");
    out.push_str(",income,woman,education,age_category,life_satisfaction\n");
    for i in 0..s.items.nrows() {
        let items: Vec<String> = s.items.row(i).iter().map(|v| v.to_string()).collect();
        let c = &s.controls;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            items.join(","),
            c[(i, 0)],
            c[(i, 1)],
            EDUCATION[education_level(c, i)],
            c[(i, 4)],
            s.life_satisfaction[i]
        );
    }
    out
}

/// Generator for respondents with a known factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurveySpec {
    pub n: usize,
    pub seed: u64,
    /// Consecutive item blocks, one latent factor each; sizes sum to the item count.
    pub blocks: Vec<usize>,
    pub loading: f64,
    pub noise_sd: f64,
    /// Effect of each latent factor on the satisfaction predictor.
    pub factor_effects: Vec<f64>,
    pub control_effects: [f64; 5],
    pub thresholds: Vec<f64>,
}

impl Default for SyntheticSurveySpec {
    fn default() -> Self {
        Self {
            n: 2000,
            seed: 17,
            blocks: vec![3, 5, 3, 4, 2],
            loading: 0.8,
            noise_sd: 0.3,
            factor_effects: vec![0.5, 0.3, -0.2, 0.25, 0.15],
            control_effects: [0.08, 0.1, 0.1, 0.2, 0.05],
            thresholds: vec![-0.2, 0.8, 1.8, 2.8],
        }
    }
}

/// Respondent items and controls without outcomes; also returns the latent factors.
pub fn synthetic_respondents(
    n: usize,
    blocks: &[usize],
    loading: f64,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p: usize = blocks.iter().sum();
    let k = blocks.len();
    let mut items = DMatrix::zeros(n, p);
    let mut controls = DMatrix::zeros(n, CONTROLS.len());
    let mut factors = DMatrix::zeros(n, k);
    for i in 0..n {
        let mut col = 0;
        for (b, &size) in blocks.iter().enumerate() {
            let f: f64 = StandardNormal.sample(rng);
            factors[(i, b)] = f;
            for _ in 0..size {
                let e: f64 = StandardNormal.sample(rng);
                // Items sit on a Likert-like 3 +/- scale.
                items[(i, col)] = 3.0 + loading * f + noise_sd * e;
                col += 1;
            }
        }
        controls[(i, 0)] = rng.random_range(1..=11) as f64;
        controls[(i, 1)] = rng.random_bool(0.5) as u8 as f64;
        let u: f64 = rng.random();
        let level = if u < 0.3 { 0 } else if u < 0.7 { 1 } else { 2 };
        controls[(i, 2)] = (level == 1) as u8 as f64;
        controls[(i, 3)] = (level == 2) as u8 as f64;
        controls[(i, 4)] = rng.random_range(1..=6) as f64;
    }
    (items, controls, factors)
}

pub fn item_labels(p: usize) -> Vec<String> {
    if p == ITEMS.len() {
        ITEMS.iter().map(|(l, _)| l.to_string()).collect()
    } else {
        (1..=p).map(|j| format!("item_{j}")).collect()
    }
}

pub fn synthetic_survey(spec: &SyntheticSurveySpec) -> Result<Survey> {
    if spec.blocks.is_empty() || spec.blocks.iter().any(|&b| b == 0) || spec.factor_effects.len() != spec.blocks.len() {
        return Err(Error::invalid("survey blocks must be non-empty with one effect per block"));
    }
    if spec.thresholds.len() != SATISFACTION_LEVELS - 1 || spec.thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("survey needs four increasing thresholds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (items, controls, factors) = synthetic_respondents(spec.n, &spec.blocks, spec.loading, spec.noise_sd, &mut rng);
    let mut life_satisfaction = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let eta: f64 = factors.row(i).iter().zip(&spec.factor_effects).map(|(f, b)| f * b).sum::<f64>()
            + controls.row(i).iter().zip(&spec.control_effects).map(|(c, b)| c * b).sum::<f64>();
        let probs = category_probabilities(&spec.thresholds, eta);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut y = SATISFACTION_LEVELS;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                y = j + 1;
                break;
            }
        }
        life_satisfaction.push(y);
    }
    Ok(Survey {
        labels: item_labels(items.ncols()),
        items,
        controls,
        life_satisfaction,
    })
}
