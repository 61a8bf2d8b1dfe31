//! Rainfall scenarios as stepwise period distributions with inverse-CDF sampling.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical rainfall distribution for a closed range of years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodCdf {
    pub start_year: i32,
    pub end_year: i32,
    /// Sorted ascending, all finite and non-negative.
    samples_mm: Vec<f64>,
}

impl PeriodCdf {
    pub fn samples(&self) -> &[f64] {
        &self.samples_mm
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }

    /// Lower-step inverse CDF: `samples[floor(u * n)]`. `u` is clamped into [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.samples_mm.len();
        let k = if u.is_nan() || u <= 0.0 {
            0
        } else {
            ((u * n as f64).floor() as usize).min(n - 1)
        };
        self.samples_mm[k]
    }

    pub fn mean(&self) -> f64 {
        self.samples_mm.iter().sum::<f64>() / self.samples_mm.len() as f64
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.samples_mm.partition_point(|&s| s <= x);
        k as f64 / self.samples_mm.len() as f64
    }
}

pub fn build_cdf(samples: &[f64], start_year: i32, end_year: i32) -> Result<PeriodCdf> {
    if samples.is_empty() {
        return Err(Error::invalid("rainfall sample set is empty"));
    }
    if let Some(bad) = samples.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::invalid(format!("rainfall sample {bad} is not a finite non-negative value")));
    }
    if start_year > end_year {
        return Err(Error::invalid(format!("period {start_year}-{end_year} ends before it starts")));
    }
    let mut samples_mm = samples.to_vec();
    samples_mm.sort_by(f64::total_cmp);
    Ok(PeriodCdf {
        start_year,
        end_year,
        samples_mm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    #[serde(rename = "RCP2.6")]
    Rcp26,
    #[serde(rename = "RCP4.5")]
    Rcp45,
    #[serde(rename = "RCP8.5")]
    Rcp85,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::Rcp26, ScenarioId::Rcp45, ScenarioId::Rcp85];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Rcp26 => "RCP2.6",
            ScenarioId::Rcp45 => "RCP4.5",
            ScenarioId::Rcp85 => "RCP8.5",
        }
    }

    /// Per-period growth of the synthetic rainfall scale.
    fn synthetic_growth(self) -> f64 {
        match self {
            ScenarioId::Rcp26 => 0.04,
            ScenarioId::Rcp45 => 0.10,
            ScenarioId::Rcp85 => 0.20,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "rcp26" => Ok(ScenarioId::Rcp26),
            "rcp45" => Ok(ScenarioId::Rcp45),
            "rcp85" => Ok(ScenarioId::Rcp85),
            _ => Err(Error::invalid(format!(
                "unknown scenario '{s}' (expected RCP2.6, RCP4.5 or RCP8.5)"
            ))),
        }
    }
}

/// The three reference periods of the stepwise projections.
pub const PERIODS: [(i32, i32); 3] = [(2011, 2040), (2041, 2070), (2071, 2100)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClimateScenario {
    pub id: ScenarioId,
    /// Ordered, non-overlapping.
    periods: Vec<PeriodCdf>,
}

impl ClimateScenario {
    pub fn new(id: ScenarioId, mut periods: Vec<PeriodCdf>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::invalid(format!("scenario {id} has no periods")));
        }
        periods.sort_by_key(|p| p.start_year);
        for w in periods.windows(2) {
            if w[1].start_year <= w[0].end_year {
                return Err(Error::invalid(format!(
                    "scenario {id}: periods {}-{} and {}-{} overlap",
                    w[0].start_year, w[0].end_year, w[1].start_year, w[1].end_year
                )));
            }
        }
        Ok(Self { id, periods })
    }

    pub fn periods(&self) -> &[PeriodCdf] {
        &self.periods
    }

    pub fn period_for(&self, year: i32) -> Option<&PeriodCdf> {
        self.periods.iter().find(|p| p.contains(year))
    }

    /// True when every year in `first..=last` falls in some period.
    pub fn covers(&self, first: i32, last: i32) -> bool {
        (first..=last).all(|y| self.period_for(y).is_some())
    }

    pub fn sample_rainfall(&self, year: i32, u: f64) -> Result<f64> {
        self.period_for(year)
            .map(|p| p.quantile(u))
            .ok_or_else(|| Error::OutOfRange(format!("year {year} is not covered by scenario {}", self.id)))
    }

    /// Synthetic stand-in for the projection data: a wet-day mixture with a
    /// gamma-distributed amount whose scale steps up from period to period.
    pub fn synthetic(id: ScenarioId, samples_per_period: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let n = samples_per_period.max(1);
        let periods = PERIODS
            .iter()
            .enumerate()
            .map(|(k, &(start, end))| {
                let scale = 14.0 * (1.0 + id.synthetic_growth() * k as f64);
                let gamma = Gamma::new(1.3, scale).expect("positive gamma parameters");
                let samples: Vec<f64> = (0..n)
                    .map(|_| {
                        if rng.random::<f64>() < 0.25 {
                            0.0
                        } else {
                            (gamma.sample(&mut rng) * 10.0).round() / 10.0
                        }
                    })
                    .collect();
                build_cdf(&samples, start, end).expect("synthetic samples are valid")
            })
            .collect();
        Self::new(id, periods).expect("reference periods are disjoint")
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioFile {
            scenario_id: self.id,
            periods: self
                .periods
                .iter()
                .map(|p| PeriodFile {
                    start_year: p.start_year,
                    end_year: p.end_year,
                    samples_mm: p.samples_mm.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let doc: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| Error::parse(path, e.line(), "scenario", e.to_string()))?;
        let mut periods: Vec<PeriodCdf> = Vec::with_capacity(doc.periods.len());
        for (i, p) in doc.periods.iter().enumerate() {
            let line = nth_key_line(text, "start_year", i);
            let cdf = build_cdf(&p.samples_mm, p.start_year, p.end_year)
                .map_err(|e| Error::parse(path, line, format!("periods[{i}]"), e.to_string()))?;
            if let Some(j) = periods
                .iter()
                .position(|q| cdf.start_year <= q.end_year && q.start_year <= cdf.end_year)
            {
                return Err(Error::parse(
                    path,
                    line,
                    format!("periods[{i}]"),
                    format!("overlaps periods[{j}]"),
                ));
            }
            periods.push(cdf);
        }
        if periods.is_empty() {
            return Err(Error::parse(path, 0, "periods", "no periods"));
        }
        Self::new(doc.scenario_id, periods).map_err(|e| Error::parse(path, 0, "periods", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

pub fn sample_rainfall(scenario: &ClimateScenario, year: i32, u: f64) -> Result<f64> {
    scenario.sample_rainfall(year, u)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario_id: ScenarioId,
    periods: Vec<PeriodFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodFile {
    start_year: i32,
    end_year: i32,
    samples_mm: Vec<f64>,
}

/// 1-based line of the `n`-th occurrence of `"key"`, or 0 when absent.
fn nth_key_line(text: &str, key: &str, n: usize) -> usize {
    let needle = format!("\"{key}\"");
    text.match_indices(&needle)
        .nth(n)
        .map(|(pos, _)| text[..pos].matches('\n').count() + 1)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom() {
        let c = build_cdf(&[10.0], 2011, 2040).unwrap();
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(c.quantile(u), 10.0);
        }
    }

    #[test]
    fn lower_step_quantile() {
        let c = build_cdf(&[0.0, 0.0, 0.0, 10.0], 2011, 2040).unwrap();
        assert_eq!(c.quantile(0.9), 10.0);
        assert_eq!(c.quantile(0.5), 0.0);
        assert_eq!(c.quantile(0.75), 10.0);
        assert_eq!(c.quantile(0.7499), 0.0);
    }

    #[test]
    fn sorts_input() {
        let c = build_cdf(&[5.0, 1.0, 3.0], 2011, 2040).unwrap();
        assert_eq!(c.samples(), &[1.0, 3.0, 5.0]);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(matches!(build_cdf(&[], 2011, 2040), Err(Error::InvalidInput(_))));
        assert!(build_cdf(&[-1.0], 2011, 2040).is_err());
        assert!(build_cdf(&[f64::NAN], 2011, 2040).is_err());
        assert!(build_cdf(&[1.0], 2041, 2040).is_err());
    }

    fn three_period(values: [f64; 3]) -> ClimateScenario {
        let periods = PERIODS
            .iter()
            .zip(values)
            .map(|(&(s, e), v)| build_cdf(&[v], s, e).unwrap())
            .collect();
        ClimateScenario::new(ScenarioId::Rcp45, periods).unwrap()
    }

    #[test]
    fn year_selects_period() {
        let s = three_period([1.0, 2.0, 3.0]);
        assert_eq!(s.sample_rainfall(2023, 0.5).unwrap(), 1.0);
        assert_eq!(s.sample_rainfall(2040, 0.5).unwrap(), 1.0);
        assert_eq!(s.sample_rainfall(2050, 0.5).unwrap(), 2.0);
        assert_eq!(s.period_for(2050).unwrap().start_year, 2041);
        assert_eq!(s.sample_rainfall(2100, 0.5).unwrap(), 3.0);
        assert!(matches!(s.sample_rainfall(2101, 0.5), Err(Error::OutOfRange(_))));
        assert!(matches!(s.sample_rainfall(2000, 0.5), Err(Error::OutOfRange(_))));
        assert!(s.covers(2023, 2100));
    }

    #[test]
    fn overlapping_periods_rejected() {
        let a = build_cdf(&[1.0], 2011, 2045).unwrap();
        let b = build_cdf(&[1.0], 2041, 2070).unwrap();
        assert!(ClimateScenario::new(ScenarioId::Rcp26, vec![a, b]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = ClimateScenario::synthetic(ScenarioId::Rcp85, 50, 3);
        let back = ClimateScenario::from_json(&s.to_json(), Path::new("s.json")).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn json_overlap_names_line() {
        let text = r#"{
  "scenario_id": "RCP2.6",
  "periods": [
    {"start_year": 2011, "end_year": 2040, "samples_mm": [1.0]},
    {"start_year": 2030, "end_year": 2070, "samples_mm": [2.0]}
  ]
}"#;
        let err = ClimateScenario::from_json(text, Path::new("s.json")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn json_unknown_field_and_bad_id() {
        let text = "{\n\"scenario_id\": \"RCP2.6\",\n\"periods\": [],\n\"extra\": 1\n}";
        let err = ClimateScenario::from_json(text, Path::new("s.json")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let text = "{\"scenario_id\": \"RCP9\", \"periods\": []}";
        assert!(ClimateScenario::from_json(text, Path::new("s.json")).is_err());
    }

    #[test]
    fn synthetic_is_stepwise_and_deterministic() {
        for id in ScenarioId::ALL {
            let s = ClimateScenario::synthetic(id, 2000, 11);
            assert_eq!(s, ClimateScenario::synthetic(id, 2000, 11));
            assert!(s.covers(2023, 2100));
            let m: Vec<f64> = s.periods().iter().map(PeriodCdf::mean).collect();
            assert!(m[0] < m[1] && m[1] < m[2], "{id}: {m:?}");
        }
    }

    #[test]
    fn scenario_names_parse() {
        for id in ScenarioId::ALL {
            assert_eq!(id.name().parse::<ScenarioId>().unwrap(), id);
        }
        assert_eq!("rcp85".parse::<ScenarioId>().unwrap(), ScenarioId::Rcp85);
        assert!("rcp10".parse::<ScenarioId>().is_err());
    }
}
