use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::clm::clm_expected;
use super::model::WellbeingModel;
use super::survey::{synthetic_respondents, CONTROLS};
use super::ClmModel;
use crate::access::LossTable;
use crate::error::{Error, Result};
use crate::io::table::Table;
use crate::transport::Mode;

/// One synthetic resident as stored on disk: raw item responses and controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Resident {
    pub zone: usize,
    pub items: Vec<f64>,
    pub controls: [f64; 5],
    /// Non-negative, sums to 1; indexed like [`Mode::ALL`].
    pub mode_share: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub scores: Vec<f64>,
    pub controls: Vec<f64>,
    pub mode_share: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationProfile {
    pub zones: Vec<Vec<Individual>>,
    /// Population weight per zone.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellbeingSummary {
    pub zone_means: Vec<f64>,
    pub overall: f64,
}

impl PopulationProfile {
    /// Score residents with the model's PCA; every zone needs at least one resident.
    pub fn from_residents(residents: &[Resident], model: &WellbeingModel, weights: &[f64]) -> Result<Self> {
        let n_zones = weights.len();
        let p = model.pca.means.len();
        for r in residents {
            if r.zone >= n_zones {
                return Err(Error::invalid(format!("resident in zone {} of {n_zones}", r.zone)));
            }
            if r.items.len() != p {
                return Err(Error::invalid(format!("resident has {} items, model expects {p}", r.items.len())));
            }
            let total: f64 = r.mode_share.iter().sum();
            if r.mode_share.iter().any(|s| !(*s >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("mode shares must be non-negative and sum to 1"));
            }
        }
        let items = DMatrix::from_fn(residents.len(), p, |i, j| residents[i].items[j]);
        let scores = model.pca.scores(&items)?;
        let mut zones = vec![Vec::new(); n_zones];
        for (i, r) in residents.iter().enumerate() {
            zones[r.zone].push(Individual {
                scores: scores.row(i).iter().copied().collect(),
                controls: r.controls.to_vec(),
                mode_share: r.mode_share,
            });
        }
        if let Some(z) = zones.iter().position(Vec::is_empty) {
            return Err(Error::invalid(format!("zone {z} has no residents")));
        }
        Ok(Self {
            zones,
            weights: weights.to_vec(),
        })
    }

    pub fn n_zones(&self) -> usize {
        self.zones.len()
    }
}

/// Mean expected satisfaction per zone and the population-weighted overall
/// mean. Each individual's loss is the mode-share-weighted zone loss scaled by
/// the zone's `mitigation` factor; it lowers component `c` by `coupling[c] * L`.
pub fn population_wellbeing(
    profile: &PopulationProfile,
    loss: &LossTable,
    model: &ClmModel,
    coupling: &[f64],
    mitigation: Option<&[f64]>,
) -> Result<WellbeingSummary> {
    let n_zones = profile.n_zones();
    if loss.n_zones() != n_zones {
        return Err(Error::invalid(format!(
            "loss table has {} zones, population has {n_zones}",
            loss.n_zones()
        )));
    }
    if let Some(m) = mitigation {
        if m.len() != n_zones || m.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("mitigation needs one factor in [0, 1] per zone"));
        }
    }
    let zone_means: Vec<f64> = (0..n_zones)
        .into_par_iter()
        .map(|z| -> Result<f64> {
            let omega = mitigation.map_or(1.0, |m| m[z]);
            let mut sum = 0.0;
            let mut x = Vec::new();
            for ind in &profile.zones[z] {
                if ind.scores.len() != coupling.len() {
                    return Err(Error::invalid("coupling length does not match component count"));
                }
                let l: f64 = Mode::ALL
                    .iter()
                    .map(|&m| ind.mode_share[m.index()] * loss.zone_mode(z, m))
                    .sum::<f64>()
                    * omega;
                x.clear();
                x.extend(ind.scores.iter().zip(coupling).map(|(s, k)| s - k * l));
                x.extend(&ind.controls);
                sum += clm_expected(model, &x)?.1;
            }
            Ok(sum / profile.zones[z].len() as f64)
        })
        .collect::<Result<_>>()?;
    let total: f64 = profile.weights.iter().sum();
    let overall = if total > 0.0 {
        zone_means.iter().zip(&profile.weights).map(|(m, w)| m * w).sum::<f64>() / total
    } else {
        zone_means.iter().sum::<f64>() / n_zones as f64
    };
    Ok(WellbeingSummary { zone_means, overall })
}

/// Residents drawn from the same factor structure as the synthetic survey,
/// with random mode shares.
pub fn synthetic_residents(n_zones: usize, per_zone: usize, blocks: &[usize], seed: u64) -> Vec<Resident> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_zones * per_zone;
    let (items, controls, _) = synthetic_respondents(n, blocks, 0.8, 0.3, &mut rng);
    (0..n)
        .map(|i| {
            let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
            let total: f64 = raw.iter().sum();
            let mut share = raw.map(|v| v / total);
            // Make the shares sum to 1 exactly.
            share[3] = 1.0 - share[0] - share[1] - share[2];
            Resident {
                zone: i / per_zone,
                items: items.row(i).iter().copied().collect(),
                controls: std::array::from_fn(|j| controls[(i, j)]),
                mode_share: share,
            }
        })
        .collect()
}

/// `zone_id,<items...>,income,woman,edu_vocational,edu_tertiary,age_category,drive,cycle,walk,transit`
pub fn format_residents(residents: &[Resident], labels: &[String]) -> String {
    let mut out = format!("zone_id,{},{},drive,cycle,walk,transit\n", labels.join(","), CONTROLS.join(","));
    for r in residents {
        let fields: Vec<String> = std::iter::once(r.zone.to_string())
            .chain(r.items.iter().map(|v| v.to_string()))
            .chain(r.controls.iter().map(|v| v.to_string()))
            .chain(r.mode_share.iter().map(|v| v.to_string()))
            .collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn parse_residents(text: &str, path: &Path) -> Result<(Vec<String>, Vec<Resident>)> {
    let t = Table::parse(text, path, &["zone_id"])?;
    let tail: Vec<&str> = CONTROLS.iter().copied().chain(["drive", "cycle", "walk", "transit"]).collect();
    let n_items = t.header.len().saturating_sub(1 + tail.len());
    if n_items == 0 || t.header[1 + n_items..] != tail[..] {
        return Err(Error::parse(path, 1, "header", format!("expected zone_id, item columns, then {}", tail.join(","))));
    }
    let mut out = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        if row.fields.len() != t.header.len() {
            return Err(Error::parse(path, row.line, "row", "wrong number of fields"));
        }
        let zone: usize = t.get(row, 0)?;
        let items = (1..=n_items).map(|j| t.finite(row, j)).collect::<Result<Vec<_>>>()?;
        let mut controls = [0.0; 5];
        for (k, c) in controls.iter_mut().enumerate() {
            *c = t.finite(row, 1 + n_items + k)?;
        }
        let mut mode_share = [0.0; 4];
        for (k, s) in mode_share.iter_mut().enumerate() {
            let col = 1 + n_items + 5 + k;
            *s = t.finite(row, col)?;
            if *s < 0.0 {
                return Err(t.error(row, col, "mode share must be non-negative"));
            }
        }
        if (mode_share.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::parse(path, row.line, "mode shares", "must sum to 1"));
        }
        out.push(Resident {
            zone,
            items,
            controls,
            mode_share,
        });
    }
    Ok((t.header[1..=n_items].to_vec(), out))
}
