//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use climate_pathways::flood::DrainageGrid;
use climate_pathways::raster::{Dem, GridGeometry};
use climate_pathways::transport::{DepthSpeedCurve, Edge, Mode, NetworkNode, RoadNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smoothed random terrain: nested pits, saddles and ridges at every scale.
pub fn random_dem(n_cols: usize, n_rows: usize, cell_size: f64, seed: u64) -> Dem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = GridGeometry::new(n_cols, n_rows, cell_size).unwrap();
    let noise: Vec<f64> = (0..g.len()).map(|_| rng.random::<f64>()).collect();
    let mut z = vec![0.0; g.len()];
    for i in 0..g.len() {
        let (r, c) = g.row_col(i);
        let mut acc = noise[i];
        let mut cnt = 1.0;
        for (_, nb) in g.neighbors(i) {
            acc += noise[nb];
            cnt += 1.0;
        }
        let tilt = 0.02 * (r as f64 + c as f64);
        z[i] = 10.0 * acc / cnt + tilt + 0.05 * rng.random::<f64>();
    }
    Dem::new(g, z, -9999.0).unwrap()
}

pub fn random_drainage(g: GridGeometry, seed: u64) -> DrainageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    DrainageGrid {
        geometry: g,
        capacity_mm: (0..g.len()).map(|_| rng.random_range(0.0..20.0)).collect(),
        runoff_coeff: (0..g.len()).map(|_| rng.random_range(0.3..1.0)).collect(),
    }
}

/// 8-connected component of `{z < level}` containing `start`.
fn component_below(dem: &Dem, start: usize, level: f64, inclusive: bool) -> Vec<usize> {
    let g = dem.geometry;
    let below = |c: usize| {
        !dem.is_nodata(c) && if inclusive { dem.z(c) <= level } else { dem.z(c) < level }
    };
    let mut seen = vec![false; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for (_, nb) in g.neighbors(c) {
            if !seen[nb] && below(nb) {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Depressions found by raising a water level from every local minimum
/// through each distinct terrain elevation in turn. A level at which the
/// flooded region first touches the boundary or another basin is a spill
/// level, and the region below it is a depression. Assumes distinct
/// elevations and no nodata.
pub fn ladder_depressions(dem: &Dem) -> Vec<(Vec<usize>, f64, f64)> {
    let g = dem.geometry;
    let area = g.cell_area();
    let mut levels: Vec<f64> = dem.elevations.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut found: Vec<(Vec<usize>, f64, f64)> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for p in 0..g.len() {
        if g.is_edge(p) || g.neighbors(p).any(|(_, nb)| dem.z(nb) <= dem.z(p)) {
            continue;
        }
        for &h in levels.iter().filter(|&&h| h > dem.z(p)) {
            let region = component_below(dem, p, h, false);
            let in_region: BTreeSet<usize> = region.iter().copied().collect();
            let rim: Vec<usize> = region
                .iter()
                .flat_map(|&c| g.neighbors(c).map(|(_, nb)| nb).collect::<Vec<_>>())
                .filter(|&nb| dem.z(nb) == h)
                .collect();
            if rim.is_empty() {
                continue;
            }
            let spills = rim.iter().any(|&c| {
                g.is_edge(c)
                    || g
                        .neighbors(c)
                        .any(|(_, nb)| dem.z(nb) < h && !in_region.contains(&nb))
            });
            if !spills {
                continue;
            }
            if seen.insert(region.clone()) {
                let cap: f64 = region.iter().map(|&c| (h - dem.z(c)) * area).sum();
                found.push((region, h, cap));
            }
            let wider = component_below(dem, p, h, true);
            if wider.iter().any(|&c| g.is_edge(c)) {
                break;
            }
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found
}

/// Random connected-ish multimodal network on a 100 m square: a random
/// spanning tree plus `extra` random edges; each edge allows a random
/// non-empty subset of modes.
pub fn random_network(n_nodes: usize, extra: usize, seed: u64) -> RoadNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<NetworkNode> = (0..n_nodes)
        .map(|i| NetworkNode {
            id: 100 + i as u64,
            x: rng.random_range(0.0..100.0),
            y: rng.random_range(0.0..100.0),
        })
        .collect();
    let mut edges = Vec::new();
    let make = |rng: &mut ChaCha8Rng, a: usize, b: usize| {
        let mut free = [None; 4];
        let mask = rng.random_range(1..16u8);
        for (k, slot) in free.iter_mut().enumerate() {
            if mask & (1 << k) != 0 {
                *slot = Some(rng.random_range(3.0..80.0));
            }
        }
        Edge {
            from: a,
            to: b,
            length_m: rng.random_range(1.0..200.0),
            free_flow_kmh: free,
        }
    };
    for i in 1..n_nodes {
        let j = rng.random_range(0..i);
        edges.push(make(&mut rng, i, j));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n_nodes);
        let b = rng.random_range(0..n_nodes);
        edges.push(make(&mut rng, a, b));
    }
    RoadNetwork::new(nodes, edges).unwrap()
}

/// Independent per-edge seconds: length over the degraded speed.
pub fn oracle_edge_times(net: &RoadNetwork, depths: &[f64], mode: Mode) -> Vec<Option<f64>> {
    let curve = DepthSpeedCurve::default();
    let c = curve.curve(mode);
    net.edges()
        .iter()
        .zip(depths)
        .map(|(e, &d)| {
            let free = e.free_flow(mode)?;
            if d >= c.critical_mm {
                return None;
            }
            let v = free.min(c.a * d * d + c.b * d + c.c).max(curve.v_min_kmh);
            Some(e.length_m / (v / 3.6))
        })
        .collect()
}

pub fn bellman_ford(net: &RoadNetwork, times: &[Option<f64>], sources: &[usize]) -> Vec<Option<f64>> {
    let mut d = vec![f64::INFINITY; net.len()];
    for &s in sources {
        d[s] = 0.0;
    }
    for _ in 0..net.len() {
        let mut changed = false;
        for (e, edge) in net.edges().iter().enumerate() {
            let Some(w) = times[e] else { continue };
            for (u, v) in [(edge.from, edge.to), (edge.to, edge.from)] {
                if d[u] + w < d[v] {
                    d[v] = d[u] + w;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    d.into_iter().map(|x| x.is_finite().then_some(x)).collect()
}

/// Minimum over every simple path from `origin` to any target.
pub fn all_simple_paths_min(net: &RoadNetwork, times: &[Option<f64>], origin: usize, targets: &[usize]) -> Option<f64> {
    fn dfs(
        net: &RoadNetwork,
        times: &[Option<f64>],
        u: usize,
        acc: f64,
        on_path: &mut [bool],
        targets: &[usize],
        best: &mut f64,
    ) {
        if targets.contains(&u) && acc < *best {
            *best = acc;
        }
        for &(e, v) in net.neighbors(u) {
            if let Some(w) = times[e] {
                if !on_path[v] {
                    on_path[v] = true;
                    dfs(net, times, v, acc + w, on_path, targets, best);
                    on_path[v] = false;
                }
            }
        }
    }
    let mut on_path = vec![false; net.len()];
    on_path[origin] = true;
    let mut best = f64::INFINITY;
    dfs(net, times, origin, 0.0, &mut on_path, targets, &mut best);
    best.is_finite().then_some(best)
}

/// Tucker congruence between two vectors.
pub fn congruence(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}

/// Best one-to-one column matching by absolute congruence (exhaustive over
/// permutations); returns the congruence of each target column.
pub fn matched_congruence(target: &nalgebra::DMatrix<f64>, found: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let k = target.ncols();
    assert_eq!(found.ncols(), k);
    let col = |m: &nalgebra::DMatrix<f64>, j: usize| -> Vec<f64> { m.column(j).iter().copied().collect() };
    let c: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| congruence(&col(target, i), &col(found, j)).abs()).collect())
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::NEG_INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let s: f64 = (0..k).map(|i| c[i][p[i]]).sum();
        if s > best.0 {
            best = (s, p.to_vec());
        }
    });
    (0..k).map(|i| c[i][best.1[i]]).collect()
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut dyn FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}

/// Plain logistic regression by IRLS on `[1 | x]`.
pub fn logistic_irls(x: &nalgebra::DMatrix<f64>, y: &[bool]) -> nalgebra::DVector<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = x.nrows();
    let d = x.ncols() + 1;
    let a = DMatrix::from_fn(n, d, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let mut w = DVector::zeros(d);
    for _ in 0..100 {
        let eta = &a * &w;
        let p: Vec<f64> = eta.iter().map(|e| 1.0 / (1.0 + (-e).exp())).collect();
        let g = a.transpose() * DVector::from_fn(n, |i, _| (y[i] as u8 as f64) - p[i]);
        let mut h = DMatrix::zeros(d, d);
        for i in 0..n {
            let r = a.row(i).transpose();
            h += &r * r.transpose() * (p[i] * (1.0 - p[i]));
        }
        let step = h.cholesky().unwrap().solve(&g);
        w += &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    w
}

pub fn fitted_model() -> climate_pathways::wellbeing::WellbeingModel {
    use climate_pathways::wellbeing::{fit_wellbeing, synthetic_survey, SyntheticSurveySpec};
    let survey = synthetic_survey(&SyntheticSurveySpec::default()).unwrap();
    fit_wellbeing(&survey).unwrap().0
}

/// Toy two-zone environment with constant rainfall in every scenario.
pub fn toy_env(rain_mm: &[f64]) -> climate_pathways::env::AdaptationEnv {
    use climate_pathways::climate::ScenarioId;
    use climate_pathways::env::{AdaptationEnv, EnvParams};
    use climate_pathways::synth::{constant_scenario, toy_city};
    let scenarios = rain_mm
        .iter()
        .zip(ScenarioId::ALL)
        .map(|(&r, id)| constant_scenario(id, r).unwrap())
        .collect();
    AdaptationEnv::new(toy_city(1).unwrap(), scenarios, fitted_model(), EnvParams::default()).unwrap()
}

pub fn small_synth_env(seed: u64) -> climate_pathways::env::AdaptationEnv {
    use climate_pathways::env::{AdaptationEnv, EnvParams};
    use climate_pathways::synth::{generate_synth_city, SynthCitySpec};
    let spec = SynthCitySpec {
        n_cols: 10,
        n_rows: 10,
        zone_radius_m: 600.0,
        residents_per_zone: 10,
        scenario_samples: 200,
        seed,
        ..SynthCitySpec::default()
    };
    let s = generate_synth_city(&spec).unwrap();
    AdaptationEnv::new(s.city, s.scenarios, fitted_model(), EnvParams::default()).unwrap()
}
