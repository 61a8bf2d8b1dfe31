use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{adjusted_speed, Category, DepthSpeedCurve, DestinationSet, Mode, RoadNetwork};
use crate::error::{Error, Result};
use crate::raster::{DepthRaster, GridGeometry};

/// Raster cells crossed by the segment from `p0` to `p1`, in traversal order.
/// Both points must lie inside the grid extent.
pub fn cells_on_segment(g: &GridGeometry, p0: (f64, f64), p1: (f64, f64)) -> Vec<usize> {
    let (gx0, gy0) = g.to_grid(p0.0, p0.1);
    let (gx1, gy1) = g.to_grid(p1.0, p1.1);
    let cell = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
    let (mut c, mut r) = (cell(gx0, g.n_cols), cell(gy0, g.n_rows));
    let (c_end, r_end) = (cell(gx1, g.n_cols), cell(gy1, g.n_rows));

    let axis = |pos: usize, start: f64, delta: f64| -> (f64, f64) {
        if delta > 0.0 {
            ((pos as f64 + 1.0 - start) / delta, 1.0 / delta)
        } else if delta < 0.0 {
            ((pos as f64 - start) / delta, -1.0 / delta)
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    };
    let (mut t_c, dt_c) = axis(c, gx0, gx1 - gx0);
    let (mut t_r, dt_r) = axis(r, gy0, gy1 - gy0);

    let mut out = vec![g.index(r, c)];
    // Each step moves one cell toward the end cell along one axis, so the
    // walk always terminates there even under rounding.
    while (r, c) != (r_end, c_end) {
        let step_col = r == r_end || (c != c_end && t_c < t_r);
        if step_col {
            c = if c_end > c { c + 1 } else { c - 1 };
            t_c += dt_c;
        } else {
            r = if r_end > r { r + 1 } else { r - 1 };
            t_r += dt_r;
        }
        out.push(g.index(r, c));
    }
    out
}

/// Maximum depth (mm) over the cells each edge crosses.
pub fn map_depths_to_edges(depths: &DepthRaster, network: &RoadNetwork) -> Result<Vec<f64>> {
    let g = &depths.geometry;
    if let Some(n) = network.nodes().iter().find(|n| !g.contains(n.x, n.y)) {
        return Err(Error::OutOfRange(format!(
            "network node {} at ({}, {}) lies outside the raster extent",
            n.id, n.x, n.y
        )));
    }
    let nodes = network.nodes();
    Ok(network
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (nodes[e.from], nodes[e.to]);
            cells_on_segment(g, (a.x, a.y), (b.x, b.y))
                .into_iter()
                .map(|i| depths.depths_mm[i])
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Per-edge traversal time in seconds for one mode; `None` for edges the mode
/// cannot use or that are flooded past the critical depth.
pub fn edge_times(
    network: &RoadNetwork,
    edge_depths: &[f64],
    curve: &DepthSpeedCurve,
    mode: Mode,
) -> Result<Vec<Option<f64>>> {
    if edge_depths.len() != network.edges().len() {
        return Err(Error::invalid(format!(
            "{} edge depths for {} edges",
            edge_depths.len(),
            network.edges().len()
        )));
    }
    network
        .edges()
        .iter()
        .zip(edge_depths)
        .map(|(e, &d)| {
            let Some(free) = e.free_flow(mode) else {
                return Ok(None);
            };
            Ok(adjusted_speed(curve, mode, free, d)?.map(|v| e.length_m / (v / 3.6)))
        })
        .collect()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from a set of sources at time 0. Stops early at the first settled
/// node flagged in `targets`, returning its time; with no targets runs to
/// completion. `dist` receives the settled times.
fn dijkstra(
    network: &RoadNetwork,
    times: &[Option<f64>],
    sources: &[usize],
    targets: Option<&[bool]>,
    dist: &mut [f64],
) -> Option<f64> {
    dist.fill(f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry(0.0, s));
    }
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if targets.is_some_and(|t| t[u]) {
            return Some(d);
        }
        for &(e, v) in network.neighbors(u) {
            if let Some(w) = times[e] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
    }
    None
}

/// Travel time in seconds from `origin` to the nearest destination of
/// `category`, or `None` when none is reachable.
pub fn shortest_time_to_nearest(
    network: &RoadNetwork,
    edge_depths: &[f64],
    curve: &DepthSpeedCurve,
    origin: usize,
    category: Category,
    destinations: &DestinationSet,
    mode: Mode,
) -> Result<Option<f64>> {
    if origin >= network.len() {
        return Err(Error::invalid(format!("origin node index {origin} does not exist")));
    }
    let times = edge_times(network, edge_depths, curve, mode)?;
    let mut is_target = vec![false; network.len()];
    for n in destinations.nodes_of(category) {
        is_target[n] = true;
    }
    let mut dist = vec![0.0; network.len()];
    Ok(dijkstra(network, &times, &[origin], Some(&is_target), &mut dist))
}

/// Time in seconds from every node to its nearest source, by a single
/// multi-source sweep over the undirected graph.
pub fn times_to_nearest(network: &RoadNetwork, times: &[Option<f64>], sources: &[usize]) -> Vec<Option<f64>> {
    let mut dist = vec![0.0; network.len()];
    dijkstra(network, times, sources, None, &mut dist);
    dist.into_iter().map(|d| d.is_finite().then_some(d)).collect()
}
