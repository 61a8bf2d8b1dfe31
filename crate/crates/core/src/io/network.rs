//! CSV formats for road networks, destinations and zones.
//!
//! ```text
//! nodes.csv:         id,x_m,y_m
//! edges.csv:         from,to,length_m,modes,drive_kmh,cycle_kmh,walk_kmh,transit_kmh
//! destinations.csv:  node_id,category,subtype
//! zones.csv:         zone_id,x_m,y_m,nearest_node,population
//! ```
//! `modes` is pipe-separated (`drive|walk`); speeds of modes not listed may be empty.

use std::fmt::Write as _;
use std::path::Path;

use super::table::Table;
use crate::error::{Error, Result};
use crate::raster::GridGeometry;
use crate::transport::{
    build_hex_zones, Category, Destination, DestinationSet, Edge, Mode, NetworkNode, RoadNetwork, ZoneGrid,
};

const SPEED_COLS: [&str; 4] = ["drive_kmh", "cycle_kmh", "walk_kmh", "transit_kmh"];

pub fn parse_network(nodes_csv: &str, nodes_path: &Path, edges_csv: &str, edges_path: &Path) -> Result<RoadNetwork> {
    let t = Table::parse(nodes_csv, nodes_path, &["id", "x_m", "y_m"])?;
    let mut nodes = Vec::with_capacity(t.rows.len());
    let mut seen = std::collections::HashSet::new();
    for row in &t.rows {
        let id: u64 = t.get(row, 0)?;
        if !seen.insert(id) {
            return Err(t.error(row, 0, format!("duplicate node id {id}")));
        }
        nodes.push(NetworkNode {
            id,
            x: t.finite(row, 1)?,
            y: t.finite(row, 2)?,
        });
    }
    let index: std::collections::HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();

    let mut cols = vec!["from", "to", "length_m", "modes"];
    cols.extend(SPEED_COLS);
    let t = Table::parse(edges_csv, edges_path, &cols)?;
    let mut edges = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let mut ends = [0usize; 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let id: u64 = t.get(row, k)?;
            *end = *index.get(&id).ok_or_else(|| Error::DanglingReference {
                path: edges_path.to_path_buf(),
                line: row.line,
                node: id.to_string(),
            })?;
        }
        let length_m = t.finite(row, 2)?;
        if length_m <= 0.0 {
            return Err(t.error(row, 2, "length must be positive"));
        }
        let mut free_flow_kmh = [None; 4];
        for token in t.str(row, 3).split('|').filter(|s| !s.is_empty()) {
            let mode: Mode = token.parse().map_err(|e: Error| t.error(row, 3, e.to_string()))?;
            let col = 4 + mode.index();
            let v = t.finite(row, col)?;
            if v <= 0.0 {
                return Err(t.error(row, col, "allowed mode needs a positive speed"));
            }
            free_flow_kmh[mode.index()] = Some(v);
        }
        edges.push(Edge {
            from: ends[0],
            to: ends[1],
            length_m,
            free_flow_kmh,
        });
    }
    RoadNetwork::new(nodes, edges).map_err(|e| Error::parse(edges_path, 0, "edges", e.to_string()))
}

pub fn read_network(nodes_path: &Path, edges_path: &Path) -> Result<RoadNetwork> {
    let nodes = std::fs::read_to_string(nodes_path).map_err(|e| Error::io(nodes_path, e))?;
    let edges = std::fs::read_to_string(edges_path).map_err(|e| Error::io(edges_path, e))?;
    parse_network(&nodes, nodes_path, &edges, edges_path)
}

pub fn format_nodes(network: &RoadNetwork) -> String {
    let mut out = String::from("id,x_m,y_m\n");
    for n in network.nodes() {
        let _ = writeln!(out, "{},{},{}", n.id, n.x, n.y);
    }
    out
}

pub fn format_edges(network: &RoadNetwork) -> String {
    let mut out = format!("from,to,length_m,modes,{}\n", SPEED_COLS.join(","));
    let nodes = network.nodes();
    for e in network.edges() {
        let modes: Vec<&str> = Mode::ALL.iter().filter(|m| e.allows(**m)).map(|m| m.name()).collect();
        let speeds: Vec<String> = e
            .free_flow_kmh
            .iter()
            .map(|v| v.map(|v| v.to_string()).unwrap_or_default())
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            nodes[e.from].id,
            nodes[e.to].id,
            e.length_m,
            modes.join("|"),
            speeds.join(",")
        );
    }
    out
}

pub fn parse_destinations(text: &str, path: &Path, network: &RoadNetwork) -> Result<DestinationSet> {
    let t = Table::parse(text, path, &["node_id", "category", "subtype"])?;
    let mut entries = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        let id: u64 = t.get(row, 0)?;
        let node = network.node_index(id).ok_or_else(|| Error::DanglingReference {
            path: path.to_path_buf(),
            line: row.line,
            node: id.to_string(),
        })?;
        let category: Category = t.str(row, 1).parse().map_err(|e: Error| t.error(row, 1, e.to_string()))?;
        entries.push(Destination {
            node,
            category,
            subtype: t.str(row, 2).to_string(),
        });
    }
    DestinationSet::new(entries, network)
}

pub fn read_destinations(path: &Path, network: &RoadNetwork) -> Result<DestinationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_destinations(&text, path, network)
}

pub fn format_destinations(dest: &DestinationSet, network: &RoadNetwork) -> String {
    let mut out = String::from("node_id,category,subtype\n");
    for d in dest.entries() {
        let _ = writeln!(out, "{},{},{}", network.nodes()[d.node].id, d.category, d.subtype);
    }
    out
}

pub fn format_zones(zones: &ZoneGrid, network: &RoadNetwork) -> String {
    let mut out = String::from("zone_id,x_m,y_m,nearest_node,population\n");
    for z in zones.zones() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            z.id,
            z.x,
            z.y,
            network.nodes()[z.nearest_node].id,
            z.population
        );
    }
    out
}

/// Rebuild the tiling for `radius` and check it against the zone file, which
/// supplies node assignment and population.
pub fn parse_zones(text: &str, path: &Path, geometry: &GridGeometry, radius: f64, network: &RoadNetwork) -> Result<ZoneGrid> {
    let t = Table::parse(text, path, &["zone_id", "x_m", "y_m", "nearest_node", "population"])?;
    let built = build_hex_zones(geometry, radius, network).map_err(|e| Error::parse(path, 0, "zones", e.to_string()))?;
    if t.rows.len() != built.len() {
        return Err(Error::parse(
            path,
            0,
            "zones",
            format!("{} rows, but radius {radius} tiles the extent with {} zones", t.rows.len(), built.len()),
        ));
    }
    let mut zones = built.zones().to_vec();
    for (k, row) in t.rows.iter().enumerate() {
        let id: usize = t.get(row, 0)?;
        if id != k {
            return Err(t.error(row, 0, format!("expected zone id {k}")));
        }
        let (x, y) = (t.finite(row, 1)?, t.finite(row, 2)?);
        let tol = 1e-6 * radius;
        if (x - zones[k].x).abs() > tol || (y - zones[k].y).abs() > tol {
            return Err(t.error(row, 1, format!("centroid does not match the tiling ({}, {})", zones[k].x, zones[k].y)));
        }
        let node_id: u64 = t.get(row, 3)?;
        zones[k].nearest_node = network.node_index(node_id).ok_or_else(|| Error::DanglingReference {
            path: path.to_path_buf(),
            line: row.line,
            node: node_id.to_string(),
        })?;
        let p = t.finite(row, 4)?;
        if p < 0.0 {
            return Err(t.error(row, 4, "population must be non-negative"));
        }
        zones[k].population = p;
    }
    ZoneGrid::from_zones(geometry, radius, zones, network)
}
