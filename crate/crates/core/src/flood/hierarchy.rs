//! Depression hierarchy by an ascending-elevation sweep.
//!
//! Cells are activated from lowest to highest (ties broken by cell index) and
//! joined with their active neighbors by union-find. Edge cells also join a
//! virtual "ocean" component. A cell that touches no active cell seeds a new
//! leaf depression; a cell that touches two or more components is a saddle:
//! every component it closes records that cell's elevation as its spill
//! elevation. If the ocean is among them, each closed component becomes a
//! root spilling out of (or across) the domain; otherwise the components
//! merge under a new parent depression that keeps filling above the saddle.
//!
//! The same sweep assigns every cell a runoff sink: the leaf depression its
//! water ends up in, or the domain outlet. Steepest-descent neighbors decide
//! the route where one exists; on flats a cell hands its water to the first
//! equal-elevation neighbor activated before it.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flood::flow::compute_flow_directions;
use crate::raster::{Dem, GridGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpillTarget {
    Node(usize),
    DomainOutlet,
}

/// Public view of one depression.
#[derive(Debug, Clone, PartialEq)]
pub struct DepressionNode {
    pub id: usize,
    /// Every cell inside the depression, including those of nested children.
    pub cells: Vec<usize>,
    pub pit_elevation: f64,
    pub spill_elevation: f64,
    pub capacity_m3: f64,
    pub spill_target: SpillTarget,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sink {
    Leaf(usize),
    Outlet,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub pit_elevation: f64,
    pub spill_elevation: f64,
    pub capacity_m3: f64,
    /// Capacity of the layer between the children's spill level and this
    /// node's spill level; the whole capacity for a leaf.
    pub own_capacity_m3: f64,
    /// Cells first absorbed by this node, sorted by elevation.
    pub own_cells: Vec<usize>,
    pub cell_count: usize,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub spill_target: SpillTarget,
    /// Leaf that receives this node's overflow when the target is a node.
    pub target_leaf: Option<usize>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Depression tree plus the per-cell routing needed to run flood events.
#[derive(Debug, Clone)]
pub struct DepressionHierarchy {
    pub(crate) geometry: GridGeometry,
    pub(crate) nodes: Vec<Node>,
    /// Innermost node owning each cell; `None` for cells draining to the outlet.
    pub(crate) cell_node: Vec<Option<usize>>,
    pub(crate) sinks: Vec<Option<Sink>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union_into(&mut self, from: usize, to: usize) {
        let a = self.find(from);
        let b = self.find(to);
        if a != b {
            self.parent[a] = b;
        }
    }
}

impl DepressionHierarchy {
    pub fn build(dem: &Dem) -> Result<Self> {
        let flow = compute_flow_directions(dem)?;
        let g = dem.geometry;
        let n = g.len();
        let area = g.cell_area();

        let mut order: Vec<usize> = (0..n).filter(|&i| !dem.is_nodata(i)).collect();
        order.sort_by(|&a, &b| dem.z(a).total_cmp(&dem.z(b)).then(a.cmp(&b)));

        // Union-find slots: one per cell plus the ocean at index n.
        let ocean_slot = n;
        let mut uf = UnionFind::new(n + 1);
        let mut active = vec![false; n];
        // Open node of each component root (absent for the ocean).
        let mut open: Vec<Option<usize>> = vec![None; n + 1];
        let mut nodes: Vec<Node> = Vec::new();
        let mut cell_node: Vec<Option<usize>> = vec![None; n];
        let mut sinks: Vec<Option<Sink>> = vec![None; n];

        for &c in &order {
            let z = dem.z(c);
            let mut comps: Vec<usize> = Vec::with_capacity(9);
            for (_, nb) in g.neighbors(c) {
                if active[nb] {
                    let r = uf.find(nb);
                    if !comps.contains(&r) {
                        comps.push(r);
                    }
                }
            }
            let ocean_root = uf.find(ocean_slot);
            if g.is_edge(c) && !comps.contains(&ocean_root) {
                comps.push(ocean_root);
            }

            // Runoff sink: downhill neighbor, else seed/boundary, else flat predecessor.
            let sink = if let Some(r) = flow.receiver(c) {
                sinks[r].expect("lower neighbor already routed")
            } else if comps.is_empty() {
                Sink::Leaf(nodes.len())
            } else if g.is_edge(c) {
                Sink::Outlet
            } else {
                let pred = g
                    .neighbors(c)
                    .map(|(_, nb)| nb)
                    .find(|&nb| active[nb] && dem.z(nb) == z)
                    .expect("interior cell without lower neighbor touches an equal one");
                sinks[pred].expect("predecessor already routed")
            };
            sinks[c] = Some(sink);

            match comps.len() {
                0 => {
                    let id = nodes.len();
                    nodes.push(Node {
                        pit_elevation: z,
                        spill_elevation: f64::NAN,
                        capacity_m3: 0.0,
                        own_capacity_m3: 0.0,
                        own_cells: vec![c],
                        cell_count: 1,
                        children: Vec::new(),
                        parent: None,
                        spill_target: SpillTarget::DomainOutlet,
                        target_leaf: None,
                    });
                    open[uf.find(c)] = Some(id);
                    cell_node[c] = Some(id);
                }
                1 => {
                    let root = comps[0];
                    uf.union_into(c, root);
                    if let Some(id) = open[root] {
                        nodes[id].own_cells.push(c);
                        nodes[id].cell_count += 1;
                        cell_node[c] = Some(id);
                    }
                }
                _ => {
                    let touches_ocean = comps.contains(&ocean_root);
                    let mut closing: Vec<(usize, usize)> = comps
                        .iter()
                        .filter(|&&r| r != ocean_root)
                        .map(|&r| (r, open[r].expect("non-ocean component has an open node")))
                        .collect();
                    closing.sort_by_key(|&(_, id)| id);

                    for &(root, id) in &closing {
                        // Roots drain into the ocean side only; siblings into each other.
                        let into = touches_ocean.then_some(ocean_root);
                        let target =
                            trace_spill(c, root, into, &g, &active, &mut uf, &sinks, dem);
                        close_node(&mut nodes, id, z, area, dem);
                        match target {
                            Sink::Leaf(leaf) => {
                                nodes[id].spill_target = SpillTarget::Node(leaf);
                                nodes[id].target_leaf = Some(leaf);
                            }
                            Sink::Outlet => {
                                nodes[id].spill_target = SpillTarget::DomainOutlet;
                            }
                        }
                    }

                    if touches_ocean {
                        for &(root, _) in &closing {
                            uf.union_into(root, ocean_slot);
                            open[root] = None;
                        }
                        uf.union_into(c, ocean_slot);
                    } else {
                        let parent_id = nodes.len();
                        let children: Vec<usize> = closing.iter().map(|&(_, id)| id).collect();
                        let child_cells: usize = children.iter().map(|&k| nodes[k].cell_count).sum();
                        let pit = children
                            .iter()
                            .map(|&k| nodes[k].pit_elevation)
                            .fold(f64::INFINITY, f64::min);
                        for &k in &children {
                            nodes[k].parent = Some(parent_id);
                        }
                        nodes.push(Node {
                            pit_elevation: pit,
                            spill_elevation: f64::NAN,
                            capacity_m3: 0.0,
                            own_capacity_m3: 0.0,
                            own_cells: vec![c],
                            cell_count: child_cells + 1,
                            children,
                            parent: None,
                            spill_target: SpillTarget::DomainOutlet,
                            target_leaf: None,
                        });
                        for &(root, _) in &closing {
                            open[root] = None;
                            uf.union_into(root, c);
                        }
                        let r = uf.find(c);
                        open[r] = Some(parent_id);
                        cell_node[c] = Some(parent_id);
                    }
                }
            }
            active[c] = true;
        }

        // Basins sealed off by nodata never reach the ocean: they hold water up
        // to their highest cell and pass any surplus to the outlet.
        let mut sealed: Vec<usize> = (0..n)
            .filter(|&c| active[c])
            .filter_map(|c| {
                let r = uf.find(c);
                open[r].map(|id| (r, id))
            })
            .map(|(_, id)| id)
            .collect();
        sealed.sort_unstable();
        sealed.dedup();
        for id in sealed {
            let top = nodes[id]
                .own_cells
                .iter()
                .map(|&c| dem.z(c))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(
                    nodes[id]
                        .children
                        .iter()
                        .map(|&k| nodes[k].spill_elevation)
                        .fold(f64::NEG_INFINITY, f64::max),
                );
            close_node(&mut nodes, id, top, area, dem);
            nodes[id].spill_target = SpillTarget::DomainOutlet;
        }

        for node in &mut nodes {
            node.own_cells
                .sort_by(|&a, &b| dem.z(a).total_cmp(&dem.z(b)).then(a.cmp(&b)));
        }

        Ok(DepressionHierarchy {
            geometry: g,
            nodes,
            cell_node,
            sinks,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All cells of a node, nested children included, in ascending order.
    pub fn member_cells(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].cell_count);
        let mut stack = vec![id];
        while let Some(k) = stack.pop() {
            out.extend_from_slice(&self.nodes[k].own_cells);
            stack.extend_from_slice(&self.nodes[k].children);
        }
        out.sort_unstable();
        out
    }

    pub fn nodes(&self) -> Vec<DepressionNode> {
        (0..self.nodes.len())
            .map(|id| {
                let n = &self.nodes[id];
                DepressionNode {
                    id,
                    cells: self.member_cells(id),
                    pit_elevation: n.pit_elevation,
                    spill_elevation: n.spill_elevation,
                    capacity_m3: n.capacity_m3,
                    spill_target: n.spill_target,
                    parent: n.parent,
                    children: n.children.clone(),
                }
            })
            .collect()
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&k| self.nodes[k].parent.is_none())
    }
}

fn close_node(nodes: &mut [Node], id: usize, spill: f64, area: f64, dem: &Dem) {
    let mut cap = 0.0;
    let mut child_cap = 0.0;
    for &k in &nodes[id].children {
        let ch = &nodes[k];
        cap += ch.capacity_m3 + ch.cell_count as f64 * (spill - ch.spill_elevation) * area;
        child_cap += ch.capacity_m3;
    }
    let own: f64 = nodes[id]
        .own_cells
        .iter()
        .map(|&c| (spill - dem.z(c)) * area)
        .sum();
    let node = &mut nodes[id];
    node.spill_elevation = spill;
    node.capacity_m3 = cap + own;
    node.own_capacity_m3 = cap + own - child_cap;
}

/// Follow water over the saddle `c` away from component `from`, optionally
/// restricted to neighbors of component `into`.
#[allow(clippy::too_many_arguments)]
fn trace_spill(
    c: usize,
    from: usize,
    into: Option<usize>,
    g: &GridGeometry,
    active: &[bool],
    uf: &mut UnionFind,
    sinks: &[Option<Sink>],
    dem: &Dem,
) -> Sink {
    if g.is_edge(c) {
        return Sink::Outlet;
    }
    let mut best: Option<usize> = None;
    for (_, nb) in g.neighbors(c) {
        if !active[nb] {
            continue;
        }
        let r = uf.find(nb);
        if r == from || into.is_some_and(|t| t != r) {
            continue;
        }
        if best.is_none_or(|b| dem.z(nb) < dem.z(b)) {
            best = Some(nb);
        }
    }
    match best {
        Some(nb) => sinks[nb].expect("active cell is routed"),
        None => Sink::Outlet,
    }
}

/// Convenience wrapper returning the public node list.
pub fn build_depression_hierarchy(dem: &Dem) -> Result<Vec<DepressionNode>> {
    Ok(DepressionHierarchy::build(dem)?.nodes())
}
