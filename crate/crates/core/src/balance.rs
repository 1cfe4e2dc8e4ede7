//! Lossless nodal balance on radial islands: flow solving, thermal checks and
//! headroom evaluation.
//!
//! Power flow on a radial island is fully determined by demand: the flow on
//! every edge equals the aggregate effective demand of the subtree hanging
//! below it, and the island's in-feed supplies the island total. Converter
//! set-points enter as paired nodal terms — a draw on the device's from side
//! and an injection on its to side — so a transfer between two islands (or
//! along a feeder) reshapes flows without any galvanic connection.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::netmodel::{ModelError, Network, Partition, SourceKind, SwitchPos, SwitchState};
use crate::TOL;

/// Errors from flow solving and headroom evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    /// The state is not radial: some energized island has more than one grid
    /// in-feed, or some island's galvanic subgraph contains a cycle.
    #[error("state is not radial: islands must be acyclic with exactly one grid in-feed each")]
    NonRadialState,
    #[error(transparent)]
    State(#[from] ModelError),
    #[error("unknown element `{0}`")]
    Unknown(String),
    #[error("source `{0}` does not energize an island")]
    NotAnEnergizingSource(String),
    #[error("bus `{bus}` is not in the island fed by source `{source_id}`")]
    NotInSourceIsland { source_id: String, bus: String },
}

/// Solved flows for one state.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Signed flow (MVA) for every branch and device, oriented from the
    /// element's `from_bus` to its `to_bus`. For a galvanically closed device
    /// this is the total corridor throughput (tree flow plus converter
    /// transfer); for an open device or soft open point it is the converter
    /// transfer alone. Elements in de-energized islands carry zero.
    pub flows: BTreeMap<String, f64>,
    /// Net MVA supplied by each source. DG sources always supply zero; a
    /// grid in-feed may go negative when converter imports exceed island
    /// demand (reverse flow through the substation).
    pub supplied: BTreeMap<String, f64>,
    /// Served fraction per demand: 1.0 in an energized island, else 0.0.
    pub served: BTreeMap<String, f64>,
    /// Set-points actually applied. A set-point whose device has either
    /// terminal in a de-energized island is clamped to zero: converters
    /// cannot energize an island on their own.
    pub effective_set_points: BTreeMap<String, f64>,
    /// The island partition the solution was computed over.
    pub partition: Partition,
}

impl FlowSolution {
    /// Total unserved demand (MVA).
    pub fn unserved(&self, net: &Network) -> f64 {
        // `+ 0.0` keeps an empty sum at positive zero.
        net.demands
            .iter()
            .map(|d| d.magnitude * (1.0 - self.served.get(&d.id).copied().unwrap_or(0.0)))
            .sum::<f64>()
            + 0.0
    }
}

/// A thermal overload of a branch or a source.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalViolation {
    pub element: String,
    pub element_kind: ThermalElementKind,
    /// The flow (branches) or net supply (sources) observed.
    pub flow: f64,
    pub limit: f64,
    /// `|flow| - limit`, always positive.
    pub overload: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThermalElementKind {
    Branch,
    Source,
}

/// Which constraint capped a headroom evaluation.
///
/// `FaultLevel` is part of the interface for completeness but is never
/// produced by this implementation: an MVA injection at a bus adds no fault
/// in-feed, so fault-level limits cannot bind a headroom probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BindingConstraint {
    SourceCapacity,
    BranchRating,
    FaultLevel,
}

impl std::fmt::Display for BindingConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BindingConstraint::SourceCapacity => "source-capacity",
            BindingConstraint::BranchRating => "branch-rating",
            BindingConstraint::FaultLevel => "fault-level",
        })
    }
}

/// Result of a headroom evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Headroom {
    pub source: String,
    /// Bus at which the probe injection is absorbed.
    pub at_bus: String,
    /// Largest additional MVA absorbable at `at_bus` without violating the
    /// source's capacity or any branch rating on the delivery path.
    pub headroom: f64,
    pub binding: BindingConstraint,
    /// Id of the binding element (the source or a branch).
    pub binding_element: String,
}

/// Internal per-island spanning-tree view used by the solver and by the
/// security search's converter dispatch.
pub(crate) struct IslandTrees {
    /// Parent edge of each bus index: (parent bus index, element).
    parent: Vec<Option<(usize, EdgeElem)>>,
    /// Root bus index of each energized island (keyed by island index).
    pub(crate) roots: BTreeMap<usize, usize>,
    /// Island index per bus index.
    pub(crate) island_of_bus: Vec<usize>,
    bus_index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EdgeElem {
    Branch(usize),
    Device(usize),
}

impl IslandTrees {
    pub(crate) fn bus_idx(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    /// Edge elements on the tree path from the island root down to `bus`,
    /// each with the bus index of its child (downstream) end.
    pub(crate) fn path_from_root(&self, bus: usize) -> Vec<(EdgeElem, usize)> {
        let mut rev = Vec::new();
        let mut cur = bus;
        while let Some((p, e)) = self.parent[cur] {
            rev.push((e, cur));
            cur = p;
        }
        rev.reverse();
        rev
    }
}

/// Builds the spanning-tree structure for every energized island. Requires a
/// radial state (checked by the caller).
pub(crate) fn build_trees(net: &Network, state: &SwitchState, partition: &Partition) -> IslandTrees {
    let n = net.buses.len();
    let bus_index: BTreeMap<String, usize> =
        net.buses.iter().enumerate().map(|(i, b)| (b.id.clone(), i)).collect();
    let island_of_bus: Vec<usize> =
        net.buses.iter().map(|b| partition.island_of(&b.id).unwrap()).collect();

    // Adjacency in deterministic order (branches then devices, declaration
    // order within each).
    let mut adj: Vec<Vec<(usize, EdgeElem)>> = vec![Vec::new(); n];
    for (k, br) in net.branches.iter().enumerate() {
        if state.service_or(br) {
            if let (Some(&u), Some(&v)) = (bus_index.get(&br.from_bus), bus_index.get(&br.to_bus))
            {
                adj[u].push((v, EdgeElem::Branch(k)));
                adj[v].push((u, EdgeElem::Branch(k)));
            }
        }
    }
    for (k, dev) in net.devices.iter().enumerate() {
        if dev.kind.has_switch() && state.position_or_normal(dev) == SwitchPos::Closed {
            if let (Some(&u), Some(&v)) = (bus_index.get(&dev.from_bus), bus_index.get(&dev.to_bus))
            {
                adj[u].push((v, EdgeElem::Device(k)));
                adj[v].push((u, EdgeElem::Device(k)));
            }
        }
    }

    let mut parent: Vec<Option<(usize, EdgeElem)>> = vec![None; n];
    let mut roots = BTreeMap::new();
    let mut visited = vec![false; n];
    for (k, island) in partition.islands.iter().enumerate() {
        if !island.energized {
            continue;
        }
        let infeed = net.source(&island.infeed_sources[0]).expect("infeed exists");
        let root = bus_index[&infeed.bus];
        roots.insert(k, root);
        visited[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
    }
    IslandTrees { parent, roots, island_of_bus, bus_index }
}

struct EffectiveLoads {
    /// Effective nodal demand per bus index (served demand plus converter
    /// draw minus converter injection).
    nodal: Vec<f64>,
    effective_set_points: BTreeMap<String, f64>,
    served: BTreeMap<String, f64>,
}

fn effective_loads(net: &Network, state: &SwitchState, partition: &Partition) -> EffectiveLoads {
    let bus_index: BTreeMap<&str, usize> =
        net.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect();
    let energized =
        |bus: &str| partition.island_of(bus).map(|k| partition.islands[k].energized) == Some(true);

    let mut nodal = vec![0.0; net.buses.len()];
    let mut served = BTreeMap::new();
    for d in &net.demands {
        let frac = if energized(&d.bus) { 1.0 } else { 0.0 };
        served.insert(d.id.clone(), frac);
        if let Some(&i) = bus_index.get(d.bus.as_str()) {
            nodal[i] += frac * d.magnitude;
        }
    }
    let mut effective_set_points = BTreeMap::new();
    for dev in &net.devices {
        let mut s = state.set_point(&dev.id);
        if s != 0.0 && !(energized(&dev.from_bus) && energized(&dev.to_bus)) {
            // Converters cannot energize an island: a set-point towards or
            // out of a dead island is clamped to zero.
            s = 0.0;
        }
        effective_set_points.insert(dev.id.clone(), s);
        if s != 0.0 {
            nodal[bus_index[dev.from_bus.as_str()]] += s;
            nodal[bus_index[dev.to_bus.as_str()]] -= s;
        }
    }
    EffectiveLoads { nodal, effective_set_points, served }
}

/// Solves the lossless nodal balance for a radial state.
///
/// Errors with [`FlowError::NonRadialState`] when the state is not radial;
/// state coverage/consistency problems surface as [`FlowError::State`].
pub fn solve_flows(net: &Network, state: &SwitchState) -> Result<FlowSolution, FlowError> {
    state.validate(net)?;
    if !net.is_radial(state) {
        return Err(FlowError::NonRadialState);
    }
    let partition = net.energized_islands(state);
    let trees = build_trees(net, state, &partition);
    let loads = effective_loads(net, state, &partition);

    // Subtree sums: accumulate each bus's effective load up its parent chain.
    // Deterministic order: bus declaration order, full path walk per bus is
    // fine at these network sizes.
    let n = net.buses.len();
    let mut subtree = loads.nodal.clone();
    let mut order: Vec<usize> = (0..n).collect();
    // Process deepest-first so children accumulate before parents.
    let depth: Vec<usize> = (0..n)
        .map(|mut b| {
            let mut d = 0;
            while let Some((p, _)) = trees.parent[b] {
                d += 1;
                b = p;
            }
            d
        })
        .collect();
    order.sort_by(|&a, &b| depth[b].cmp(&depth[a]).then(a.cmp(&b)));
    for &b in &order {
        if let Some((p, _)) = trees.parent[b] {
            let add = subtree[b];
            subtree[p] += add;
        }
    }

    // Edge flows: the flow on the parent edge of bus b (parent -> b) equals
    // subtree[b]. Orient to each element's from->to convention.
    let mut flows: BTreeMap<String, f64> = BTreeMap::new();
    for br in &net.branches {
        flows.insert(br.id.clone(), 0.0);
    }
    for dev in &net.devices {
        flows.insert(dev.id.clone(), 0.0);
    }
    for (b, up) in trees.parent.iter().enumerate() {
        if let Some((_, e)) = *up {
            let down = subtree[b];
            match e {
                EdgeElem::Branch(k) => {
                    let br = &net.branches[k];
                    let oriented = if trees.bus_idx(&br.to_bus) == Some(b) { down } else { -down };
                    flows.insert(br.id.clone(), oriented);
                }
                EdgeElem::Device(k) => {
                    let dev = &net.devices[k];
                    let oriented = if trees.bus_idx(&dev.to_bus) == Some(b) { down } else { -down };
                    // Total corridor throughput: galvanic tree flow plus the
                    // converter transfer in parallel with the closed switch.
                    let s = loads.effective_set_points[&dev.id];
                    flows.insert(dev.id.clone(), oriented + s);
                }
            }
        }
    }
    // Open (or switchless) devices carry their converter transfer alone.
    for dev in &net.devices {
        let closed = dev.kind.has_switch() && state.position_or_normal(dev) == SwitchPos::Closed;
        if !closed {
            flows.insert(dev.id.clone(), loads.effective_set_points[&dev.id]);
        }
    }

    // Source supplies: the single in-feed of each energized island supplies
    // the island's total effective load; everything else supplies zero.
    let mut supplied: BTreeMap<String, f64> = BTreeMap::new();
    for s in &net.sources {
        supplied.insert(s.id.clone(), 0.0);
    }
    for (island_idx, &root) in &trees.roots {
        let infeed = &partition.islands[*island_idx].infeed_sources[0];
        supplied.insert(infeed.clone(), subtree[root]);
    }

    Ok(FlowSolution {
        flows,
        supplied,
        served: loads.served,
        effective_set_points: loads.effective_set_points,
        partition,
    })
}

/// Thermal violations of a solution: branches with `|flow| > rating + TOL`
/// and sources with `|supplied| > capacity + TOL`, sorted by element id.
/// Devices have no thermal rating — converter set-points are already bounded
/// by their rating at the state level.
pub fn thermal_violations(net: &Network, solution: &FlowSolution) -> Vec<ThermalViolation> {
    let mut out = Vec::new();
    for br in &net.branches {
        let flow = solution.flows.get(&br.id).copied().unwrap_or(0.0);
        if flow.abs() > br.rating + TOL {
            out.push(ThermalViolation {
                element: br.id.clone(),
                element_kind: ThermalElementKind::Branch,
                flow,
                limit: br.rating,
                overload: flow.abs() - br.rating,
            });
        }
    }
    for s in &net.sources {
        if s.kind != SourceKind::GridInfeed {
            continue;
        }
        let supply = solution.supplied.get(&s.id).copied().unwrap_or(0.0);
        if supply.abs() > s.capacity + TOL {
            out.push(ThermalViolation {
                element: s.id.clone(),
                element_kind: ThermalElementKind::Source,
                flow: supply,
                limit: s.capacity,
                overload: supply.abs() - s.capacity,
            });
        }
    }
    out.sort_by(|a, b| a.element.cmp(&b.element));
    out
}

/// Headroom of `source` under `state`: the largest additional MVA injection
/// absorbable at `at_bus` (default: the source's own bus) without violating
/// the source capacity or any branch rating on the delivery path from the
/// source to `at_bus`. Clamped at zero if the state is already overloaded
/// along that path.
pub fn headroom(
    net: &Network,
    state: &SwitchState,
    source: &str,
    at_bus: Option<&str>,
) -> Result<Headroom, FlowError> {
    let src = net.source(source).ok_or_else(|| FlowError::Unknown(source.to_string()))?;
    let solution = solve_flows(net, state)?;
    let partition = &solution.partition;
    let src_island = partition
        .island_of(&src.bus)
        .ok_or_else(|| FlowError::Unknown(src.bus.clone()))?;
    let is_the_infeed = partition.islands[src_island]
        .infeed_sources
        .first()
        .is_some_and(|f| f == source);
    if !partition.islands[src_island].energized || !is_the_infeed {
        return Err(FlowError::NotAnEnergizingSource(source.to_string()));
    }
    let at = at_bus.unwrap_or(&src.bus);
    if net.bus(at).is_none() {
        return Err(FlowError::Unknown(at.to_string()));
    }
    if partition.island_of(at) != Some(src_island) {
        return Err(FlowError::NotInSourceIsland {
            source_id: source.to_string(),
            bus: at.to_string(),
        });
    }

    let trees = build_trees(net, state, partition);
    let at_idx = trees.bus_idx(at).unwrap();

    // Candidate slacks in deterministic order: the source first, then path
    // branches from the root outward. An extra injection of h at `at` raises
    // the source supply and every path edge's downstream flow by h.
    let mut slacks: Vec<(f64, BindingConstraint, String)> = Vec::new();
    let supply = solution.supplied[&src.id];
    slacks.push((src.capacity - supply, BindingConstraint::SourceCapacity, src.id.clone()));
    for (elem, child) in trees.path_from_root(at_idx) {
        if let EdgeElem::Branch(k) = elem {
            let br = &net.branches[k];
            // Downstream-oriented flow on this edge equals the subtree sum,
            // i.e. the element flow re-oriented towards `child`.
            let oriented = solution.flows[&br.id];
            let down = if trees.bus_idx(&br.to_bus) == Some(child) { oriented } else { -oriented };
            slacks.push((br.rating - down, BindingConstraint::BranchRating, br.id.clone()));
        }
        // Devices on the path have no thermal rating and add no constraint.
    }
    let mut best = &slacks[0];
    for s in &slacks[1..] {
        if s.0 < best.0 - TOL {
            best = s;
        }
    }
    Ok(Headroom {
        source: source.to_string(),
        at_bus: at.to_string(),
        headroom: best.0.max(0.0),
        binding: best.1,
        binding_element: best.2.clone(),
    })
}
