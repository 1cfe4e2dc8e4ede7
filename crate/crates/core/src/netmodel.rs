//! Network domain model: buses, sources, branches, demands and switchable
//! devices, plus the topology predicates everything else builds on — island
//! partition, radiality and fault-level aggregation.
//!
//! All types are plain immutable data and all operations are pure functions,
//! so values can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TOL;

/// Kind of bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BusKind {
    /// HV/MV substation busbar; branches between two such buses model
    /// incoming HV circuits and are treated as outage candidates.
    #[serde(rename = "substation-busbar")]
    SubstationBusbar,
    /// Ordinary MV feeder node.
    #[serde(rename = "feeder-node")]
    FeederNode,
    /// Three-way (teed) switching point.
    #[serde(rename = "tee-point")]
    TeePoint,
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BusKind::SubstationBusbar => "substation-busbar",
            BusKind::FeederNode => "feeder-node",
            BusKind::TeePoint => "tee-point",
        })
    }
}

/// Kind of source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceKind {
    /// Grid in-feed (transformer circuit). Exactly one per energized island
    /// under radial operation; the only kind that can energize an island.
    #[serde(rename = "grid-infeed")]
    GridInfeed,
    /// Distributed generation. Contributes fault level within its galvanic
    /// island but supplies no planning power and never roots an island
    /// (standard planning assumption: embedded generation cannot be relied
    /// on to pick up load post-fault).
    #[serde(rename = "dg")]
    Dg,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::GridInfeed => "grid-infeed",
            SourceKind::Dg => "dg",
        })
    }
}

/// Kind of switchable device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceKind {
    /// Normally open tie switch; no converter.
    #[serde(rename = "nop")]
    Nop,
    /// Normally closed sectionalizing switch; no converter.
    #[serde(rename = "ncp")]
    Ncp,
    /// Soft open point: back-to-back converter with no galvanic switch at
    /// all. Its `normal_state` is `open` by convention and can never be
    /// closed.
    #[serde(rename = "sop")]
    Sop,
    /// Hybrid open point, type 1: galvanic switch normally open, converter
    /// in parallel.
    #[serde(rename = "hop1")]
    Hop1,
    /// Hybrid open point, type 2: galvanic switch normally closed, converter
    /// in parallel.
    #[serde(rename = "hop2")]
    Hop2,
}

impl DeviceKind {
    /// Whether the device has a galvanic switch that reconfiguration may
    /// toggle. Only the soft open point has none.
    pub fn has_switch(self) -> bool {
        !matches!(self, DeviceKind::Sop)
    }

    /// The normal switch position mandated for this kind.
    pub fn required_normal(self) -> SwitchPos {
        match self {
            DeviceKind::Nop | DeviceKind::Sop | DeviceKind::Hop1 => SwitchPos::Open,
            DeviceKind::Ncp | DeviceKind::Hop2 => SwitchPos::Closed,
        }
    }

    /// Whether the kind forbids a converter (plain switches).
    pub fn requires_zero_rating(self) -> bool {
        matches!(self, DeviceKind::Nop | DeviceKind::Ncp)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Nop => "nop",
            DeviceKind::Ncp => "ncp",
            DeviceKind::Sop => "sop",
            DeviceKind::Hop1 => "hop1",
            DeviceKind::Hop2 => "hop2",
        })
    }
}

/// Galvanic switch position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwitchPos {
    #[serde(rename = "open")]
    Open,
    #[serde(rename = "closed")]
    Closed,
}

impl fmt::Display for SwitchPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwitchPos::Open => "open",
            SwitchPos::Closed => "closed",
        })
    }
}

/// A bus (node) of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub kind: BusKind,
    /// Maximum admissible aggregate fault level (MVA) of the galvanic island
    /// containing this bus. Absent = unconstrained.
    pub fault_level_limit: Option<f64>,
    /// Free-form data-provenance annotation; ignored by all analysis.
    pub provenance: Option<String>,
}

impl Bus {
    pub fn new(id: impl Into<String>, kind: BusKind) -> Self {
        Bus { id: id.into(), kind, fault_level_limit: None, provenance: None }
    }

    pub fn with_fault_limit(mut self, limit: f64) -> Self {
        self.fault_level_limit = Some(limit);
        self
    }
}

/// A power source attached to a bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub id: String,
    pub bus: String,
    pub kind: SourceKind,
    /// Maximum supply (MVA). For `dg` sources this is descriptive only; they
    /// supply no planning power.
    pub capacity: f64,
    /// Additive short-circuit contribution (MVA) within the galvanic island.
    pub fault_contribution: f64,
    pub provenance: Option<String>,
}

impl Source {
    pub fn grid(id: impl Into<String>, bus: impl Into<String>, capacity: f64) -> Self {
        Source {
            id: id.into(),
            bus: bus.into(),
            kind: SourceKind::GridInfeed,
            capacity,
            fault_contribution: 0.0,
            provenance: None,
        }
    }

    pub fn dg(id: impl Into<String>, bus: impl Into<String>, capacity: f64) -> Self {
        Source { kind: SourceKind::Dg, ..Source::grid(id, bus, capacity) }
    }

    pub fn with_fault(mut self, fault_contribution: f64) -> Self {
        self.fault_contribution = fault_contribution;
        self
    }
}

/// A fixed (non-switchable) branch: cable, line or transformer circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Thermal rating (MVA), applies to |flow|.
    pub rating: f64,
    pub in_service: bool,
    pub provenance: Option<String>,
}

impl Branch {
    pub fn new(
        id: impl Into<String>,
        from_bus: impl Into<String>,
        to_bus: impl Into<String>,
        rating: f64,
    ) -> Self {
        Branch {
            id: id.into(),
            from_bus: from_bus.into(),
            to_bus: to_bus.into(),
            rating,
            in_service: true,
            provenance: None,
        }
    }
}

/// A scalar MVA demand attached to a bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub id: String,
    pub bus: String,
    pub magnitude: f64,
    pub provenance: Option<String>,
}

impl Demand {
    pub fn new(id: impl Into<String>, bus: impl Into<String>, magnitude: f64) -> Self {
        Demand { id: id.into(), bus: bus.into(), magnitude, provenance: None }
    }
}

/// A switchable device: tie switch, sectionalizer, soft open point or hybrid
/// open point. Always two-terminal in the core model; multi-terminal tee
/// devices are expanded into a star of two-terminal legs when a document is
/// loaded (see the `doc` module).
#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: String,
    pub kind: DeviceKind,
    pub from_bus: String,
    pub to_bus: String,
    pub normal_state: SwitchPos,
    /// Converter rating (MVA); zero for plain switches. A positive set-point
    /// transfers power from `from_bus` to `to_bus`.
    pub converter_rating: f64,
    /// Parent id when this device is one leg of an expanded multi-terminal
    /// device; legs share the parent's converter rating, which therefore
    /// bounds the maximum simultaneous transfer of any one port.
    pub group: Option<String>,
    pub provenance: Option<String>,
}

impl Device {
    pub fn new(
        id: impl Into<String>,
        kind: DeviceKind,
        from_bus: impl Into<String>,
        to_bus: impl Into<String>,
    ) -> Self {
        Device {
            id: id.into(),
            kind,
            from_bus: from_bus.into(),
            to_bus: to_bus.into(),
            normal_state: kind.required_normal(),
            converter_rating: 0.0,
            group: None,
            provenance: None,
        }
    }

    pub fn with_rating(mut self, rating: f64) -> Self {
        self.converter_rating = rating;
        self
    }
}

/// The immutable network graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub sources: Vec<Source>,
    pub branches: Vec<Branch>,
    pub demands: Vec<Demand>,
    pub devices: Vec<Device>,
}

/// An assignment of a galvanic position to every device, a converter transfer
/// set-point to every device, and a service flag to every branch.
///
/// A positive set-point on device `d` transfers that many MVA from
/// `d.from_bus` to `d.to_bus` (drawn on the from side, injected on the to
/// side); negative transfers the other way.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    pub positions: BTreeMap<String, SwitchPos>,
    pub set_points: BTreeMap<String, f64>,
    pub branch_service: BTreeMap<String, bool>,
}

/// Structural-invariant violation found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Offending element id ("network" for network-level violations).
    pub element: String,
    pub message: String,
}

/// Category of structural violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    DuplicateId,
    DanglingReference,
    SelfLoop,
    NonPositiveRating,
    NegativeQuantity,
    NonFiniteQuantity,
    KindStateMismatch,
    NonRadialNormalState,
    DeEnergizedDemand,
}

/// Result of [`Network::validate`]: the full list of violated structural
/// invariants; empty iff the network is well-formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One galvanically connected component of the network under a given state.
#[derive(Debug, Clone, PartialEq)]
pub struct Island {
    pub buses: BTreeSet<String>,
    /// Grid-infeed source ids inside the island, sorted.
    pub infeed_sources: Vec<String>,
    /// True iff at least one grid in-feed is present.
    pub energized: bool,
}

/// Partition of all buses into islands. Converters never connect islands:
/// only in-service branches and galvanically closed switches do.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub islands: Vec<Island>,
    bus_to_island: BTreeMap<String, usize>,
}

impl Partition {
    /// Index (into `islands`) of the island containing `bus`.
    pub fn island_of(&self, bus: &str) -> Option<usize> {
        self.bus_to_island.get(bus).copied()
    }
}

/// A fault-level limit exceeded at a bus under some state.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultViolation {
    pub bus: String,
    pub fault_level: f64,
    pub limit: f64,
}

/// Errors for model-level state handling.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown element id `{0}`")]
    UnknownElement(String),
    #[error("switch state is missing an entry for `{0}`")]
    MissingStateEntry(String),
    #[error("switch state has an entry for unknown element `{0}`")]
    UnexpectedStateEntry(String),
    #[error("device `{0}` is a soft open point with no galvanic switch and cannot be closed")]
    ClosedSop(String),
    #[error("set-point {value} MVA on `{device}` exceeds its converter rating {rating} MVA")]
    SetPointExceedsRating { device: String, value: f64, rating: f64 },
    #[error("network failed validation with {0} violation(s)")]
    InvalidNetwork(usize),
}

struct Dsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
    has_cycle: Vec<bool>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), rank: vec![0; n], has_cycle: vec![false; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Union by rank; records a cycle when both endpoints already share a
    /// component.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            self.has_cycle[ra] = true;
            return;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.has_cycle[hi] |= self.has_cycle[lo];
    }
}

impl Network {
    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn source(&self, id: &str) -> Option<&Source> {
        self.sources.iter().find(|s| s.id == id)
    }

    pub fn branch(&self, id: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn demand(&self, id: &str) -> Option<&Demand> {
        self.demands.iter().find(|d| d.id == id)
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.id == id)
    }

    /// Total demand magnitude (MVA) across the network.
    pub fn total_demand(&self) -> f64 {
        // `+ 0.0` keeps an empty sum at positive zero.
        self.demands.iter().map(|d| d.magnitude).sum::<f64>() + 0.0
    }

    fn bus_indices(&self) -> BTreeMap<&str, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id.as_str(), i)).collect()
    }

    /// Galvanic edges under `state` as bus-index pairs: in-service branches
    /// plus closed switches. Converters do not appear here. Edges touching
    /// unknown buses are skipped (validation reports them separately).
    fn galvanic_edges(&self, state: &SwitchState) -> Vec<(usize, usize)> {
        let idx = self.bus_indices();
        let mut edges = Vec::new();
        for br in &self.branches {
            if state.service_or(br) {
                if let (Some(&u), Some(&v)) =
                    (idx.get(br.from_bus.as_str()), idx.get(br.to_bus.as_str()))
                {
                    edges.push((u, v));
                }
            }
        }
        for dev in &self.devices {
            if dev.kind.has_switch() && state.position_or_normal(dev) == SwitchPos::Closed {
                if let (Some(&u), Some(&v)) =
                    (idx.get(dev.from_bus.as_str()), idx.get(dev.to_bus.as_str()))
                {
                    edges.push((u, v));
                }
            }
        }
        edges
    }

    /// The normal-operation state: every device at its declared normal
    /// position, all set-points zero, branch service flags as declared.
    pub fn normal_state(&self) -> SwitchState {
        SwitchState {
            positions: self.devices.iter().map(|d| (d.id.clone(), d.normal_state)).collect(),
            set_points: self.devices.iter().map(|d| (d.id.clone(), 0.0)).collect(),
            branch_service: self.branches.iter().map(|b| (b.id.clone(), b.in_service)).collect(),
        }
    }

    /// Partition of the buses into galvanic islands under `state`, each
    /// labeled energized iff it contains at least one grid in-feed.
    pub fn energized_islands(&self, state: &SwitchState) -> Partition {
        let n = self.buses.len();
        let mut dsu = Dsu::new(n);
        for (u, v) in self.galvanic_edges(state) {
            dsu.union(u, v);
        }
        let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for i in 0..n {
            let root = dsu.find(i);
            groups.entry(root).or_default().insert(self.buses[i].id.clone());
        }
        // Deterministic island order: by smallest bus id in the island.
        let mut islands: Vec<BTreeSet<String>> = groups.into_values().collect();
        islands.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        let mut out = Vec::with_capacity(islands.len());
        let mut bus_to_island = BTreeMap::new();
        for (k, buses) in islands.into_iter().enumerate() {
            let mut infeeds: Vec<String> = self
                .sources
                .iter()
                .filter(|s| s.kind == SourceKind::GridInfeed && buses.contains(&s.bus))
                .map(|s| s.id.clone())
                .collect();
            infeeds.sort();
            for b in &buses {
                bus_to_island.insert(b.clone(), k);
            }
            out.push(Island { energized: !infeeds.is_empty(), infeed_sources: infeeds, buses });
        }
        Partition { islands: out, bus_to_island }
    }

    /// True iff every energized island contains exactly one grid in-feed and
    /// the galvanic subgraph of every island — energized or not — is acyclic.
    pub fn is_radial(&self, state: &SwitchState) -> bool {
        let n = self.buses.len();
        let idx = self.bus_indices();
        let mut dsu = Dsu::new(n);
        for (u, v) in self.galvanic_edges(state) {
            dsu.union(u, v);
        }
        for i in 0..n {
            let root = dsu.find(i);
            if dsu.has_cycle[root] {
                return false;
            }
        }
        let mut infeeds: BTreeMap<usize, usize> = BTreeMap::new();
        for s in &self.sources {
            if s.kind == SourceKind::GridInfeed {
                if let Some(&b) = idx.get(s.bus.as_str()) {
                    *infeeds.entry(dsu.find(b)).or_insert(0) += 1;
                }
            }
        }
        infeeds.values().all(|&c| c <= 1)
    }

    /// Aggregate fault level (MVA) of an island: the sum of
    /// `fault_contribution` over every source — grid in-feed or DG —
    /// galvanically inside it. Converters contribute nothing, which is the
    /// point of soft and hybrid open points.
    pub fn island_fault_level(&self, island: &Island) -> f64 {
        self.sources
            .iter()
            .filter(|s| island.buses.contains(&s.bus))
            .map(|s| s.fault_contribution)
            .sum()
    }

    /// Every bus whose fault-level limit is exceeded by its island's
    /// aggregate fault level under `state`, sorted by bus id.
    pub fn fault_level_violations(&self, state: &SwitchState) -> Vec<FaultViolation> {
        let partition = self.energized_islands(state);
        let levels: Vec<f64> =
            partition.islands.iter().map(|i| self.island_fault_level(i)).collect();
        let mut out = Vec::new();
        for bus in &self.buses {
            if let Some(limit) = bus.fault_level_limit {
                if let Some(k) = partition.island_of(&bus.id) {
                    if levels[k] > limit + TOL {
                        out.push(FaultViolation {
                            bus: bus.id.clone(),
                            fault_level: levels[k],
                            limit,
                        });
                    }
                }
            }
        }
        out
    }

    /// Full structural-invariant check. Network-level checks (normal-state
    /// radiality, demand energization) run only once the element-level
    /// structure is sound.
    pub fn validate(&self) -> ValidationReport {
        fn push(v: &mut Vec<Violation>, code: ViolationCode, element: &str, message: String) {
            v.push(Violation { code, element: element.to_string(), message });
        }
        let mut v: Vec<Violation> = Vec::new();

        let mut seen: BTreeMap<&str, &'static str> = BTreeMap::new();
        let named: Vec<(&str, &'static str)> = self
            .buses
            .iter()
            .map(|b| (b.id.as_str(), "bus"))
            .chain(self.sources.iter().map(|s| (s.id.as_str(), "source")))
            .chain(self.branches.iter().map(|b| (b.id.as_str(), "branch")))
            .chain(self.demands.iter().map(|d| (d.id.as_str(), "demand")))
            .chain(self.devices.iter().map(|d| (d.id.as_str(), "device")))
            .collect();
        for (id, what) in named {
            if let Some(prev) = seen.insert(id, what) {
                push(
                    &mut v,
                    ViolationCode::DuplicateId,
                    id,
                    format!("id `{id}` used by both a {prev} and a {what}"),
                );
            }
        }

        let bus_ids: BTreeSet<&str> = self.buses.iter().map(|b| b.id.as_str()).collect();
        let check_finite = |v: &mut Vec<Violation>, element: &str, field: &str, x: f64| {
            if !x.is_finite() {
                v.push(Violation {
                    code: ViolationCode::NonFiniteQuantity,
                    element: element.to_string(),
                    message: format!("`{element}` has non-finite {field} ({x})"),
                });
            }
        };

        for b in &self.buses {
            if let Some(limit) = b.fault_level_limit {
                check_finite(&mut v, &b.id, "fault_level_limit", limit);
                if limit <= 0.0 {
                    push(
                    &mut v,
                        ViolationCode::NonPositiveRating,
                        &b.id,
                        format!("bus `{}` has non-positive fault_level_limit {limit}", b.id),
                    );
                }
            }
        }
        for s in &self.sources {
            if !bus_ids.contains(s.bus.as_str()) {
                push(
                    &mut v,
                    ViolationCode::DanglingReference,
                    &s.id,
                    format!("source `{}` references unknown bus `{}`", s.id, s.bus),
                );
            }
            check_finite(&mut v, &s.id, "capacity", s.capacity);
            check_finite(&mut v, &s.id, "fault_contribution", s.fault_contribution);
            if s.capacity < 0.0 {
                push(
                    &mut v,
                    ViolationCode::NegativeQuantity,
                    &s.id,
                    format!("source `{}` has negative capacity {}", s.id, s.capacity),
                );
            }
            if s.fault_contribution < 0.0 {
                push(
                    &mut v,
                    ViolationCode::NegativeQuantity,
                    &s.id,
                    format!(
                        "source `{}` has negative fault_contribution {}",
                        s.id, s.fault_contribution
                    ),
                );
            }
        }
        for br in &self.branches {
            for end in [&br.from_bus, &br.to_bus] {
                if !bus_ids.contains(end.as_str()) {
                    push(
                    &mut v,
                        ViolationCode::DanglingReference,
                        &br.id,
                        format!("branch `{}` references unknown bus `{end}`", br.id),
                    );
                }
            }
            if br.from_bus == br.to_bus {
                push(
                    &mut v,
                    ViolationCode::SelfLoop,
                    &br.id,
                    format!("branch `{}` connects bus `{}` to itself", br.id, br.from_bus),
                );
            }
            check_finite(&mut v, &br.id, "rating", br.rating);
            if br.rating <= 0.0 {
                push(
                    &mut v,
                    ViolationCode::NonPositiveRating,
                    &br.id,
                    format!("branch `{}` has non-positive rating {}", br.id, br.rating),
                );
            }
        }
        for d in &self.demands {
            if !bus_ids.contains(d.bus.as_str()) {
                push(
                    &mut v,
                    ViolationCode::DanglingReference,
                    &d.id,
                    format!("demand `{}` references unknown bus `{}`", d.id, d.bus),
                );
            }
            check_finite(&mut v, &d.id, "magnitude", d.magnitude);
            if d.magnitude < 0.0 {
                push(
                    &mut v,
                    ViolationCode::NegativeQuantity,
                    &d.id,
                    format!("demand `{}` has negative magnitude {}", d.id, d.magnitude),
                );
            }
        }
        for dev in &self.devices {
            for end in [&dev.from_bus, &dev.to_bus] {
                if !bus_ids.contains(end.as_str()) {
                    push(
                    &mut v,
                        ViolationCode::DanglingReference,
                        &dev.id,
                        format!("device `{}` references unknown bus `{end}`", dev.id),
                    );
                }
            }
            if dev.from_bus == dev.to_bus {
                push(
                    &mut v,
                    ViolationCode::SelfLoop,
                    &dev.id,
                    format!("device `{}` connects bus `{}` to itself", dev.id, dev.from_bus),
                );
            }
            check_finite(&mut v, &dev.id, "converter_rating", dev.converter_rating);
            if dev.converter_rating < 0.0 {
                push(
                    &mut v,
                    ViolationCode::NegativeQuantity,
                    &dev.id,
                    format!(
                        "device `{}` has negative converter_rating {}",
                        dev.id, dev.converter_rating
                    ),
                );
            }
            if dev.normal_state != dev.kind.required_normal() {
                push(
                    &mut v,
                    ViolationCode::KindStateMismatch,
                    &dev.id,
                    format!(
                        "device `{}` of kind {} must be normally {}",
                        dev.id,
                        dev.kind,
                        dev.kind.required_normal()
                    ),
                );
            }
            if dev.kind.requires_zero_rating() && dev.converter_rating != 0.0 {
                push(
                    &mut v,
                    ViolationCode::KindStateMismatch,
                    &dev.id,
                    format!(
                        "device `{}` of kind {} must have zero converter rating (got {})",
                        dev.id, dev.kind, dev.converter_rating
                    ),
                );
            }
            if dev.kind == DeviceKind::Sop && dev.converter_rating <= 0.0 {
                push(
                    &mut v,
                    ViolationCode::KindStateMismatch,
                    &dev.id,
                    format!(
                        "device `{}` of kind sop requires a positive converter rating",
                        dev.id
                    ),
                );
            }
        }

        if v.is_empty() {
            let normal = self.normal_state();
            if !self.is_radial(&normal) {
                push(
                    &mut v,
                    ViolationCode::NonRadialNormalState,
                    "network",
                    "the network is not radial under normal switch states".to_string(),
                );
            } else {
                let partition = self.energized_islands(&normal);
                for d in &self.demands {
                    let energized = partition
                        .island_of(&d.bus)
                        .map(|k| partition.islands[k].energized)
                        .unwrap_or(false);
                    if !energized {
                        push(
                    &mut v,
                            ViolationCode::DeEnergizedDemand,
                            &d.id,
                            format!(
                                "demand `{}` at bus `{}` is de-energized under normal states",
                                d.id, d.bus
                            ),
                        );
                    }
                }
            }
        }

        ValidationReport { violations: v }
    }
}

impl SwitchState {
    /// Alias for [`Network::normal_state`].
    pub fn normal(net: &Network) -> Self {
        net.normal_state()
    }

    pub fn position(&self, device: &str) -> Option<SwitchPos> {
        self.positions.get(device).copied()
    }

    pub fn set_position(&mut self, device: &str, pos: SwitchPos) {
        self.positions.insert(device.to_string(), pos);
    }

    pub fn set_point(&self, device: &str) -> f64 {
        self.set_points.get(device).copied().unwrap_or(0.0)
    }

    pub fn set_set_point(&mut self, device: &str, value: f64) {
        self.set_points.insert(device.to_string(), value);
    }

    pub(crate) fn position_or_normal(&self, device: &Device) -> SwitchPos {
        self.positions.get(&device.id).copied().unwrap_or(device.normal_state)
    }

    pub(crate) fn service_or(&self, branch: &Branch) -> bool {
        self.branch_service.get(&branch.id).copied().unwrap_or(branch.in_service)
    }

    /// Number of devices whose position differs from their declared normal
    /// state.
    pub fn operations_from_normal(&self, net: &Network) -> usize {
        net.devices
            .iter()
            .filter(|d| d.kind.has_switch() && self.position_or_normal(d) != d.normal_state)
            .count()
    }

    /// Ids of devices toggled away from their normal state, sorted.
    pub fn toggled_devices(&self, net: &Network) -> Vec<String> {
        net.devices
            .iter()
            .filter(|d| d.kind.has_switch() && self.position_or_normal(d) != d.normal_state)
            .map(|d| d.id.clone())
            .collect()
    }

    /// Strict coverage and consistency check: every device and branch has an
    /// entry, no entry refers to an unknown element, soft open points are
    /// never closed, and every set-point respects its converter rating.
    pub fn validate(&self, net: &Network) -> Result<(), ModelError> {
        for d in &net.devices {
            if !self.positions.contains_key(&d.id) {
                return Err(ModelError::MissingStateEntry(d.id.clone()));
            }
            if !self.set_points.contains_key(&d.id) {
                return Err(ModelError::MissingStateEntry(d.id.clone()));
            }
        }
        for b in &net.branches {
            if !self.branch_service.contains_key(&b.id) {
                return Err(ModelError::MissingStateEntry(b.id.clone()));
            }
        }
        for id in self.positions.keys().chain(self.set_points.keys()) {
            if net.device(id).is_none() {
                return Err(ModelError::UnexpectedStateEntry(id.clone()));
            }
        }
        for id in self.branch_service.keys() {
            if net.branch(id).is_none() {
                return Err(ModelError::UnexpectedStateEntry(id.clone()));
            }
        }
        for d in &net.devices {
            if d.kind == DeviceKind::Sop && self.position(&d.id) == Some(SwitchPos::Closed) {
                return Err(ModelError::ClosedSop(d.id.clone()));
            }
            let s = self.set_point(&d.id);
            if s.abs() > d.converter_rating + TOL {
                return Err(ModelError::SetPointExceedsRating {
                    device: d.id.clone(),
                    value: s,
                    rating: d.converter_rating,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_bus_ncp() -> Network {
        Network {
            buses: vec![
                Bus::new("a", BusKind::SubstationBusbar),
                Bus::new("b", BusKind::FeederNode),
            ],
            sources: vec![Source::grid("src", "a", 10.0)],
            branches: vec![],
            demands: vec![Demand::new("d", "b", 1.0)],
            devices: vec![Device::new("sw", DeviceKind::Ncp, "a", "b")],
        }
    }

    #[test]
    fn two_bus_one_ncp_closed_is_one_island() {
        let net = two_bus_ncp();
        let p = net.energized_islands(&net.normal_state());
        assert_eq!(p.islands.len(), 1);
        assert!(p.islands[0].energized);
        assert_eq!(p.islands[0].infeed_sources, vec!["src".to_string()]);
    }

    #[test]
    fn opening_the_ncp_splits_and_de_energizes() {
        let net = two_bus_ncp();
        let mut st = net.normal_state();
        st.set_position("sw", SwitchPos::Open);
        let p = net.energized_islands(&st);
        assert_eq!(p.islands.len(), 2);
        let b_island = p.island_of("b").unwrap();
        assert!(!p.islands[b_island].energized);
    }

    #[test]
    fn single_bus_single_infeed_is_radial() {
        let net = Network {
            buses: vec![Bus::new("a", BusKind::SubstationBusbar)],
            sources: vec![Source::grid("src", "a", 5.0)],
            ..Network::default()
        };
        assert!(net.is_radial(&net.normal_state()));
    }

    #[test]
    fn two_infeeds_in_one_island_is_not_radial() {
        let mut net = two_bus_ncp();
        net.sources.push(Source::grid("src2", "b", 10.0));
        assert!(!net.is_radial(&net.normal_state()));
    }

    #[test]
    fn cycle_in_a_dead_island_is_not_radial() {
        let net = Network {
            buses: vec![
                Bus::new("a", BusKind::FeederNode),
                Bus::new("b", BusKind::FeederNode),
                Bus::new("c", BusKind::FeederNode),
            ],
            branches: vec![
                Branch::new("ab", "a", "b", 5.0),
                Branch::new("bc", "b", "c", 5.0),
                Branch::new("ca", "c", "a", 5.0),
            ],
            ..Network::default()
        };
        let st = net.normal_state();
        assert!(!net.is_radial(&st));
        // The island is dead, but the cycle still disqualifies the state.
        assert!(!net.energized_islands(&st).islands[0].energized);
    }

    #[test]
    fn island_fault_level_sums_grid_and_dg() {
        let net = Network {
            buses: vec![
                Bus::new("a", BusKind::SubstationBusbar),
                Bus::new("g", BusKind::FeederNode),
            ],
            sources: vec![
                Source::grid("infeed", "a", 10.0).with_fault(200.0),
                Source::dg("dg", "g", 1.0).with_fault(60.0),
            ],
            branches: vec![Branch::new("ag", "a", "g", 5.0)],
            ..Network::default()
        };
        let p = net.energized_islands(&net.normal_state());
        assert_eq!(p.islands.len(), 1);
        assert!((net.island_fault_level(&p.islands[0]) - 260.0).abs() < 1e-12);
    }

    #[test]
    fn island_with_no_sources_has_zero_fault_level() {
        let net = Network {
            buses: vec![Bus::new("x", BusKind::FeederNode)],
            ..Network::default()
        };
        let p = net.energized_islands(&net.normal_state());
        assert_eq!(net.island_fault_level(&p.islands[0]), 0.0);
    }

    #[test]
    fn opening_a_switch_disconnects_dg_fault_contribution() {
        let net = Network {
            buses: vec![
                Bus::new("a", BusKind::SubstationBusbar),
                Bus::new("g", BusKind::FeederNode),
            ],
            sources: vec![
                Source::grid("infeed", "a", 10.0).with_fault(200.0),
                Source::dg("dg", "g", 1.0).with_fault(60.0),
            ],
            devices: vec![Device::new("ncp-dg", DeviceKind::Ncp, "a", "g")],
            ..Network::default()
        };
        let mut st = net.normal_state();
        st.set_position("ncp-dg", SwitchPos::Open);
        let p = net.energized_islands(&st);
        let a_island = p.island_of("a").unwrap();
        assert!((net.island_fault_level(&p.islands[a_island]) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn fault_limit_violation_detected_per_bus() {
        let mut net = Network {
            buses: vec![
                Bus::new("a", BusKind::SubstationBusbar).with_fault_limit(250.0),
                Bus::new("g", BusKind::FeederNode),
            ],
            sources: vec![
                Source::grid("infeed", "a", 10.0).with_fault(200.0),
                Source::dg("dg", "g", 1.0).with_fault(60.0),
            ],
            devices: vec![Device::new("ncp-dg", DeviceKind::Ncp, "a", "g")],
            ..Network::default()
        };
        let normal = net.normal_state();
        let viols = net.fault_level_violations(&normal);
        assert_eq!(viols.len(), 1);
        assert_eq!(viols[0].bus, "a");
        assert!((viols[0].fault_level - 260.0).abs() < 1e-12);
        // Raising the limit clears it.
        net.buses[0].fault_level_limit = Some(260.0);
        assert!(net.fault_level_violations(&normal).is_empty());
    }

    #[test]
    fn validate_accepts_a_well_formed_network() {
        assert!(two_bus_ncp().validate().is_ok());
    }

    #[test]
    fn validate_reports_dangling_branch_reference() {
        let mut net = two_bus_ncp();
        net.branches.push(Branch::new("bad", "a", "nowhere", 5.0));
        let report = net.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::DanglingReference);
        assert!(report.violations[0].message.contains("nowhere"));
    }

    #[test]
    fn validate_reports_hop1_declared_normally_closed() {
        let mut net = two_bus_ncp();
        let mut dev = Device::new("hop", DeviceKind::Hop1, "a", "b").with_rating(1.0);
        dev.normal_state = SwitchPos::Closed;
        net.devices.push(dev);
        let report = net.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::KindStateMismatch);
    }

    #[test]
    fn validate_reports_de_energized_demand() {
        let mut net = two_bus_ncp();
        net.buses.push(Bus::new("c", BusKind::FeederNode));
        net.demands.push(Demand::new("d2", "c", 1.0));
        let report = net.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::DeEnergizedDemand);
        assert_eq!(report.violations[0].element, "d2");
    }

    #[test]
    fn validate_reports_nonzero_rating_on_plain_switch() {
        let mut net = two_bus_ncp();
        net.devices[0].converter_rating = 1.0;
        let report = net.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::KindStateMismatch);
    }

    #[test]
    fn state_validation_rejects_closed_sop_and_excess_set_point() {
        let mut net = two_bus_ncp();
        net.devices.push(Device::new("sop", DeviceKind::Sop, "a", "b").with_rating(2.0));
        let mut st = net.normal_state();
        st.set_position("sop", SwitchPos::Closed);
        assert_eq!(st.validate(&net), Err(ModelError::ClosedSop("sop".into())));
        st.set_position("sop", SwitchPos::Open);
        st.set_set_point("sop", 2.5);
        assert!(matches!(
            st.validate(&net),
            Err(ModelError::SetPointExceedsRating { .. })
        ));
    }

    // ---- randomized properties ----

    fn kind_from(code: u8) -> DeviceKind {
        match code % 5 {
            0 => DeviceKind::Nop,
            1 => DeviceKind::Ncp,
            2 => DeviceKind::Sop,
            3 => DeviceKind::Hop1,
            _ => DeviceKind::Hop2,
        }
    }

    /// Arbitrary (not necessarily well-formed) topology plus an arbitrary
    /// state over it. Topology predicates must behave on any graph.
    fn arb_topology() -> impl Strategy<Value = (Network, SwitchState)> {
        (2usize..=12).prop_flat_map(|n| {
            let branches = proptest::collection::vec(
                (0..n, 0..n, proptest::bool::ANY),
                0..=14,
            );
            let devices = proptest::collection::vec(
                (0..n, 0..n, 0u8..5, proptest::bool::ANY),
                0..=8,
            );
            let sources = proptest::collection::vec(
                (0..n, proptest::bool::ANY, 0.0f64..300.0),
                0..=4,
            );
            (Just(n), branches, devices, sources).prop_map(|(n, brs, devs, srcs)| {
                let bus_id = |i: usize| format!("b{i:02}");
                let mut net = Network::default();
                for i in 0..n {
                    let kind = if i == 0 {
                        BusKind::SubstationBusbar
                    } else {
                        BusKind::FeederNode
                    };
                    net.buses.push(Bus::new(bus_id(i), kind));
                }
                for (k, (u, v, in_service)) in brs.into_iter().enumerate() {
                    if u != v {
                        let mut br = Branch::new(format!("br{k:02}"), bus_id(u), bus_id(v), 10.0);
                        br.in_service = in_service;
                        net.branches.push(br);
                    }
                }
                let mut closed_flags = Vec::new();
                for (k, (u, v, code, closed)) in devs.into_iter().enumerate() {
                    if u != v {
                        let kind = kind_from(code);
                        let rating = if kind.requires_zero_rating() { 0.0 } else { 3.0 };
                        net.devices.push(
                            Device::new(format!("sw{k:02}"), kind, bus_id(u), bus_id(v))
                                .with_rating(rating),
                        );
                        closed_flags.push(closed);
                    }
                }
                for (k, (b, grid, fault)) in srcs.into_iter().enumerate() {
                    let mut s = if grid {
                        Source::grid(format!("src{k}"), bus_id(b), 10.0)
                    } else {
                        Source::dg(format!("src{k}"), bus_id(b), 10.0)
                    };
                    s.fault_contribution = fault;
                    net.sources.push(s);
                }
                let mut st = net.normal_state();
                for (dev, closed) in net.devices.iter().zip(closed_flags) {
                    if dev.kind.has_switch() {
                        let pos = if closed { SwitchPos::Closed } else { SwitchPos::Open };
                        st.set_position(&dev.id, pos);
                    }
                }
                (net, st)
            })
        })
    }

    fn oracle_components(net: &Network, st: &SwitchState) -> Vec<BTreeSet<String>> {
        // Independent BFS over an adjacency map built straight from the
        // closed-edge definition.
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for b in &net.buses {
            adj.entry(b.id.as_str()).or_default();
        }
        fn add<'a>(adj: &mut BTreeMap<&'a str, Vec<&'a str>>, u: &'a str, v: &'a str) {
            adj.entry(u).or_default().push(v);
        }
        for br in &net.branches {
            if st.service_or(br) && net.bus(&br.from_bus).is_some() && net.bus(&br.to_bus).is_some()
            {
                add(&mut adj, br.from_bus.as_str(), br.to_bus.as_str());
                add(&mut adj, br.to_bus.as_str(), br.from_bus.as_str());
            }
        }
        for d in &net.devices {
            if d.kind.has_switch()
                && st.position_or_normal(d) == SwitchPos::Closed
                && net.bus(&d.from_bus).is_some()
                && net.bus(&d.to_bus).is_some()
            {
                add(&mut adj, d.from_bus.as_str(), d.to_bus.as_str());
                add(&mut adj, d.to_bus.as_str(), d.from_bus.as_str());
            }
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut comps = Vec::new();
        for b in &net.buses {
            if seen.contains(b.id.as_str()) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = vec![b.id.as_str()];
            while let Some(x) = queue.pop() {
                if !seen.insert(x) {
                    continue;
                }
                comp.insert(x.to_string());
                for &y in &adj[x] {
                    if !seen.contains(y) {
                        queue.push(y);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    proptest! {
        #[test]
        fn partition_matches_bfs_oracle((net, st) in arb_topology()) {
            let p = net.energized_islands(&st);
            // Every bus in exactly one island.
            let mut count = 0usize;
            for island in &p.islands { count += island.buses.len(); }
            prop_assert_eq!(count, net.buses.len());
            let got: BTreeSet<BTreeSet<String>> =
                p.islands.iter().map(|i| i.buses.clone()).collect();
            let want: BTreeSet<BTreeSet<String>> =
                oracle_components(&net, &st).into_iter().collect();
            prop_assert_eq!(got, want);
            // Energized labels agree with an independent recomputation.
            for island in &p.islands {
                let expect = net.sources.iter().any(|s| {
                    s.kind == SourceKind::GridInfeed && island.buses.contains(&s.bus)
                });
                prop_assert_eq!(island.energized, expect);
            }
        }

        #[test]
        fn radiality_agrees_with_edge_count_formulation((net, st) in arb_topology()) {
            // Oracle: edges-in-island == buses-in-island - 1 for every island,
            // and at most one grid in-feed per island.
            let p = net.energized_islands(&st);
            let mut edge_count = vec![0usize; p.islands.len()];
            for (u, v) in net.galvanic_edges(&st) {
                let _ = v;
                let id = &net.buses[u].id;
                edge_count[p.island_of(id).unwrap()] += 1;
            }
            let acyclic = p
                .islands
                .iter()
                .zip(&edge_count)
                .all(|(island, &e)| e == island.buses.len() - 1);
            let single_fed = p.islands.iter().all(|i| i.infeed_sources.len() <= 1);
            prop_assert_eq!(net.is_radial(&st), acyclic && single_fed);
        }

        #[test]
        fn converter_set_points_do_not_propagate((net, st) in arb_topology()) {
            let mut with_points = st.clone();
            for d in &net.devices {
                if d.converter_rating > 0.0 {
                    with_points.set_set_point(&d.id, 1.7);
                }
            }
            prop_assert_eq!(net.energized_islands(&st), net.energized_islands(&with_points));
            prop_assert_eq!(net.is_radial(&st), net.is_radial(&with_points));
            let p0 = net.energized_islands(&st);
            let p1 = net.energized_islands(&with_points);
            for (a, b) in p0.islands.iter().zip(&p1.islands) {
                prop_assert_eq!(net.island_fault_level(a), net.island_fault_level(b));
            }
        }

        #[test]
        fn closing_switches_never_decreases_fault_levels((net, st) in arb_topology()) {
            let fault_at = |state: &SwitchState| -> BTreeMap<String, f64> {
                let p = net.energized_islands(state);
                let levels: Vec<f64> =
                    p.islands.iter().map(|i| net.island_fault_level(i)).collect();
                net.buses
                    .iter()
                    .map(|b| (b.id.clone(), levels[p.island_of(&b.id).unwrap()]))
                    .collect()
            };
            let before = fault_at(&st);
            for d in &net.devices {
                if d.kind.has_switch() && st.position_or_normal(d) == SwitchPos::Open {
                    let mut closed = st.clone();
                    closed.set_position(&d.id, SwitchPos::Closed);
                    let after = fault_at(&closed);
                    for (bus, &f0) in &before {
                        prop_assert!(after[bus] >= f0 - 1e-12);
                    }
                }
            }
            for br in &net.branches {
                if !st.service_or(br) {
                    let mut restored = st.clone();
                    restored.branch_service.insert(br.id.clone(), true);
                    let after = fault_at(&restored);
                    for (bus, &f0) in &before {
                        prop_assert!(after[bus] >= f0 - 1e-12);
                    }
                }
            }
        }
    }
}
