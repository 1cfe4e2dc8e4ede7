//! Rendering of analysis results as human-readable text, deterministic JSON,
//! or flat CSV.
//!
//! Every command's output is first assembled into a plain serializable DTO so
//! the three formats draw on exactly the same data. JSON is pretty-printed
//! with stable key order (all maps are ordered); CSV is a generic `field,
//! value` flattening of the same tree. Reconfiguration results are reported
//! purely behaviourally — switch positions, set-points and energization —
//! with no device-technology annotations, so functionally equivalent designs
//! produce identical reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::balance::{FlowSolution, Headroom, ThermalViolation};
use crate::netmodel::{FaultViolation, Network, ValidationReport};
use crate::security::{FirmCapacity, SecurityReport, UseCase};
use crate::sizing::{Comparison, SizingOutcome};

/// Output format selector shared by all commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// A renderable report: serializable for JSON/CSV plus a hand-written text
/// form.
pub trait Render: Serialize {
    fn text(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text(),
            Format::Json => to_json(self),
            Format::Csv => to_csv(self),
        }
    }
}

/// Pretty-printed JSON with a trailing newline. Key order and float
/// formatting are deterministic, so equal values render to equal bytes.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Flattens the serialized tree into `field,value` rows: object keys join
/// with `.`, array elements index with `[n]`, and empty containers emit one
/// row with an empty value so their presence stays visible.
pub fn to_csv<T: Serialize + ?Sized>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("report serializes");
    let mut rows = Vec::new();
    flatten(String::new(), &tree, &mut rows);
    let mut out = String::from("field,value\n");
    for (path, val) in rows {
        let _ = writeln!(out, "{},{}", csv_cell(&path), csv_cell(&val));
    }
    out
}

fn flatten(path: String, v: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    use serde_json::Value;
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, val) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(p, val, rows);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, val) in items.iter().enumerate() {
                flatten(format!("{path}[{i}]"), val, rows);
            }
        }
        Value::Object(_) | Value::Array(_) | Value::Null => rows.push((path, String::new())),
        Value::Bool(b) => rows.push((path, b.to_string())),
        Value::Number(n) => rows.push((path, n.to_string())),
        Value::String(s) => rows.push((path, s.clone())),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn mva(x: f64) -> String {
    format!("{x:.6}")
}

fn scenario_suffix(scenario: &Option<String>) -> String {
    match scenario {
        Some(s) => format!(" (scenario `{s}`)"),
        None => String::new(),
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ValidationOut {
    pub network: String,
    pub valid: bool,
    pub violation_count: usize,
    pub violations: Vec<ViolationOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationOut {
    pub code: String,
    pub element: String,
    pub message: String,
}

impl ValidationOut {
    pub fn new(network: impl Into<String>, report: &ValidationReport) -> Self {
        let violations: Vec<ViolationOut> = report
            .violations
            .iter()
            .map(|v| ViolationOut {
                code: serde_json::to_value(v.code)
                    .ok()
                    .and_then(|c| c.as_str().map(str::to_string))
                    .unwrap_or_default(),
                element: v.element.clone(),
                message: v.message.clone(),
            })
            .collect();
        ValidationOut {
            network: network.into(),
            valid: violations.is_empty(),
            violation_count: violations.len(),
            violations,
        }
    }
}

impl Render for ValidationOut {
    fn text(&self) -> String {
        let mut s = String::new();
        if self.valid {
            let _ = writeln!(s, "network `{}`: VALID", self.network);
        } else {
            let _ = writeln!(
                s,
                "network `{}`: INVALID ({} violation{})",
                self.network,
                self.violation_count,
                if self.violation_count == 1 { "" } else { "s" }
            );
            for v in &self.violations {
                let _ = writeln!(s, "  [{}] {}: {}", v.code, v.element, v.message);
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// flows
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FlowsOut {
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub total_demand: f64,
    pub served: f64,
    pub unserved: f64,
    pub islands: Vec<IslandOut>,
    /// Signed flow per branch and device, oriented from->to.
    pub flows: BTreeMap<String, f64>,
    /// Net supply per source.
    pub supplied: BTreeMap<String, f64>,
    /// Effective converter set-points (clamped where an endpoint is dead).
    pub set_points: BTreeMap<String, f64>,
    pub thermal_violations: Vec<ThermalOut>,
    pub fault_violations: Vec<FaultOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub headroom: Option<HeadroomOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandOut {
    pub index: usize,
    pub energized: bool,
    pub infeeds: Vec<String>,
    pub buses: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalOut {
    pub element: String,
    pub kind: String,
    pub flow: f64,
    pub limit: f64,
    pub overload: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaultOut {
    pub bus: String,
    pub fault_level: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeadroomOut {
    pub source: String,
    pub at_bus: String,
    pub headroom: f64,
    pub binding: String,
    pub binding_element: String,
}

impl From<&Headroom> for HeadroomOut {
    fn from(h: &Headroom) -> Self {
        HeadroomOut {
            source: h.source.clone(),
            at_bus: h.at_bus.clone(),
            headroom: h.headroom,
            binding: h.binding.to_string(),
            binding_element: h.binding_element.clone(),
        }
    }
}

impl FlowsOut {
    pub fn build(
        network: impl Into<String>,
        scenario: Option<String>,
        net: &Network,
        solution: &FlowSolution,
        thermal: &[ThermalViolation],
        fault: &[FaultViolation],
        headroom: Option<&Headroom>,
    ) -> Self {
        let total_demand = net.total_demand();
        let unserved = solution.unserved(net);
        FlowsOut {
            network: network.into(),
            scenario,
            total_demand,
            served: total_demand - unserved,
            unserved,
            islands: solution
                .partition
                .islands
                .iter()
                .enumerate()
                .map(|(index, island)| IslandOut {
                    index,
                    energized: island.energized,
                    infeeds: island.infeed_sources.clone(),
                    buses: island.buses.iter().cloned().collect(),
                })
                .collect(),
            flows: solution.flows.clone(),
            supplied: solution.supplied.clone(),
            set_points: solution.effective_set_points.clone(),
            thermal_violations: thermal
                .iter()
                .map(|t| ThermalOut {
                    element: t.element.clone(),
                    kind: serde_json::to_value(t.element_kind)
                        .ok()
                        .and_then(|c| c.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    flow: t.flow,
                    limit: t.limit,
                    overload: t.overload,
                })
                .collect(),
            fault_violations: fault
                .iter()
                .map(|f| FaultOut { bus: f.bus.clone(), fault_level: f.fault_level, limit: f.limit })
                .collect(),
            headroom: headroom.map(HeadroomOut::from),
        }
    }
}

impl Render for FlowsOut {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "flows for `{}`{}", self.network, scenario_suffix(&self.scenario));
        let _ = writeln!(s, "  total demand  {} MVA", mva(self.total_demand));
        let _ = writeln!(s, "  served        {} MVA", mva(self.served));
        let _ = writeln!(s, "  unserved      {} MVA", mva(self.unserved));
        let _ = writeln!(s, "islands: {}", self.islands.len());
        for i in &self.islands {
            let _ = writeln!(
                s,
                "  island {} [{}] infeeds: {}",
                i.index,
                if i.energized { "energized" } else { "de-energized" },
                if i.infeeds.is_empty() { "none".to_string() } else { i.infeeds.join(", ") },
            );
            let _ = writeln!(s, "    buses: {}", i.buses.join(", "));
        }
        let _ = writeln!(s, "element flows (MVA, from->to):");
        for (id, flow) in &self.flows {
            let _ = writeln!(s, "  {id}  {}", mva(*flow));
        }
        let _ = writeln!(s, "source supply (MVA):");
        for (id, sup) in &self.supplied {
            let _ = writeln!(s, "  {id}  {}", mva(*sup));
        }
        if !self.set_points.is_empty() {
            let _ = writeln!(s, "converter set-points (MVA):");
            for (id, sp) in &self.set_points {
                let _ = writeln!(s, "  {id}  {}", mva(*sp));
            }
        }
        if self.thermal_violations.is_empty() {
            let _ = writeln!(s, "thermal violations: none");
        } else {
            let _ = writeln!(s, "thermal violations:");
            for t in &self.thermal_violations {
                let _ = writeln!(
                    s,
                    "  {} `{}`: |{}| > {} (overload {})",
                    t.kind,
                    t.element,
                    mva(t.flow),
                    mva(t.limit),
                    mva(t.overload)
                );
            }
        }
        if self.fault_violations.is_empty() {
            let _ = writeln!(s, "fault-level violations: none");
        } else {
            let _ = writeln!(s, "fault-level violations:");
            for f in &self.fault_violations {
                let _ = writeln!(
                    s,
                    "  bus `{}`: {} > limit {}",
                    f.bus,
                    mva(f.fault_level),
                    mva(f.limit)
                );
            }
        }
        if let Some(h) = &self.headroom {
            let _ = writeln!(
                s,
                "headroom of `{}` at `{}`: {} MVA (binding: {} `{}`)",
                h.source,
                h.at_bus,
                mva(h.headroom),
                h.binding,
                h.binding_element
            );
        }
        s
    }
}

// ---------------------------------------------------------------------------
// n1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct N1Out {
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub secure: bool,
    /// Worst-case unserved demand across the contingency set (MVA).
    pub shortfall: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_contingency: Option<String>,
    pub contingencies: Vec<ContingencyOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Vec<UseCaseOut>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContingencyOut {
    pub id: String,
    pub unserved: f64,
    pub switch_operations: usize,
    pub toggled: Vec<String>,
    /// Post-fault position of every device.
    pub positions: BTreeMap<String, String>,
    /// Post-fault set-point of every device (zero where inapplicable).
    pub set_points: BTreeMap<String, f64>,
    pub total_converter_usage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UseCaseOut {
    pub contingency: String,
    pub tag: String,
    pub evidence: Vec<String>,
    pub baseline_unserved: f64,
    pub baseline_usage: f64,
    pub detail: String,
}

impl From<&UseCase> for UseCaseOut {
    fn from(u: &UseCase) -> Self {
        UseCaseOut {
            contingency: u.contingency.clone(),
            tag: u.tag.to_string(),
            evidence: u.evidence.clone(),
            baseline_unserved: u.baseline_unserved,
            baseline_usage: u.baseline_usage,
            detail: u.detail.clone(),
        }
    }
}

impl N1Out {
    pub fn build(
        network: impl Into<String>,
        scenario: Option<String>,
        net: &Network,
        report: &SecurityReport,
        classification: Option<Vec<UseCaseOut>>,
    ) -> Self {
        N1Out {
            network: network.into(),
            scenario,
            secure: report.secure,
            shortfall: report.shortfall,
            worst_contingency: report.worst.clone(),
            contingencies: report
                .outcomes
                .iter()
                .map(|outcome| {
                    let plan = &outcome.plan;
                    let mut positions = BTreeMap::new();
                    let mut set_points = BTreeMap::new();
                    for d in &net.devices {
                        positions
                            .insert(d.id.clone(), plan.state.position_or_normal(d).to_string());
                        set_points.insert(d.id.clone(), plan.state.set_point(&d.id));
                    }
                    ContingencyOut {
                        id: outcome.contingency.id.clone(),
                        unserved: plan.unserved,
                        switch_operations: plan.switch_operations,
                        toggled: plan.toggled.clone(),
                        positions,
                        set_points,
                        total_converter_usage: plan.total_converter_usage,
                    }
                })
                .collect(),
            classification,
        }
    }
}

impl Render for N1Out {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "N-1 assessment for `{}`{}",
            self.network,
            scenario_suffix(&self.scenario)
        );
        let _ = writeln!(s, "secure: {}", if self.secure { "yes" } else { "no" });
        match &self.worst_contingency {
            Some(worst) => {
                let _ = writeln!(
                    s,
                    "capacity shortfall: {} MVA (worst contingency: `{worst}`)",
                    mva(self.shortfall)
                );
            }
            None => {
                let _ = writeln!(s, "capacity shortfall: {} MVA", mva(self.shortfall));
            }
        }
        for c in &self.contingencies {
            let _ = writeln!(
                s,
                "contingency `{}`: unserved {} MVA, {} switching operation{}, converter usage {} MVA",
                c.id,
                mva(c.unserved),
                c.switch_operations,
                if c.switch_operations == 1 { "" } else { "s" },
                mva(c.total_converter_usage)
            );
            if !c.toggled.is_empty() {
                let _ = writeln!(s, "  toggled: {}", c.toggled.join(", "));
            }
            let _ = writeln!(s, "  positions:");
            for (id, pos) in &c.positions {
                let _ = writeln!(s, "    {id}: {pos}");
            }
            let _ = writeln!(s, "  set-points (MVA):");
            for (id, sp) in &c.set_points {
                let _ = writeln!(s, "    {id}: {}", mva(*sp));
            }
        }
        if let Some(cases) = &self.classification {
            let _ = writeln!(s, "classification:");
            for u in cases {
                let _ = writeln!(
                    s,
                    "  `{}`: {} (evidence: {}) baseline unserved {} MVA, usage {} MVA",
                    u.contingency,
                    u.tag,
                    if u.evidence.is_empty() { "none".to_string() } else { u.evidence.join(", ") },
                    mva(u.baseline_unserved),
                    mva(u.baseline_usage)
                );
                let _ = writeln!(s, "    {}", u.detail);
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// firm-capacity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FirmOut {
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub base_total_demand: f64,
    pub unbounded: bool,
    /// Absent when unbounded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub firm_mva: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl FirmOut {
    pub fn new(network: impl Into<String>, scenario: Option<String>, firm: &FirmCapacity) -> Self {
        FirmOut {
            network: network.into(),
            scenario,
            base_total_demand: firm.base_total_demand,
            unbounded: firm.unbounded,
            firm_mva: (!firm.unbounded).then_some(firm.firm_mva),
            scale: (!firm.unbounded).then_some(firm.scale),
        }
    }
}

impl Render for FirmOut {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "firm capacity of `{}`{}",
            self.network,
            scenario_suffix(&self.scenario)
        );
        let _ = writeln!(s, "  base total demand  {} MVA", mva(self.base_total_demand));
        match self.firm_mva {
            Some(firm) => {
                let _ = writeln!(s, "  firm capacity      {} MVA", mva(firm));
                if let Some(scale) = self.scale {
                    let _ = writeln!(s, "  demand scale       {scale:.6}");
                }
            }
            None => {
                let _ = writeln!(s, "  firm capacity      unbounded");
            }
        }
        s
    }
}

// ---------------------------------------------------------------------------
// size / compare
// ---------------------------------------------------------------------------

fn kind_name(kind: crate::netmodel::DeviceKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|c| c.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeOut {
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub placement: String,
    pub kind: String,
    pub baseline_shortfall: f64,
    pub required_rating: f64,
    pub residual_shortfall: f64,
}

impl SizeOut {
    pub fn new(
        network: impl Into<String>,
        scenario: Option<String>,
        outcome: &SizingOutcome,
    ) -> Self {
        SizeOut {
            network: network.into(),
            scenario,
            placement: outcome.placement.clone(),
            kind: kind_name(outcome.kind),
            baseline_shortfall: outcome.baseline_shortfall,
            required_rating: outcome.required_rating,
            residual_shortfall: outcome.residual_shortfall,
        }
    }
}

impl Render for SizeOut {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "converter sizing for `{}`{}: {} at `{}`",
            self.network,
            scenario_suffix(&self.scenario),
            self.kind,
            self.placement
        );
        let _ = writeln!(s, "  baseline shortfall  {} MVA", mva(self.baseline_shortfall));
        let _ = writeln!(s, "  required rating     {} MVA", mva(self.required_rating));
        let _ = writeln!(s, "  residual shortfall  {} MVA", mva(self.residual_shortfall));
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRowOut {
    pub option: String,
    pub placement: String,
    pub kind: String,
    pub required_rating: f64,
    pub residual_shortfall: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_vs_sop: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOut {
    pub network: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub rows: Vec<CompareRowOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_headroom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_transferred_demand: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rating_ratio: Option<f64>,
}

impl CompareOut {
    pub fn new(
        network: impl Into<String>,
        scenario: Option<String>,
        comparison: &Comparison,
    ) -> Self {
        CompareOut {
            network: network.into(),
            scenario,
            rows: comparison
                .rows
                .iter()
                .map(|r| CompareRowOut {
                    option: r.option.clone(),
                    placement: r.placement.clone(),
                    kind: kind_name(r.kind),
                    required_rating: r.required_rating,
                    residual_shortfall: r.residual_shortfall,
                    ratio_vs_sop: r.ratio_vs_sop,
                })
                .collect(),
            implied_headroom: comparison.implied_headroom,
            implied_transferred_demand: comparison.implied_transferred_demand,
            rating_ratio: comparison.rating_ratio,
        }
    }
}

impl Render for CompareOut {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "upgrade comparison for `{}`{}",
            self.network,
            scenario_suffix(&self.scenario)
        );
        for r in &self.rows {
            let ratio = match r.ratio_vs_sop {
                Some(x) => format!(", rating ratio vs soft open point {x:.6}"),
                None => String::new(),
            };
            let _ = writeln!(
                s,
                "  {}: {} at `{}` — required rating {} MVA, residual shortfall {} MVA{}",
                r.option,
                r.kind,
                r.placement,
                mva(r.required_rating),
                mva(r.residual_shortfall),
                ratio
            );
        }
        if let (Some(h), Some(d)) = (self.implied_headroom, self.implied_transferred_demand) {
            let _ = writeln!(
                s,
                "implied headroom {} MVA, transferred demand {} MVA",
                mva(h),
                mva(d)
            );
        }
        if let Some(r) = self.rating_ratio {
            let _ = writeln!(s, "hybrid/soft rating ratio h/(h+d): {r:.6}");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// econ
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize)]
pub struct EconOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discount_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_years: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deferral_years: Option<u32>,
    /// Percentage cost reduction from deferring reinforcement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deferral_cost_reduction_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annual_benefit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annuity_factor: Option<f64>,
    /// Present value of the recurring benefit over the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lifetime_benefit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_reduction_mw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_price_per_mwh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annual_energy_mwh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_reduction_annual_benefit: Option<f64>,
}

impl Render for EconOut {
    fn text(&self) -> String {
        let mut s = String::new();
        match &self.network {
            Some(n) => {
                let _ = writeln!(s, "economics for `{n}`");
            }
            None => {
                let _ = writeln!(s, "economics");
            }
        }
        if let Some(r) = self.discount_rate {
            let _ = writeln!(s, "  discount rate              {r:.6}");
        }
        if let Some(n) = self.horizon_years {
            let _ = writeln!(s, "  horizon                    {n} years");
        }
        if let (Some(n), Some(pct)) = (self.deferral_years, self.deferral_cost_reduction_percent) {
            let _ = writeln!(s, "  deferral                   {n} years");
            let _ = writeln!(s, "  deferral cost reduction    {pct:.6} %");
        }
        if let Some(b) = self.annual_benefit {
            let _ = writeln!(s, "  annual benefit             {b:.6}");
        }
        if let Some(a) = self.annuity_factor {
            let _ = writeln!(s, "  annuity factor             {a:.6}");
        }
        if let Some(pv) = self.lifetime_benefit {
            let _ = writeln!(s, "  lifetime benefit (PV)      {pv:.6}");
        }
        if let (Some(mw), Some(price)) = (self.loss_reduction_mw, self.energy_price_per_mwh) {
            let _ = writeln!(s, "  loss reduction             {mw:.6} MW");
            let _ = writeln!(s, "  energy price               {price:.6} /MWh");
        }
        if let Some(e) = self.annual_energy_mwh {
            let _ = writeln!(s, "  annual energy saved        {e:.6} MWh");
        }
        if let Some(b) = self.loss_reduction_annual_benefit {
            let _ = writeln!(s, "  annual loss-cost benefit   {b:.6}");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// fixtures
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FixturesOut {
    pub directory: String,
    pub files: Vec<String>,
}

impl Render for FixturesOut {
    fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "wrote {} fixture(s) to {}:", self.files.len(), self.directory);
        for f in &self.files {
            let _ = writeln!(s, "  {f}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        name: String,
        value: f64,
        flags: Vec<bool>,
        nested: BTreeMap<String, String>,
        empty: Vec<u8>,
    }

    fn sample() -> Sample {
        let mut nested = BTreeMap::new();
        nested.insert("a".to_string(), "x,y".to_string());
        nested.insert("b".to_string(), "q\"t".to_string());
        Sample {
            name: "s1".to_string(),
            value: 2.5,
            flags: vec![true, false],
            nested,
            empty: Vec::new(),
        }
    }

    #[test]
    fn csv_flattens_paths_and_escapes_cells() {
        let csv = to_csv(&sample());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "field,value");
        assert!(lines.contains(&"name,s1"));
        assert!(lines.contains(&"value,2.5"));
        assert!(lines.contains(&"flags[0],true"));
        assert!(lines.contains(&"flags[1],false"));
        assert!(lines.contains(&"nested.a,\"x,y\""));
        assert!(lines.contains(&"nested.b,\"q\"\"t\""));
        assert!(lines.contains(&"empty,"));
    }

    #[test]
    fn json_is_pretty_and_newline_terminated() {
        let json = to_json(&sample());
        assert!(json.ends_with('\n'));
        assert!(json.contains("\"name\": \"s1\""));
        // Deterministic: same value, same bytes.
        assert_eq!(json, to_json(&sample()));
    }

    #[test]
    fn validation_text_lists_violations() {
        let out = ValidationOut {
            network: "n".to_string(),
            valid: false,
            violation_count: 1,
            violations: vec![ViolationOut {
                code: "self-loop".to_string(),
                element: "br1".to_string(),
                message: "branch connects a bus to itself".to_string(),
            }],
        };
        let text = out.text();
        assert!(text.contains("INVALID (1 violation)"));
        assert!(text.contains("[self-loop] br1"));
    }

    #[test]
    fn firm_out_hides_numbers_when_unbounded() {
        let firm = FirmCapacity {
            firm_mva: f64::INFINITY,
            scale: f64::INFINITY,
            base_total_demand: 0.0,
            unbounded: true,
        };
        let out = FirmOut::new("n", None, &firm);
        assert!(out.firm_mva.is_none());
        let json = to_json(&out);
        assert!(!json.contains("null"));
        assert!(out.text().contains("unbounded"));
    }
}
