//! The on-disk network document: a JSON schema with strict field checking,
//! named demand scenarios, optional economic parameters, and support for
//! multi-terminal devices via star expansion.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::econ::EconParams;
use crate::netmodel::{
    Branch, Bus, BusKind, Demand, Device, DeviceKind, Network, Source, SourceKind, SwitchPos,
};

/// The schema version this build reads and writes.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum DocError {
    #[error("could not read document: {0}")]
    Io(#[from] std::io::Error),
    #[error("document is not valid JSON: {0}")]
    Parse(String),
    #[error("document does not match the schema: {0}")]
    Schema(String),
    #[error("unsupported schema_version `{0}` (this build reads version \"{SCHEMA_VERSION}\")")]
    UnsupportedVersion(String),
    #[error("unresolved references:\n  {}", .0.join("\n  "))]
    References(Vec<String>),
    #[error("unknown scenario `{name}`; available: {}", if .available.is_empty() { "none".to_string() } else { .available.join(", ") })]
    UnknownScenario { name: String, available: Vec<String> },
    #[error("device `{device}` is malformed: {reason}")]
    BadDevice { device: String, reason: String },
}

/// Top-level document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub network: NetworkSpec,
    /// Named demand overrides: scenario name to (demand id → MVA). Demands
    /// not listed keep their base magnitude.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub demand_scenarios: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub econ: Option<EconParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub buses: Vec<BusSpec>,
    pub sources: Vec<SourceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demands: Vec<DemandSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub devices: Vec<DeviceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub id: String,
    pub kind: BusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_level_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub id: String,
    pub bus: String,
    pub kind: SourceKind,
    pub capacity: f64,
    #[serde(default)]
    pub fault_contribution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub rating: f64,
    #[serde(default = "default_true")]
    pub in_service: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    pub id: String,
    pub bus: String,
    pub magnitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// A device is declared either with `from_bus`/`to_bus` or with a `terminals`
/// list. Two terminals are equivalent to the from/to form; three or more are
/// star-expanded on instantiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: String,
    pub kind: DeviceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_bus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_bus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<Vec<String>>,
    /// Defaults to the kind's required normal position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_state: Option<SwitchPos>,
    #[serde(default)]
    pub converter_rating: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl DeviceSpec {
    /// The endpoint pairs this spec expands to: the declared pair, or the
    /// star legs (terminal, synthetic star bus) for three or more terminals.
    fn endpoint_form(&self) -> Result<EndpointForm<'_>, DocError> {
        let bad = |reason: &str| DocError::BadDevice {
            device: self.id.clone(),
            reason: reason.to_string(),
        };
        match (&self.from_bus, &self.to_bus, &self.terminals) {
            (Some(f), Some(t), None) => Ok(EndpointForm::Pair(f, t)),
            (None, None, Some(list)) => match list.len() {
                0 | 1 => Err(bad("a terminals list needs at least two entries")),
                2 => Ok(EndpointForm::Pair(&list[0], &list[1])),
                _ => Ok(EndpointForm::Star(list)),
            },
            (None, None, None) => Err(bad("declare either from_bus/to_bus or terminals")),
            _ => Err(bad("declare either from_bus/to_bus or terminals, not both")),
        }
    }
}

enum EndpointForm<'a> {
    Pair(&'a str, &'a str),
    Star(&'a [String]),
}

fn classify(err: serde_json::Error) -> DocError {
    match err.classify() {
        serde_json::error::Category::Data => DocError::Schema(err.to_string()),
        _ => DocError::Parse(err.to_string()),
    }
}

/// Parses and fully checks a document: JSON syntax, schema (unknown fields
/// rejected), schema version, and referential closure including scenario
/// keys.
pub fn parse(json: &str) -> Result<NetworkDocument, DocError> {
    let doc = parse_lenient(json)?;
    doc.check_references()?;
    Ok(doc)
}

/// Parses syntax, schema and version only. Used by validation commands that
/// want to report reference problems through the structural validator rather
/// than fail early.
pub fn parse_lenient(json: &str) -> Result<NetworkDocument, DocError> {
    let doc: NetworkDocument = serde_json::from_str(json).map_err(classify)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DocError::UnsupportedVersion(doc.schema_version));
    }
    Ok(doc)
}

/// Reads and fully checks a document from a file.
pub fn load_file(path: impl AsRef<Path>) -> Result<NetworkDocument, DocError> {
    parse(&std::fs::read_to_string(path)?)
}

impl NetworkDocument {
    /// Wraps an in-memory network in a document shell.
    pub fn from_network(net: &Network) -> Self {
        NetworkDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            name: None,
            description: None,
            network: NetworkSpec {
                buses: net
                    .buses
                    .iter()
                    .map(|b| BusSpec {
                        id: b.id.clone(),
                        kind: b.kind,
                        fault_level_limit: b.fault_level_limit,
                        provenance: b.provenance.clone(),
                    })
                    .collect(),
                sources: net
                    .sources
                    .iter()
                    .map(|s| SourceSpec {
                        id: s.id.clone(),
                        bus: s.bus.clone(),
                        kind: s.kind,
                        capacity: s.capacity,
                        fault_contribution: s.fault_contribution,
                        provenance: s.provenance.clone(),
                    })
                    .collect(),
                branches: net
                    .branches
                    .iter()
                    .map(|b| BranchSpec {
                        id: b.id.clone(),
                        from_bus: b.from_bus.clone(),
                        to_bus: b.to_bus.clone(),
                        rating: b.rating,
                        in_service: b.in_service,
                        provenance: b.provenance.clone(),
                    })
                    .collect(),
                demands: net
                    .demands
                    .iter()
                    .map(|d| DemandSpec {
                        id: d.id.clone(),
                        bus: d.bus.clone(),
                        magnitude: d.magnitude,
                        provenance: d.provenance.clone(),
                    })
                    .collect(),
                devices: net
                    .devices
                    .iter()
                    .map(|d| DeviceSpec {
                        id: d.id.clone(),
                        kind: d.kind,
                        from_bus: Some(d.from_bus.clone()),
                        to_bus: Some(d.to_bus.clone()),
                        terminals: None,
                        normal_state: Some(d.normal_state),
                        converter_rating: d.converter_rating,
                        provenance: d.provenance.clone(),
                    })
                    .collect(),
            },
            demand_scenarios: BTreeMap::new(),
            econ: None,
        }
    }

    fn check_references(&self) -> Result<(), DocError> {
        let buses: std::collections::BTreeSet<&str> =
            self.network.buses.iter().map(|b| b.id.as_str()).collect();
        let demands: std::collections::BTreeSet<&str> =
            self.network.demands.iter().map(|d| d.id.as_str()).collect();
        let mut problems = Vec::new();
        let mut require_bus = |owner: &str, what: &str, bus: &str| {
            if !buses.contains(bus) {
                problems.push(format!("{what} `{owner}` references unknown bus `{bus}`"));
            }
        };
        for s in &self.network.sources {
            require_bus(&s.id, "source", &s.bus);
        }
        for b in &self.network.branches {
            require_bus(&b.id, "branch", &b.from_bus);
            require_bus(&b.id, "branch", &b.to_bus);
        }
        for d in &self.network.demands {
            require_bus(&d.id, "demand", &d.bus);
        }
        for dev in &self.network.devices {
            for bus in dev
                .from_bus
                .iter()
                .chain(dev.to_bus.iter())
                .chain(dev.terminals.iter().flatten())
            {
                require_bus(&dev.id, "device", bus);
            }
        }
        for (scenario, overrides) in &self.demand_scenarios {
            for id in overrides.keys() {
                if !demands.contains(id.as_str()) {
                    problems.push(format!(
                        "scenario `{scenario}` overrides unknown demand `{id}`"
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DocError::References(problems))
        }
    }

    /// Instantiates the base network. Multi-terminal devices are expanded
    /// into a synthetic tee-point bus (`<id>::star`) and one leg device per
    /// terminal (`<id>::leg<n>`), each leg inheriting the parent's kind and
    /// converter rating and carrying the parent id in its `group`.
    pub fn to_network(&self) -> Result<Network, DocError> {
        let mut net = Network {
            buses: self
                .network
                .buses
                .iter()
                .map(|b| Bus {
                    id: b.id.clone(),
                    kind: b.kind,
                    fault_level_limit: b.fault_level_limit,
                    provenance: b.provenance.clone(),
                })
                .collect(),
            sources: self
                .network
                .sources
                .iter()
                .map(|s| Source {
                    id: s.id.clone(),
                    bus: s.bus.clone(),
                    kind: s.kind,
                    capacity: s.capacity,
                    fault_contribution: s.fault_contribution,
                    provenance: s.provenance.clone(),
                })
                .collect(),
            branches: self
                .network
                .branches
                .iter()
                .map(|b| Branch {
                    id: b.id.clone(),
                    from_bus: b.from_bus.clone(),
                    to_bus: b.to_bus.clone(),
                    rating: b.rating,
                    in_service: b.in_service,
                    provenance: b.provenance.clone(),
                })
                .collect(),
            demands: self
                .network
                .demands
                .iter()
                .map(|d| Demand {
                    id: d.id.clone(),
                    bus: d.bus.clone(),
                    magnitude: d.magnitude,
                    provenance: d.provenance.clone(),
                })
                .collect(),
            devices: Vec::new(),
        };
        for spec in &self.network.devices {
            let normal = spec.normal_state.unwrap_or_else(|| spec.kind.required_normal());
            match spec.endpoint_form()? {
                EndpointForm::Pair(f, t) => net.devices.push(Device {
                    id: spec.id.clone(),
                    kind: spec.kind,
                    from_bus: f.to_string(),
                    to_bus: t.to_string(),
                    normal_state: normal,
                    converter_rating: spec.converter_rating,
                    group: None,
                    provenance: spec.provenance.clone(),
                }),
                EndpointForm::Star(terminals) => {
                    let star = format!("{}::star", spec.id);
                    net.buses.push(Bus {
                        id: star.clone(),
                        kind: BusKind::TeePoint,
                        fault_level_limit: None,
                        provenance: spec.provenance.clone(),
                    });
                    for (i, terminal) in terminals.iter().enumerate() {
                        net.devices.push(Device {
                            id: format!("{}::leg{}", spec.id, i + 1),
                            kind: spec.kind,
                            from_bus: terminal.clone(),
                            to_bus: star.clone(),
                            normal_state: normal,
                            converter_rating: spec.converter_rating,
                            group: Some(spec.id.clone()),
                            provenance: spec.provenance.clone(),
                        });
                    }
                }
            }
        }
        Ok(net)
    }

    /// Instantiates the network for a scenario (`None` for the base demands).
    pub fn network_for_scenario(&self, scenario: Option<&str>) -> Result<Network, DocError> {
        let mut net = self.to_network()?;
        let Some(name) = scenario else {
            return Ok(net);
        };
        let overrides =
            self.demand_scenarios.get(name).ok_or_else(|| DocError::UnknownScenario {
                name: name.to_string(),
                available: self.demand_scenarios.keys().cloned().collect(),
            })?;
        for (id, magnitude) in overrides {
            if let Some(d) = net.demands.iter_mut().find(|d| &d.id == id) {
                d.magnitude = *magnitude;
            } else {
                return Err(DocError::References(vec![format!(
                    "scenario `{name}` overrides unknown demand `{id}`"
                )]));
            }
        }
        Ok(net)
    }

    /// Serializes the document as pretty-printed JSON with a trailing
    /// newline (deterministic field order).
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}
