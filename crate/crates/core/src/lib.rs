//! gridhop — planning toolkit for reconfigurable radial distribution networks.
//!
//! Models interconnected radial networks whose feeders are tied through
//! normally open/closed points, soft open points (back-to-back converters)
//! and hybrid open points (a converter in parallel with a galvanic switch).
//! On top of the network model it provides lossless flow solving, N-1
//! security assessment with post-fault reconfiguration, converter and firm
//! capacity sizing, and discounted cash-flow economics for reinforcement
//! deferral studies.

pub mod balance;
pub mod doc;
pub mod econ;
pub mod fixtures;
pub mod netmodel;
pub mod report;
pub mod security;
pub mod sizing;

/// Comparison tolerance (MVA) used throughout: quantities closer than this
/// are treated as equal, and limits are only considered violated when
/// exceeded by more than this.
pub const TOL: f64 = 1e-9;

pub use doc::{load_file, parse, parse_lenient, DocError, NetworkDocument, SCHEMA_VERSION};
pub use report::{Format, Render};
pub use econ::{
    annuity_factor, deferral_cost_reduction, lifetime_operational_benefit,
    loss_reduction_annual_benefit, EconError, EconParams, HOURS_PER_YEAR,
};

pub use balance::{
    headroom, solve_flows, thermal_violations, BindingConstraint, FlowError, FlowSolution,
    Headroom, ThermalElementKind, ThermalViolation,
};
pub use netmodel::{
    Branch, Bus, BusKind, Demand, Device, DeviceKind, FaultViolation, Island, ModelError, Network,
    Partition, Source, SourceKind, SwitchPos, SwitchState, ValidationReport, Violation,
    ViolationCode,
};
pub use security::{
    assess, best_reconfiguration, capacity_shortfall, classify_use_case, enumerate_contingencies,
    feasible_dispatch, firm_capacity, n_minus_one, scale_demands, Contingency, ContingencyKind,
    ContingencyOutcome, Dispatch, FirmCapacity, ReconfigurationPlan, SecurityError,
    SecurityReport, UseCase, UseCaseTag,
};
pub use sizing::{
    compare_options, rating_ratio, size_device, Comparison, ComparisonRow, SizingError,
    SizingOutcome,
};
