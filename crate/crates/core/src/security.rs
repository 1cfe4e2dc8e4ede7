//! N-1 security assessment with post-fault reconfiguration.
//!
//! For each credible outage the engine searches switch configurations
//! exhaustively (ascending bitmask over the id-sorted switchable devices) and,
//! per configuration, dispatches converter set-points optimally. A
//! configuration is valid when it is radial, respects every fault-level limit
//! and admits a thermally feasible dispatch. Among valid configurations the
//! engine minimizes, lexicographically: unserved demand, then total converter
//! usage, then the number of switch operations; ties keep the earliest
//! configuration in enumeration order, which makes results deterministic.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::balance::{build_trees, solve_flows, EdgeElem, FlowError};
use crate::netmodel::{
    BusKind, DeviceKind, Network, Partition, SourceKind, SwitchPos, SwitchState,
};
use crate::TOL;

/// Largest switchable-device count for which the exhaustive configuration
/// search is attempted.
pub const MAX_SWITCHABLE: usize = 20;

/// Errors from security assessment.
#[derive(Debug, Error, PartialEq)]
pub enum SecurityError {
    /// No radial, fault-clean, thermally dispatchable configuration exists.
    #[error("no feasible post-fault configuration{}", .contingency.as_deref().map(|c| format!(" for contingency `{c}`")).unwrap_or_default())]
    Infeasible { contingency: Option<String> },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("network is invalid ({0} violation(s)); run validation for details")]
    InvalidNetwork(usize),
    #[error("too many switchable devices for exhaustive search ({0} > {MAX_SWITCHABLE})")]
    TooManySwitches(usize),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// A credible single outage.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Contingency {
    pub id: String,
    pub kind: ContingencyKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContingencyKind {
    Source,
    Branch,
}

impl Contingency {
    pub fn source(id: impl Into<String>) -> Self {
        Contingency { id: id.into(), kind: ContingencyKind::Source }
    }

    pub fn branch(id: impl Into<String>) -> Self {
        Contingency { id: id.into(), kind: ContingencyKind::Branch }
    }

    /// The network with this outage applied: the source removed, or the
    /// branch taken out of service.
    pub fn apply(&self, net: &Network) -> Result<Network, SecurityError> {
        let mut out = net.clone();
        match self.kind {
            ContingencyKind::Source => {
                let idx = out
                    .sources
                    .iter()
                    .position(|s| s.id == self.id)
                    .ok_or_else(|| SecurityError::UnknownElement(self.id.clone()))?;
                out.sources.remove(idx);
            }
            ContingencyKind::Branch => {
                let br = out
                    .branches
                    .iter_mut()
                    .find(|b| b.id == self.id)
                    .ok_or_else(|| SecurityError::UnknownElement(self.id.clone()))?;
                br.in_service = false;
            }
        }
        Ok(out)
    }
}

/// The credible contingency set: every grid in-feed source (sorted by id),
/// then every in-service branch with both endpoints on substation busbars
/// (sorted by id). Feeder-level branches are excluded: their faults are
/// cleared locally and do not enter the N-1 screening.
pub fn enumerate_contingencies(net: &Network) -> Vec<Contingency> {
    let mut sources: Vec<&str> = net
        .sources
        .iter()
        .filter(|s| s.kind == SourceKind::GridInfeed)
        .map(|s| s.id.as_str())
        .collect();
    sources.sort_unstable();
    let mut branches: Vec<&str> = net
        .branches
        .iter()
        .filter(|b| {
            b.in_service
                && net.bus(&b.from_bus).map(|x| x.kind) == Some(BusKind::SubstationBusbar)
                && net.bus(&b.to_bus).map(|x| x.kind) == Some(BusKind::SubstationBusbar)
        })
        .map(|b| b.id.as_str())
        .collect();
    branches.sort_unstable();
    sources
        .into_iter()
        .map(Contingency::source)
        .chain(branches.into_iter().map(Contingency::branch))
        .collect()
}

/// An optimal converter dispatch for a fixed switch configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    /// Chosen set-point per device (every device with a positive converter
    /// rating appears; unusable converters are held at zero).
    pub set_points: BTreeMap<String, f64>,
    /// Sum of absolute set-points (MVA).
    pub total_usage: f64,
}

/// The best post-fault configuration found for one (outaged) network.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigurationPlan {
    /// Complete post-fault state: switch positions and optimized set-points.
    pub state: SwitchState,
    /// Demand left de-energized (MVA).
    pub unserved: f64,
    /// Devices whose switch position differs from normal, in id order.
    pub toggled: Vec<String>,
    /// `toggled.len()`: the number of switching operations.
    pub switch_operations: usize,
    /// `|set-point|` per device with a positive converter rating.
    pub converter_usage: BTreeMap<String, f64>,
    /// Sum of `converter_usage` values (MVA).
    pub total_converter_usage: f64,
}

/// Outcome of one contingency in a security report.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyOutcome {
    pub contingency: Contingency,
    pub plan: ReconfigurationPlan,
}

/// Result of assessing a contingency set.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityReport {
    pub outcomes: Vec<ContingencyOutcome>,
    /// Worst-case unserved demand across the set (MVA).
    pub shortfall: f64,
    /// Contingency attaining the shortfall (first of the maximal ones).
    pub worst: Option<String>,
    /// `shortfall` is zero (within tolerance).
    pub secure: bool,
}

// ---------------------------------------------------------------------------
// Converter dispatch
// ---------------------------------------------------------------------------

/// One decision variable of the dispatch problem.
#[derive(Debug)]
struct LpVar {
    device: String,
    rating: f64,
}

/// `|base + coef·s| <= limit` (checked with the global tolerance).
#[derive(Debug)]
struct LpCon {
    base: f64,
    coef: Vec<f64>,
    limit: f64,
}

fn con_value(con: &LpCon, s: &[f64]) -> f64 {
    con.base + con.coef.iter().zip(s).map(|(c, x)| c * x).sum::<f64>()
}

fn con_ok(con: &LpCon, s: &[f64]) -> bool {
    con_value(con, s).abs() <= con.limit + TOL
}

/// Assembles the dispatch problem for a radial state: flows are affine in the
/// set-points, with coefficients ±1 determined by which side of each tree
/// edge a converter terminal lies on.
fn assemble_lp(net: &Network, state: &SwitchState) -> (Vec<LpVar>, Vec<LpCon>) {
    // Base flows with every set-point at zero.
    let mut state0 = state.clone();
    for v in state0.set_points.values_mut() {
        *v = 0.0;
    }
    let sol0 = solve_flows(net, &state0).expect("caller ensures a radial, valid state");
    let partition = &sol0.partition;
    let trees = build_trees(net, state, partition);
    let energized = |bus: &str| {
        partition.island_of(bus).map(|k| partition.islands[k].energized) == Some(true)
    };

    // Decision variables: rated converters with both terminals energized and
    // the galvanic switch (if any) open. A closed hybrid's converter rides in
    // parallel with its own switch and cannot change any flow in a lossless
    // model, so it is held at zero — which is also usage-optimal.
    let mut devices: Vec<&crate::netmodel::Device> =
        net.devices.iter().filter(|d| d.converter_rating > 0.0).collect();
    devices.sort_by(|a, b| a.id.cmp(&b.id));
    let mut vars = Vec::new();
    let mut endpoints: Vec<(usize, usize)> = Vec::new(); // (from idx, to idx)
    for d in devices {
        let closed = d.kind.has_switch() && state.position_or_normal(d) == SwitchPos::Closed;
        if closed || !energized(&d.from_bus) || !energized(&d.to_bus) {
            continue;
        }
        let (Some(f), Some(t)) = (trees.bus_idx(&d.from_bus), trees.bus_idx(&d.to_bus)) else {
            continue;
        };
        vars.push(LpVar { device: d.id.clone(), rating: d.converter_rating });
        endpoints.push((f, t));
    }

    // Constraints: every tree-edge branch (|flow| ≤ rating) and every
    // energized island's in-feed (|supplied| ≤ capacity). Branches in dead
    // islands carry nothing and devices have no thermal rating.
    let mut cons: Vec<LpCon> = Vec::new();
    let mut branch_con: BTreeMap<usize, usize> = BTreeMap::new(); // branch idx -> con idx
    for (i, br) in net.branches.iter().enumerate() {
        if !state.service_or(br) {
            continue;
        }
        let in_tree = energized(&br.from_bus) && energized(&br.to_bus);
        if in_tree {
            branch_con.insert(i, cons.len());
            cons.push(LpCon {
                base: sol0.flows[&br.id],
                coef: vec![0.0; vars.len()],
                limit: br.rating,
            });
        }
    }
    let mut island_con: BTreeMap<usize, usize> = BTreeMap::new(); // island idx -> con idx
    for (k, island) in partition.islands.iter().enumerate() {
        if !island.energized {
            continue;
        }
        let infeed = &island.infeed_sources[0];
        let capacity = net.source(infeed).expect("in-feed exists").capacity;
        island_con.insert(k, cons.len());
        cons.push(LpCon {
            base: sol0.supplied[infeed],
            coef: vec![0.0; vars.len()],
            limit: capacity,
        });
    }

    // Coefficients. A set-point s adds +s to the effective load at the from
    // terminal and -s at the to terminal, so it raises the downstream flow of
    // every tree edge on the from terminal's root path (oriented from the
    // root) and lowers it along the to terminal's, shared prefixes cancelling.
    for (j, &(f_idx, t_idx)) in endpoints.iter().enumerate() {
        for (sign, bus_idx) in [(1.0, f_idx), (-1.0, t_idx)] {
            for (elem, child) in trees.path_from_root(bus_idx) {
                if let EdgeElem::Branch(k) = elem {
                    if let Some(&ci) = branch_con.get(&k) {
                        let br = &net.branches[k];
                        // The stored base is from→to oriented; flip the
                        // contribution when the tree child is the from side.
                        let orient =
                            if trees.bus_idx(&br.to_bus) == Some(child) { 1.0 } else { -1.0 };
                        cons[ci].coef[j] += sign * orient;
                    }
                }
            }
            let island = trees.island_of_bus[bus_idx];
            if let Some(&ci) = island_con.get(&island) {
                cons[ci].coef[j] += sign;
            }
        }
    }

    (vars, cons)
}

/// Minimizes total `Σ|s|` subject to the assembled constraints and the
/// per-variable rating boxes. Exact for zero, one or two variables (the
/// optimum of a piecewise-linear convex objective over a polygon lies on an
/// intersection of constraint boundaries, box edges and the axes); for three
/// or more variables a deterministic two-phase coordinate fixpoint is used,
/// which is a documented approximation.
fn lp_min_usage(vars: &[LpVar], cons: &[LpCon]) -> Option<Vec<f64>> {
    // Constraints no variable can influence must hold as-is.
    for con in cons {
        if con.coef.iter().all(|&c| c.abs() < 1e-12) && con.base.abs() > con.limit + TOL {
            return None;
        }
    }
    let active: Vec<usize> = (0..cons.len())
        .filter(|&i| cons[i].coef.iter().any(|&c| c.abs() >= 1e-12))
        .collect();

    let feasible = |s: &[f64]| -> bool {
        vars.iter().zip(s).all(|(v, x)| x.abs() <= v.rating + TOL)
            && active.iter().all(|&i| con_ok(&cons[i], s))
    };

    match vars.len() {
        0 => Some(Vec::new()),
        1 => {
            let r = vars[0].rating;
            let (mut lo, mut hi) = (-r, r);
            for &i in &active {
                let c = cons[i].coef[0];
                let (a, limit) = (cons[i].base, cons[i].limit);
                // -limit <= a + c s <= limit
                let (l, h) = ((-limit - a) / c, (limit - a) / c);
                let (l, h) = if c > 0.0 { (l, h) } else { (h, l) };
                lo = lo.max(l);
                hi = hi.min(h);
            }
            if lo > hi + TOL {
                return None;
            }
            let s = if lo <= 0.0 && 0.0 <= hi {
                0.0
            } else if lo > 0.0 {
                lo
            } else {
                hi
            };
            feasible(&[s]).then_some(vec![s])
        }
        2 => {
            // Boundary lines a1 s1 + a2 s2 = d of every constraint (both
            // signs), the two axes (objective kinks) and the box edges.
            let mut lines: Vec<(f64, f64, f64)> = Vec::new();
            for &i in &active {
                let (c1, c2) = (cons[i].coef[0], cons[i].coef[1]);
                for sgn in [1.0, -1.0] {
                    lines.push((c1, c2, sgn * cons[i].limit - cons[i].base));
                }
            }
            lines.push((1.0, 0.0, 0.0));
            lines.push((0.0, 1.0, 0.0));
            for sgn in [1.0, -1.0] {
                lines.push((1.0, 0.0, sgn * vars[0].rating));
                lines.push((0.0, 1.0, sgn * vars[1].rating));
            }
            let mut candidates: Vec<[f64; 2]> = vec![[0.0, 0.0]];
            for (i, &(a1, b1, d1)) in lines.iter().enumerate() {
                for &(a2, b2, d2) in &lines[i + 1..] {
                    let det = a1 * b2 - a2 * b1;
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let s1 = (d1 * b2 - d2 * b1) / det;
                    let s2 = (a1 * d2 - a2 * d1) / det;
                    // Clamp into the box to absorb floating-point fuzz on
                    // box-edge intersections.
                    candidates.push([
                        s1.clamp(-vars[0].rating, vars[0].rating),
                        s2.clamp(-vars[1].rating, vars[1].rating),
                    ]);
                }
            }
            let mut best: Option<[f64; 2]> = None;
            for cand in candidates {
                if !feasible(&cand) {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let (cu, bu) = (cand[0].abs() + cand[1].abs(), b[0].abs() + b[1].abs());
                        cu < bu - TOL
                            || (cu <= bu + TOL
                                && (cand[0].total_cmp(&b[0]).then(cand[1].total_cmp(&b[1])))
                                    .is_lt())
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
            best.map(|b| b.to_vec())
        }
        _ => lp_fixpoint(vars, cons, &active, &feasible),
    }
}

/// Two-phase deterministic coordinate fixpoint for three or more converters:
/// phase one drives total constraint violation to zero by exact line search
/// per coordinate, phase two shrinks each |s| while staying feasible. Both
/// phases cycle in variable order, so the result is reproducible; it may be
/// suboptimal in contrived geometries, which is acceptable for the intended
/// network sizes.
fn lp_fixpoint(
    vars: &[LpVar],
    cons: &[LpCon],
    active: &[usize],
    feasible: &dyn Fn(&[f64]) -> bool,
) -> Option<Vec<f64>> {
    let violation = |s: &[f64]| -> f64 {
        active
            .iter()
            .map(|&i| (con_value(&cons[i], s).abs() - cons[i].limit).max(0.0))
            .sum()
    };
    let mut s = vec![0.0; vars.len()];

    // Phase one: minimize total violation coordinate-wise. The per-coordinate
    // objective is convex piecewise linear; its breakpoints are where each
    // constraint crosses ±limit, so scanning breakpoints is exact.
    for _ in 0..200 {
        if violation(&s) <= TOL {
            break;
        }
        let mut moved = false;
        for j in 0..vars.len() {
            let r = vars[j].rating;
            let mut points = vec![-r, 0.0, r, s[j]];
            for &i in active {
                let c = cons[i].coef[j];
                if c.abs() < 1e-12 {
                    continue;
                }
                let rest: f64 = cons[i].base
                    + cons[i]
                        .coef
                        .iter()
                        .zip(&s)
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, (cc, xx))| cc * xx)
                        .sum::<f64>();
                for sgn in [1.0, -1.0] {
                    points.push(((sgn * cons[i].limit - rest) / c).clamp(-r, r));
                }
            }
            let eval = |x: f64| {
                let mut t = s.clone();
                t[j] = x;
                violation(&t)
            };
            let mut best_x = s[j];
            let mut best_v = eval(s[j]);
            for &x in &points {
                let v = eval(x);
                if v < best_v - 1e-15
                    || ((v - best_v).abs() <= 1e-15
                        && (x.abs() < best_x.abs() - 1e-15
                            || ((x.abs() - best_x.abs()).abs() <= 1e-15 && x < best_x)))
                {
                    best_v = v;
                    best_x = x;
                }
            }
            if (best_x - s[j]).abs() > 1e-12 {
                s[j] = best_x;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    if violation(&s) > TOL {
        return None;
    }

    // Phase two: shrink each coordinate toward zero, holding the others.
    for _ in 0..100 {
        let mut moved = false;
        for j in 0..vars.len() {
            let r = vars[j].rating;
            let (mut lo, mut hi) = (-r, r);
            for &i in active {
                let c = cons[i].coef[j];
                if c.abs() < 1e-12 {
                    continue;
                }
                let rest: f64 = cons[i].base
                    + cons[i]
                        .coef
                        .iter()
                        .zip(&s)
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, (cc, xx))| cc * xx)
                        .sum::<f64>();
                let (l, h) = ((-cons[i].limit - rest) / c, (cons[i].limit - rest) / c);
                let (l, h) = if c > 0.0 { (l, h) } else { (h, l) };
                lo = lo.max(l);
                hi = hi.min(h);
            }
            if lo > hi {
                continue; // numerically degenerate; keep the current value
            }
            let target = if lo <= 0.0 && 0.0 <= hi {
                0.0
            } else if lo > 0.0 {
                lo
            } else {
                hi
            };
            if (target - s[j]).abs() > 1e-12 {
                s[j] = target;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    feasible(&s).then_some(s)
}

/// Optimal dispatch for a fixed, already-screened radial state.
fn dispatch_core(net: &Network, state: &SwitchState) -> Option<Dispatch> {
    let (vars, cons) = assemble_lp(net, state);
    let solution = lp_min_usage(&vars, &cons)?;
    let mut set_points: BTreeMap<String, f64> = net
        .devices
        .iter()
        .filter(|d| d.converter_rating > 0.0)
        .map(|d| (d.id.clone(), 0.0))
        .collect();
    let mut total = 0.0;
    for (var, s) in vars.iter().zip(&solution) {
        set_points.insert(var.device.clone(), *s);
        total += s.abs();
    }
    Some(Dispatch { set_points, total_usage: total })
}

/// Finds an optimal converter dispatch for the given switch configuration,
/// or `Ok(None)` when the configuration is inoperable: not radial, in breach
/// of a fault-level limit (which no set-point can change), or thermally
/// infeasible for every dispatch. Set-points already present in `state` are
/// ignored — the dispatch is chosen from scratch.
pub fn feasible_dispatch(
    net: &Network,
    state: &SwitchState,
) -> Result<Option<Dispatch>, SecurityError> {
    state.validate(net).map_err(FlowError::from)?;
    if !net.is_radial(state) {
        return Ok(None);
    }
    if !net.fault_level_violations(state).is_empty() {
        return Ok(None);
    }
    Ok(dispatch_core(net, state))
}

fn unserved_demand(net: &Network, partition: &Partition) -> f64 {
    // `+ 0.0` keeps an empty sum at positive zero.
    net.demands
        .iter()
        .filter(|d| {
            partition.island_of(&d.bus).map(|k| partition.islands[k].energized) != Some(true)
        })
        .map(|d| d.magnitude)
        .sum::<f64>()
        + 0.0
}

fn fault_clean(net: &Network, partition: &Partition) -> bool {
    let levels: Vec<f64> = partition.islands.iter().map(|i| net.island_fault_level(i)).collect();
    net.buses.iter().all(|b| match (b.fault_level_limit, partition.island_of(&b.id)) {
        (Some(limit), Some(k)) => levels[k] <= limit + TOL,
        _ => true,
    })
}

/// Exhaustive search for the best post-fault configuration of `net` (usually
/// a network with a contingency already applied). See the module docs for the
/// objective and tie-breaking rules.
pub fn best_reconfiguration(net: &Network) -> Result<ReconfigurationPlan, SecurityError> {
    // Element-level soundness only: post-outage networks legitimately carry
    // de-energized demand, and a non-radial normal state is repaired by the
    // search itself.
    let structural: usize = net
        .validate()
        .violations
        .iter()
        .filter(|v| {
            !matches!(
                v.code,
                crate::netmodel::ViolationCode::NonRadialNormalState
                    | crate::netmodel::ViolationCode::DeEnergizedDemand
            )
        })
        .count();
    if structural > 0 {
        return Err(SecurityError::InvalidNetwork(structural));
    }

    let mut switchable: Vec<&crate::netmodel::Device> =
        net.devices.iter().filter(|d| d.kind.has_switch()).collect();
    switchable.sort_by(|a, b| a.id.cmp(&b.id));
    if switchable.len() > MAX_SWITCHABLE {
        return Err(SecurityError::TooManySwitches(switchable.len()));
    }

    let normal = net.normal_state();
    let mut best: Option<(f64, f64, usize, SwitchState, Dispatch, Vec<String>)> = None;
    for mask in 0u64..(1u64 << switchable.len()) {
        let mut state = normal.clone();
        let mut toggled = Vec::new();
        for (bit, dev) in switchable.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                let flipped = match dev.normal_state {
                    SwitchPos::Open => SwitchPos::Closed,
                    SwitchPos::Closed => SwitchPos::Open,
                };
                state.set_position(&dev.id, flipped);
                toggled.push(dev.id.clone());
            }
        }
        if !net.is_radial(&state) {
            continue;
        }
        let partition = net.energized_islands(&state);
        let unserved = unserved_demand(net, &partition);
        let ops = toggled.len();
        if let Some((bu, bg, bo, ..)) = &best {
            // Converters cannot re-energize an island, so configurations that
            // already shed more than the incumbent cannot win.
            if unserved > bu + TOL {
                continue;
            }
            // With equal unserved, zero usage and fewer-or-equal operations,
            // the incumbent cannot be beaten by this mask either.
            if (unserved - bu).abs() <= TOL && *bg <= TOL && *bo <= ops {
                continue;
            }
        }
        if !fault_clean(net, &partition) {
            continue;
        }
        let Some(dispatch) = dispatch_core(net, &state) else {
            continue;
        };
        let usage = dispatch.total_usage;
        let wins = match &best {
            None => true,
            Some((bu, bg, bo, ..)) => {
                if unserved < bu - TOL {
                    true
                } else if unserved > bu + TOL {
                    false
                } else if usage < bg - TOL {
                    true
                } else if usage > bg + TOL {
                    false
                } else {
                    ops < *bo
                }
            }
        };
        if wins {
            let perfect = unserved <= TOL && usage <= TOL && ops == 0;
            best = Some((unserved, usage, ops, state, dispatch, toggled));
            if perfect {
                break;
            }
        }
    }

    let (unserved, total_usage, ops, mut state, dispatch, toggled) =
        best.ok_or(SecurityError::Infeasible { contingency: None })?;
    for (dev, s) in &dispatch.set_points {
        state.set_set_point(dev, *s);
    }
    let converter_usage: BTreeMap<String, f64> =
        dispatch.set_points.iter().map(|(k, v)| (k.clone(), v.abs())).collect();
    Ok(ReconfigurationPlan {
        state,
        unserved,
        toggled,
        switch_operations: ops,
        converter_usage,
        total_converter_usage: total_usage,
    })
}

/// Assesses an explicit contingency set.
pub fn assess(net: &Network, contingencies: &[Contingency]) -> Result<SecurityReport, SecurityError> {
    let mut outcomes = Vec::with_capacity(contingencies.len());
    for c in contingencies {
        let outage = c.apply(net)?;
        let plan = best_reconfiguration(&outage).map_err(|e| match e {
            SecurityError::Infeasible { .. } => {
                SecurityError::Infeasible { contingency: Some(c.id.clone()) }
            }
            other => other,
        })?;
        outcomes.push(ContingencyOutcome { contingency: c.clone(), plan });
    }
    let mut shortfall = 0.0;
    let mut worst = None;
    for o in &outcomes {
        if o.plan.unserved > shortfall + TOL {
            shortfall = o.plan.unserved;
            worst = Some(o.contingency.id.clone());
        }
    }
    Ok(SecurityReport { outcomes, shortfall, worst, secure: shortfall <= TOL })
}

/// N-1 assessment over the full credible contingency set.
pub fn n_minus_one(net: &Network) -> Result<SecurityReport, SecurityError> {
    assess(net, &enumerate_contingencies(net))
}

/// The network with every demand magnitude multiplied by `scale`.
pub fn scale_demands(net: &Network, scale: f64) -> Network {
    let mut out = net.clone();
    for d in &mut out.demands {
        d.magnitude *= scale;
    }
    out
}

/// Worst-case N-1 unserved demand with demands uniformly scaled.
pub fn capacity_shortfall(net: &Network, scale: f64) -> Result<f64, SecurityError> {
    Ok(n_minus_one(&scale_demands(net, scale))?.shortfall)
}

/// Firm (N-1 secure) capacity of a network.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FirmCapacity {
    /// Largest total demand (MVA) servable after any single contingency.
    pub firm_mva: f64,
    /// The demand scale at which that occurs.
    pub scale: f64,
    /// Total demand of the unscaled network (MVA).
    pub base_total_demand: f64,
    /// No binding constraint was found (zero demand, or no credible
    /// contingency limits the network).
    pub unbounded: bool,
}

/// Firm capacity by bisection on a uniform demand scale. The interval is
/// narrowed until it pins the firm capacity to within 1e-6 MVA. An outage
/// with no feasible configuration at a given scale counts as insecure at that
/// scale.
pub fn firm_capacity(net: &Network) -> Result<FirmCapacity, SecurityError> {
    let total = net.total_demand();
    if total <= TOL {
        return Ok(FirmCapacity {
            firm_mva: f64::INFINITY,
            scale: f64::INFINITY,
            base_total_demand: total,
            unbounded: true,
        });
    }
    let secure_at = |scale: f64| -> Result<bool, SecurityError> {
        match n_minus_one(&scale_demands(net, scale)) {
            Ok(report) => Ok(report.secure),
            Err(SecurityError::Infeasible { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let mut hi = 1.0;
    let mut doublings = 0;
    while secure_at(hi)? {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Ok(FirmCapacity {
                firm_mva: f64::INFINITY,
                scale: f64::INFINITY,
                base_total_demand: total,
                unbounded: true,
            });
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    while (hi - lo) * total > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if secure_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FirmCapacity { firm_mva: lo * total, scale: lo, base_total_demand: total, unbounded: false })
}

// ---------------------------------------------------------------------------
// Use-case classification
// ---------------------------------------------------------------------------

/// Which converter use case dominates a contingency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UseCaseTag {
    /// Fault-level limits block an otherwise better galvanic reconfiguration;
    /// a converter tie helps because it adds no fault in-feed.
    FaultLevelConstrained,
    /// A converter at a multi-terminal tee lets one terminal support another
    /// without merging their feeders galvanically.
    MultiTerminalTee,
    /// Radiality or a lumped load blocks galvanic transfer; a converter moves
    /// power without closing a loop.
    RadialityLumpedLoad,
    /// No probe improved on the baseline plan.
    Unclassifiable,
}

impl std::fmt::Display for UseCaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UseCaseTag::FaultLevelConstrained => "fault-level-constrained",
            UseCaseTag::MultiTerminalTee => "multi-terminal-tee",
            UseCaseTag::RadialityLumpedLoad => "radiality-lumped-load",
            UseCaseTag::Unclassifiable => "unclassifiable",
        })
    }
}

/// Classification of one contingency, with the evidence that produced it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UseCase {
    pub contingency: String,
    pub tag: UseCaseTag,
    /// Buses (fault-level case) or devices (other cases) that demonstrate
    /// the classification.
    pub evidence: Vec<String>,
    pub baseline_unserved: f64,
    pub baseline_usage: f64,
    pub detail: String,
}

fn strictly_better(candidate: (f64, f64), baseline: (f64, f64)) -> bool {
    candidate.0 < baseline.0 - TOL
        || ((candidate.0 - baseline.0).abs() <= TOL && candidate.1 < baseline.1 - TOL)
}

fn plan_metrics(net: &Network) -> Option<(f64, f64)> {
    best_reconfiguration(net).ok().map(|p| (p.unserved, p.total_converter_usage))
}

/// Diagnoses why the baseline plan for `contingency` falls short, by probing
/// counterfactuals in a fixed order: first lifting fault-level limits, then
/// granting each open/closed point an amply rated converter. The first probe
/// family that strictly improves the (unserved, usage) objective names the
/// use case.
pub fn classify_use_case(
    net: &Network,
    contingency: &Contingency,
) -> Result<UseCase, SecurityError> {
    let outage = contingency.apply(net)?;
    let base_plan = best_reconfiguration(&outage).map_err(|e| match e {
        SecurityError::Infeasible { .. } => {
            SecurityError::Infeasible { contingency: Some(contingency.id.clone()) }
        }
        other => other,
    })?;
    let baseline = (base_plan.unserved, base_plan.total_converter_usage);

    // Probe one: lift fault-level limits.
    let limited: Vec<String> = net
        .buses
        .iter()
        .filter(|b| b.fault_level_limit.is_some())
        .map(|b| b.id.clone())
        .collect();
    if !limited.is_empty() {
        let mut relaxed = outage.clone();
        for b in &mut relaxed.buses {
            b.fault_level_limit = None;
        }
        if let Some(m) = plan_metrics(&relaxed) {
            if strictly_better(m, baseline) {
                // Refine: which individual limits matter?
                let mut evidence = Vec::new();
                for bus in &limited {
                    let mut one = outage.clone();
                    for b in &mut one.buses {
                        if &b.id == bus {
                            b.fault_level_limit = None;
                        }
                    }
                    if plan_metrics(&one).is_some_and(|mm| strictly_better(mm, baseline)) {
                        evidence.push(bus.clone());
                    }
                }
                if evidence.is_empty() {
                    evidence = limited;
                }
                return Ok(UseCase {
                    contingency: contingency.id.clone(),
                    tag: UseCaseTag::FaultLevelConstrained,
                    detail: format!(
                        "lifting fault-level limits improves the plan from \
                         {:.6} MVA unserved / {:.6} MVA usage to {:.6} / {:.6}",
                        baseline.0, baseline.1, m.0, m.1
                    ),
                    evidence,
                    baseline_unserved: baseline.0,
                    baseline_usage: baseline.1,
                });
            }
        }
    }

    // Probe two: grant each open/closed point an amply rated converter.
    let grant_rating = net.total_demand() + 1.0;
    let mut improving = Vec::new();
    for dev in &net.devices {
        let upgraded_kind = match dev.kind {
            DeviceKind::Nop => DeviceKind::Hop1,
            DeviceKind::Ncp => DeviceKind::Hop2,
            _ => continue,
        };
        let mut granted = outage.clone();
        let d = granted.devices.iter_mut().find(|x| x.id == dev.id).expect("device exists");
        d.kind = upgraded_kind;
        d.converter_rating = grant_rating;
        if plan_metrics(&granted).is_some_and(|m| strictly_better(m, baseline)) {
            improving.push(dev.id.clone());
        }
    }
    improving.sort_unstable();

    let touches_tee = |dev_id: &str| {
        net.device(dev_id).is_some_and(|d| {
            [&d.from_bus, &d.to_bus]
                .iter()
                .any(|b| net.bus(b).map(|x| x.kind) == Some(BusKind::TeePoint))
        })
    };
    let tee_devices: Vec<String> =
        improving.iter().filter(|d| touches_tee(d)).cloned().collect();
    if !tee_devices.is_empty() {
        return Ok(UseCase {
            contingency: contingency.id.clone(),
            tag: UseCaseTag::MultiTerminalTee,
            detail: format!(
                "a converter at a tee-point tie ({}) improves the plan",
                tee_devices.join(", ")
            ),
            evidence: tee_devices,
            baseline_unserved: baseline.0,
            baseline_usage: baseline.1,
        });
    }
    if !improving.is_empty() {
        return Ok(UseCase {
            contingency: contingency.id.clone(),
            tag: UseCaseTag::RadialityLumpedLoad,
            detail: format!(
                "a converter tie ({}) moves power where galvanic reconfiguration \
                 is blocked by radiality or a lumped load",
                improving.join(", ")
            ),
            evidence: improving,
            baseline_unserved: baseline.0,
            baseline_usage: baseline.1,
        });
    }
    Ok(UseCase {
        contingency: contingency.id.clone(),
        tag: UseCaseTag::Unclassifiable,
        detail: "no probed counterfactual improves on the baseline plan".to_string(),
        evidence: Vec::new(),
        baseline_unserved: baseline.0,
        baseline_usage: baseline.1,
    })
}
