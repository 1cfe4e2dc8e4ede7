//! Bundled example networks and seeded random generators.
//!
//! The bundled documents are small, fully worked planning cases that the CLI
//! can write out as starter files (`gridhop fixtures`). The random generators
//! produce valid radial networks from a seed, deterministically, for
//! randomized testing: `random_network` grows an arbitrary multi-substation
//! system, `random_sizing_case` draws a two-substation case whose optimal
//! hybrid and soft converter ratings are known in closed form.

use std::collections::BTreeSet;

use crate::doc::NetworkDocument;
use crate::econ::EconParams;
use crate::netmodel::{
    Branch, Bus, BusKind, Demand, Device, DeviceKind, Network, Source, SourceKind,
};

// ---------------------------------------------------------------------------
// element shorthands
// ---------------------------------------------------------------------------

fn bus(id: &str, kind: BusKind) -> Bus {
    Bus { id: id.to_string(), kind, fault_level_limit: None, provenance: None }
}

fn bus_limited(id: &str, kind: BusKind, limit: f64) -> Bus {
    Bus { id: id.to_string(), kind, fault_level_limit: Some(limit), provenance: None }
}

fn infeed(id: &str, at: &str, capacity: f64) -> Source {
    Source {
        id: id.to_string(),
        bus: at.to_string(),
        kind: SourceKind::GridInfeed,
        capacity,
        fault_contribution: 0.0,
        provenance: None,
    }
}

fn infeed_fault(id: &str, at: &str, capacity: f64, fault: f64) -> Source {
    Source { fault_contribution: fault, ..infeed(id, at, capacity) }
}

fn dg(id: &str, at: &str, capacity: f64, fault: f64) -> Source {
    Source {
        id: id.to_string(),
        bus: at.to_string(),
        kind: SourceKind::Dg,
        capacity,
        fault_contribution: fault,
        provenance: None,
    }
}

fn branch(id: &str, from: &str, to: &str, rating: f64) -> Branch {
    Branch {
        id: id.to_string(),
        from_bus: from.to_string(),
        to_bus: to.to_string(),
        rating,
        in_service: true,
        provenance: None,
    }
}

fn demand(id: &str, at: &str, magnitude: f64) -> Demand {
    Demand { id: id.to_string(), bus: at.to_string(), magnitude, provenance: None }
}

fn device(id: &str, kind: DeviceKind, from: &str, to: &str) -> Device {
    Device {
        id: id.to_string(),
        kind,
        from_bus: from.to_string(),
        to_bus: to.to_string(),
        normal_state: kind.required_normal(),
        converter_rating: 0.0,
        group: None,
        provenance: None,
    }
}

fn converter(id: &str, kind: DeviceKind, from: &str, to: &str, rating: f64) -> Device {
    Device { converter_rating: rating, ..device(id, kind, from, to) }
}

fn assert_valid(net: &Network, what: &str) {
    let report = net.validate();
    assert!(report.is_ok(), "{what} fixture must be valid: {:?}", report.violations);
}

// ---------------------------------------------------------------------------
// bundled documents
// ---------------------------------------------------------------------------

/// Two double-circuit substations joined by a feeder tie. With the 2033 base
/// demands the loss of one infeed leaves 0.9 MVA unservable; the 2030
/// scenario is still fully secure.
pub fn haxby() -> NetworkDocument {
    let net = Network {
        buses: vec![
            bus("busA1", BusKind::SubstationBusbar),
            bus("busA2", BusKind::SubstationBusbar),
            bus("busB1", BusKind::SubstationBusbar),
            bus("busB2", BusKind::SubstationBusbar),
            bus("x0", BusKind::FeederNode),
            bus("a0", BusKind::FeederNode),
            bus("a1", BusKind::FeederNode),
            bus("a2", BusKind::FeederNode),
            bus("b3", BusKind::FeederNode),
        ],
        sources: vec![
            infeed("srcA1", "busA1", 15.0),
            infeed("srcA2", "busA2", 15.0),
            infeed("srcB1", "busB1", 24.0),
            infeed("srcB2", "busB2", 24.0),
        ],
        branches: vec![
            branch("fdr-a0", "busA1", "x0", 5.5),
            branch("cable-b3", "busB1", "b3", 5.5),
        ],
        demands: vec![
            demand("d-a0", "a0", 0.8),
            Demand {
                provenance: Some("estimated from feeder totals".to_string()),
                ..demand("d-a1", "a1", 15.0)
            },
            Demand {
                provenance: Some("estimated from feeder totals".to_string()),
                ..demand("d-a2", "a2", 0.9)
            },
            demand("d-b3", "b3", 0.6),
        ],
        devices: vec![
            device("bs-a", DeviceKind::Nop, "busA1", "busA2"),
            device("bs-b", DeviceKind::Nop, "busB1", "busB2"),
            device("ncp-a", DeviceKind::Ncp, "a0", "x0"),
            device("bk-a1", DeviceKind::Ncp, "busA2", "a1"),
            device("bk-a2", DeviceKind::Ncp, "busA1", "a2"),
            device("nop-ab", DeviceKind::Nop, "b3", "a0"),
        ],
    };
    assert_valid(&net, "haxby");
    let mut doc = NetworkDocument::from_network(&net);
    doc.name = Some("haxby".to_string());
    doc.description = Some(
        "Two double-circuit substations with an interconnecting feeder tie. Base demands \
         are the 2033 projection; the 2030 scenario keeps the network fully N-1 secure."
            .to_string(),
    );
    doc.demand_scenarios.insert(
        "2030".to_string(),
        [("d-a1".to_string(), 11.6)].into_iter().collect(),
    );
    doc.econ = Some(EconParams {
        discount_rate: Some(0.0325),
        horizon_years: Some(10),
        annual_benefit: None,
        deferral_years: Some(5),
    });
    doc
}

/// Two-substation sizing example: a hybrid at the normally closed point needs
/// only the 0.5 MVA headroom gap, while a soft open point at the tie must
/// also carry the 2.0 MVA feeder block the hybrid transfers for free.
pub fn transfer_sizing() -> NetworkDocument {
    let net = Network {
        buses: vec![
            bus("busA1", BusKind::SubstationBusbar),
            bus("busA2", BusKind::SubstationBusbar),
            bus("busB", BusKind::SubstationBusbar),
            bus("x0", BusKind::FeederNode),
            bus("a0", BusKind::FeederNode),
            bus("a1", BusKind::FeederNode),
            bus("a2", BusKind::FeederNode),
            bus("b0", BusKind::FeederNode),
        ],
        sources: vec![
            infeed("srcA1", "busA1", 10.0),
            infeed("srcA2", "busA2", 10.0),
            infeed("srcB", "busB", 12.0),
        ],
        branches: vec![
            branch("fdr-a0", "busA1", "x0", 6.0),
            branch("cable", "busB", "b0", 6.0),
        ],
        demands: vec![
            demand("d-a0", "a0", 2.0),
            demand("d-a1", "a1", 8.0),
            demand("d-a2", "a2", 2.5),
        ],
        devices: vec![
            device("bs-a", DeviceKind::Nop, "busA1", "busA2"),
            device("ncp-a", DeviceKind::Ncp, "a0", "x0"),
            device("bk-a1", DeviceKind::Ncp, "busA2", "a1"),
            device("bk-a2", DeviceKind::Ncp, "busA1", "a2"),
            device("nop-ab", DeviceKind::Nop, "b0", "a0"),
        ],
    };
    assert_valid(&net, "transfer-sizing");
    let mut doc = NetworkDocument::from_network(&net);
    doc.name = Some("transfer-sizing".to_string());
    doc.description = Some(
        "Converter sizing example: losing one infeed overloads the survivor by 2.5 MVA, \
         of which 2.0 MVA is a feeder block a galvanic switch can transfer."
            .to_string(),
    );
    doc
}

/// `transfer_sizing` with the demands moved so firm capacity lands exactly on 10.0 MVA;
/// adding a 0.9 MVA converter at `ncp-a` raises it to exactly 10.9 MVA.
pub fn transfer_sizing_firm() -> NetworkDocument {
    let mut doc = transfer_sizing();
    doc.name = Some("transfer-sizing-firm".to_string());
    doc.description = Some(
        "Firm-capacity variant: demand sits on the transferable feeder's neighbours, so \
         firm capacity rises one-for-one with a converter at the normally closed point."
            .to_string(),
    );
    doc.network.demands = vec![
        crate::doc::DemandSpec {
            id: "d-a1".to_string(),
            bus: "a1".to_string(),
            magnitude: 9.5,
            provenance: None,
        },
        crate::doc::DemandSpec {
            id: "d-a2".to_string(),
            bus: "a2".to_string(),
            magnitude: 1.0,
            provenance: None,
        },
    ];
    assert_valid(&doc.to_network().expect("variant instantiates"), "transfer-sizing-firm");
    doc
}

/// `transfer_sizing_firm` with a 0.9 MVA hybrid installed at `ncp-a`.
pub fn transfer_sizing_firm_hop() -> NetworkDocument {
    let mut doc = transfer_sizing_firm();
    doc.name = Some("transfer-sizing-firm-hop".to_string());
    let ncp = doc
        .network
        .devices
        .iter_mut()
        .find(|d| d.id == "ncp-a")
        .expect("variant has ncp-a");
    ncp.kind = DeviceKind::Hop2;
    ncp.converter_rating = 0.9;
    assert_valid(&doc.to_network().expect("variant instantiates"), "transfer-sizing-firm-hop");
    doc
}

/// Fault-level-constrained example: a fault-level ceiling at one substation
/// blocks the otherwise natural backfeed, and only opening the point next to
/// the embedded generator restores it.
pub fn fault_limited() -> NetworkDocument {
    let net = Network {
        buses: vec![
            bus("busA1", BusKind::SubstationBusbar),
            bus("busA2", BusKind::SubstationBusbar),
            bus_limited("busB", BusKind::SubstationBusbar, 250.0),
            bus("g", BusKind::FeederNode),
            bus("mid", BusKind::FeederNode),
            bus("b0", BusKind::FeederNode),
            bus("a1", BusKind::FeederNode),
            bus("a2", BusKind::FeederNode),
        ],
        sources: vec![
            infeed_fault("srcA1", "busA1", 10.0, 240.0),
            infeed_fault("srcA2", "busA2", 10.0, 240.0),
            infeed_fault("srcB", "busB", 12.0, 200.0),
            dg("dg-unit", "g", 1.0, 60.0),
        ],
        branches: vec![branch("cable", "busB", "b0", 5.0)],
        demands: vec![
            demand("d-a1", "a1", 10.0),
            demand("d-a2", "a2", 1.0),
            demand("d-mid", "mid", 1.5),
        ],
        devices: vec![
            device("bs-a", DeviceKind::Nop, "busA1", "busA2"),
            device("bk-a1", DeviceKind::Ncp, "busA2", "a1"),
            device("bk-a2", DeviceKind::Ncp, "busA1", "a2"),
            device("ncp-a", DeviceKind::Ncp, "busA1", "g"),
            device("ncp-dg", DeviceKind::Ncp, "mid", "g"),
            device("nop-ab", DeviceKind::Nop, "b0", "mid"),
        ],
    };
    assert_valid(&net, "fault-limited");
    let mut doc = NetworkDocument::from_network(&net);
    doc.name = Some("fault-limited".to_string());
    doc.description = Some(
        "A substation with a fault-level ceiling next to a feeder hosting embedded \
         generation: backfeeding over the tie drags the generator's fault in-feed along \
         unless the point beside it is opened, stranding demand."
            .to_string(),
    );
    doc
}

/// Teed (multi-terminal) example: three substations meet at a tee-point, and
/// a fourth is fed over an HV circuit that is itself an outage candidate.
pub fn meshed_tee() -> NetworkDocument {
    let net = Network {
        buses: vec![
            bus("busC", BusKind::SubstationBusbar),
            bus("busD", BusKind::SubstationBusbar),
            bus("busE", BusKind::SubstationBusbar),
            bus("busI", BusKind::SubstationBusbar),
            bus("T", BusKind::TeePoint),
            bus("nH", BusKind::FeederNode),
        ],
        sources: vec![
            infeed("srcC", "busC", 10.0),
            infeed("srcD", "busD", 10.0),
            infeed("srcE", "busE", 10.0),
        ],
        branches: vec![branch("hv-di", "busD", "busI", 5.0)],
        demands: vec![
            demand("dC", "busC", 4.0),
            demand("dD", "busD", 4.0),
            demand("dE", "busE", 4.0),
            demand("dI", "busI", 1.5),
            demand("dH", "nH", 1.5),
        ],
        devices: vec![
            device("ncp-i", DeviceKind::Ncp, "busI", "T"),
            device("ncp-ii", DeviceKind::Ncp, "T", "nH"),
            device("nop-c", DeviceKind::Nop, "busC", "T"),
            device("nop-d", DeviceKind::Nop, "busD", "nH"),
            device("nop-e", DeviceKind::Nop, "busE", "T"),
        ],
    };
    assert_valid(&net, "meshed-tee");
    let mut doc = NetworkDocument::from_network(&net);
    doc.name = Some("meshed-tee".to_string());
    doc.description = Some(
        "Three substations tied at a tee-point plus a fourth fed over an outage-prone HV \
         circuit. Switching alone cannot cover the loss of the central infeed; a \
         converter on either tee leg can."
            .to_string(),
    );
    doc
}

/// A single demand group fed by a two-circuit substation: the textbook case
/// whose firm capacity equals one circuit's capacity.
pub fn two_circuit_substation() -> NetworkDocument {
    let net = Network {
        buses: vec![
            bus("busM1", BusKind::SubstationBusbar),
            bus("busM2", BusKind::SubstationBusbar),
            bus("f1", BusKind::FeederNode),
        ],
        sources: vec![infeed("srcT1", "busM1", 10.0), infeed("srcT2", "busM2", 10.0)],
        branches: vec![branch("fdr", "busM1", "f1", 20.0)],
        demands: vec![demand("d1", "f1", 8.0)],
        devices: vec![device("bs-m", DeviceKind::Nop, "busM1", "busM2")],
    };
    assert_valid(&net, "two-circuit");
    let mut doc = NetworkDocument::from_network(&net);
    doc.name = Some("two-circuit".to_string());
    doc.description = Some(
        "A two-circuit substation feeding one demand group; its firm capacity is the \
         capacity of a single circuit."
            .to_string(),
    );
    doc
}

/// The bundled documents with the file names the `fixtures` command writes.
pub fn bundled() -> Vec<(&'static str, NetworkDocument)> {
    vec![
        ("haxby.json", haxby()),
        ("transfer-sizing.json", transfer_sizing()),
        ("transfer-sizing-firm.json", transfer_sizing_firm()),
        ("fault-limited.json", fault_limited()),
        ("meshed-tee.json", meshed_tee()),
        ("two-circuit.json", two_circuit_substation()),
    ]
}

// ---------------------------------------------------------------------------
// seeded random networks
// ---------------------------------------------------------------------------

/// Minimal xorshift64* generator so fixture generation needs no external
/// randomness and a seed pins the network exactly.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Grows a valid radial network from a seed: two or three substations, a
/// handful of feeder buses attached by branches or sectionalizers, open ties
/// (occasionally converter-equipped), sometimes a sourceless substation fed
/// over an HV circuit. Ratings and capacities are assigned after the fact
/// with generous margins, so the normal state is always clean; fault-level
/// limits, when present, sit above the normal-state level.
pub fn random_network(seed: u64) -> Network {
    let mut rng = Rng::new(seed);
    let mut net = Network::default();

    let n_sub = 2 + rng.below(2);
    for i in 0..n_sub {
        let id = format!("s{i}");
        net.buses.push(bus(&id, BusKind::SubstationBusbar));
        net.sources.push(Source {
            fault_contribution: rng.range(80.0, 140.0),
            ..infeed(&format!("src{i}"), &id, 1e9)
        });
    }

    // A dead subtree can never host demand: track buses with no normal-state
    // supply path so demands stay energized.
    let mut dead: BTreeSet<String> = BTreeSet::new();
    if rng.chance(0.3) {
        net.buses.push(bus("sx", BusKind::SubstationBusbar));
        net.branches.push(branch("hv0", "s0", "sx", 1e9));
        dead.insert("sx".to_string());
    }

    let n_feeder = 2 + rng.below(5);
    let mut switches = 0usize;
    for j in 0..n_feeder {
        let attach = net.buses[rng.below(net.buses.len())].id.clone();
        let id = format!("f{j}");
        net.buses.push(bus(&id, BusKind::FeederNode));
        if dead.contains(&attach) {
            dead.insert(id.clone());
        }
        if switches < 4 && rng.chance(0.3) {
            net.devices.push(device(&format!("sw{j}"), DeviceKind::Ncp, &attach, &id));
            switches += 1;
        } else {
            net.branches.push(branch(&format!("br{j}"), &attach, &id, 1e9));
        }
        if !dead.contains(&id) && rng.chance(0.7) {
            net.demands.push(demand(&format!("d{j}"), &id, rng.range(0.5, 3.5)));
        }
    }

    let n_tie = 1 + rng.below(3);
    let mut converters = 0usize;
    for t in 0..n_tie {
        let a = rng.below(net.buses.len());
        let mut b = rng.below(net.buses.len());
        if a == b {
            b = (b + 1) % net.buses.len();
        }
        let from = net.buses[a].id.clone();
        let to = net.buses[b].id.clone();
        if converters < 2 && rng.chance(0.35) {
            net.devices.push(converter(
                &format!("tie{t}"),
                DeviceKind::Sop,
                &from,
                &to,
                rng.range(0.5, 2.5),
            ));
            converters += 1;
        } else {
            net.devices.push(device(&format!("tie{t}"), DeviceKind::Nop, &from, &to));
        }
    }

    if converters < 2 && rng.chance(0.3) {
        if let Some(d) = net.devices.iter_mut().find(|d| d.kind == DeviceKind::Ncp) {
            d.kind = DeviceKind::Hop2;
            d.converter_rating = rng.range(0.5, 2.5);
        }
    }

    // Size branches and sources off the provisional solution.
    let state = net.normal_state();
    let solution =
        crate::balance::solve_flows(&net, &state).expect("provisional generated network solves");
    for br in &mut net.branches {
        let flow = solution.flows.get(&br.id).copied().unwrap_or(0.0).abs();
        br.rating = flow * rng.range(1.2, 2.2) + 0.25;
    }
    for src in &mut net.sources {
        let supplied = solution.supplied.get(&src.id).copied().unwrap_or(0.0).max(0.0);
        src.capacity = supplied * rng.range(1.15, 1.9) + 1.0;
    }

    let partition = net.energized_islands(&state);
    let mut fault_at = std::collections::BTreeMap::new();
    for island in &partition.islands {
        let level = net.island_fault_level(island);
        for b in &island.buses {
            fault_at.insert(b.clone(), level);
        }
    }
    for b in &mut net.buses {
        if b.kind == BusKind::SubstationBusbar && rng.chance(0.3) {
            let level = fault_at.get(&b.id).copied().unwrap_or(0.0);
            b.fault_level_limit = Some(level * rng.range(1.25, 1.8) + 10.0);
        }
    }

    let report = net.validate();
    assert!(report.is_ok(), "seed {seed} generated an invalid network: {:?}", report.violations);
    net
}

/// A random sizing case with a known answer.
#[derive(Debug, Clone)]
pub struct SizingCase {
    pub network: Network,
    /// Headroom gap (MVA) a converter must cover after the switch transfer:
    /// the optimal hybrid rating.
    pub converter_headroom: f64,
    /// Demand block (MVA) the hybrid's galvanic switch re-zones for free; the
    /// optimal soft-open-point rating is `converter_headroom +
    /// transferred_demand`.
    pub transferred_demand: f64,
    /// Normally closed point where the hybrid candidate sits.
    pub hop_placement: &'static str,
    /// Normally open tie where the soft-open-point candidate sits.
    pub sop_placement: &'static str,
}

/// Draws a two-substation network in which, after the worst infeed loss, the
/// surviving circuit is over capacity by exactly `headroom + transferred`:
/// opening `ncp-a` re-zones the `transferred` block over the tie, so a hybrid
/// there needs exactly `headroom`, while a soft open point at the tie must
/// carry both.
pub fn random_sizing_case(seed: u64) -> SizingCase {
    let mut rng = Rng::new(seed ^ 0xE1_71CA5E);
    let c1 = rng.range(8.0, 12.0);
    let a2 = rng.range(0.5, 2.0);
    let g = rng.range(0.05, a2);
    let d = rng.range(0.5, 3.0);
    let m = c1 + g - a2;
    // Ample: substation A2 can absorb the whole network after losing A1, so
    // the A2 loss (which strands `m` on circuit 1) is the binding contingency
    // for both candidate devices.
    let c2 = m + a2 + d + rng.range(0.3, 1.0);
    let cb = m + a2 + d + 5.0;
    let ample = m + a2 + d + 5.0;

    let net = Network {
        buses: vec![
            bus("busA1", BusKind::SubstationBusbar),
            bus("busA2", BusKind::SubstationBusbar),
            bus("busB", BusKind::SubstationBusbar),
            bus("x0", BusKind::FeederNode),
            bus("a0", BusKind::FeederNode),
            bus("a1", BusKind::FeederNode),
            bus("a2", BusKind::FeederNode),
            bus("b0", BusKind::FeederNode),
        ],
        sources: vec![
            infeed("srcA1", "busA1", c1),
            infeed("srcA2", "busA2", c2),
            infeed("srcB", "busB", cb),
        ],
        branches: vec![
            branch("fdr-a0", "busA1", "x0", ample),
            branch("cable", "busB", "b0", ample),
        ],
        demands: vec![
            demand("d-a0", "a0", d),
            demand("d-a1", "a1", m),
            demand("d-a2", "a2", a2),
        ],
        devices: vec![
            device("bs-a", DeviceKind::Nop, "busA1", "busA2"),
            device("ncp-a", DeviceKind::Ncp, "a0", "x0"),
            device("bk-a1", DeviceKind::Ncp, "busA2", "a1"),
            device("bk-a2", DeviceKind::Ncp, "busA1", "a2"),
            device("nop-ab", DeviceKind::Nop, "b0", "a0"),
        ],
    };
    let report = net.validate();
    assert!(report.is_ok(), "seed {seed} drew an invalid sizing case: {:?}", report.violations);
    SizingCase {
        network: net,
        converter_headroom: g,
        transferred_demand: d,
        hop_placement: "ncp-a",
        sop_placement: "nop-ab",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::parse;

    #[test]
    fn bundled_documents_validate_and_round_trip() {
        for (file, doc) in bundled() {
            let net = doc.to_network().unwrap_or_else(|e| panic!("{file}: {e}"));
            assert!(net.validate().is_ok(), "{file} must instantiate to a valid network");
            let again = parse(&doc.to_json_pretty()).unwrap_or_else(|e| panic!("{file}: {e}"));
            assert_eq!(doc, again, "{file} must survive a JSON round trip");
        }
    }

    #[test]
    fn haxby_scenario_and_econ_are_present() {
        let doc = haxby();
        let base = doc.network_for_scenario(None).unwrap();
        let yr2030 = doc.network_for_scenario(Some("2030")).unwrap();
        assert_eq!(base.total_demand(), 0.8 + 15.0 + 0.9 + 0.6);
        assert_eq!(yr2030.total_demand(), 0.8 + 11.6 + 0.9 + 0.6);
        assert_eq!(doc.econ.as_ref().unwrap().deferral_years, Some(5));
    }

    #[test]
    fn random_networks_are_valid_and_deterministic() {
        for seed in 0..200 {
            let net = random_network(seed);
            assert!(net.validate().is_ok(), "seed {seed}");
            assert!(
                net.devices.iter().filter(|d| d.kind.has_switch()).count() <= 8,
                "seed {seed} exceeds the intended switch budget"
            );
        }
        assert_eq!(random_network(42), random_network(42));
        assert_eq!(random_sizing_case(42).network, random_sizing_case(42).network);
    }

    #[test]
    fn sizing_cases_are_clean_under_normal_operation() {
        for seed in 0..20 {
            let inst = random_sizing_case(seed);
            let net = &inst.network;
            let state = net.normal_state();
            let solution = crate::balance::solve_flows(net, &state).unwrap();
            assert!(crate::balance::thermal_violations(net, &solution).is_empty());
            assert!(inst.converter_headroom > 0.0);
            assert!(inst.transferred_demand > 0.0);
        }
    }
}
