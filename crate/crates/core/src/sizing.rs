//! Converter sizing: the smallest rating that exhausts a device's ability to
//! reduce the N-1 capacity shortfall, and side-by-side comparison of
//! alternative technologies at candidate placements.

use thiserror::Error;

use crate::netmodel::{DeviceKind, Network, SwitchPos};
use crate::security::{capacity_shortfall, SecurityError};
use crate::TOL;

/// Bracket width (MVA) to which required ratings are resolved.
pub const RATING_RESOLUTION: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("device `{device}` is a {existing} and cannot be upgraded to a {requested}")]
    IncompatiblePlacement { device: String, existing: DeviceKind, requested: DeviceKind },
    #[error("rating ratio is undefined for non-positive or non-finite inputs")]
    DegenerateInput,
    #[error(transparent)]
    Security(#[from] SecurityError),
}

/// Result of sizing one device upgrade.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SizingOutcome {
    /// Id of the upgraded device.
    pub placement: String,
    /// Technology installed at the placement.
    pub kind: DeviceKind,
    /// Smallest converter rating (MVA) achieving the device's full shortfall
    /// reduction, to within [`RATING_RESOLUTION`].
    pub required_rating: f64,
    /// Shortfall (MVA) that remains even with an unlimited rating — the point
    /// of diminishing returns for this placement.
    pub residual_shortfall: f64,
    /// N-1 capacity shortfall (MVA) of the unmodified network.
    pub baseline_shortfall: f64,
}

/// The converter-rating ratio between a hybrid open point and the equivalent
/// soft open point: `h / (h + d)`, where `h` is the headroom the converter
/// must cover and `d` the demand the galvanic switch transfers for free.
pub fn rating_ratio(headroom: f64, transferred_demand: f64) -> Result<f64, SizingError> {
    if !headroom.is_finite()
        || !transferred_demand.is_finite()
        || headroom < 0.0
        || transferred_demand < 0.0
        || headroom + transferred_demand <= 0.0
    {
        return Err(SizingError::DegenerateInput);
    }
    Ok(headroom / (headroom + transferred_demand))
}

fn check_compatible(existing: DeviceKind, requested: DeviceKind) -> bool {
    matches!(
        (existing, requested),
        (DeviceKind::Nop, DeviceKind::Hop1)
            | (DeviceKind::Nop, DeviceKind::Sop)
            | (DeviceKind::Ncp, DeviceKind::Hop2)
    )
}

/// The network with `device` upgraded to `kind` at converter rating `r`.
/// A soft open point of rating zero degenerates to no device at all (it has
/// no switch and a dead converter), which keeps the rating sweep continuous.
fn upgraded(net: &Network, device: &str, kind: DeviceKind, r: f64) -> Network {
    let mut out = net.clone();
    if kind == DeviceKind::Sop && r <= 0.0 {
        out.devices.retain(|d| d.id != device);
        return out;
    }
    let d = out.devices.iter_mut().find(|d| d.id == device).expect("checked by caller");
    d.kind = kind;
    d.converter_rating = r;
    d.normal_state = kind.required_normal();
    out
}

/// Sizes the converter for upgrading `device` to `kind`.
///
/// The shortfall is non-increasing in the rating, so the smallest rating
/// whose shortfall matches the unlimited-rating shortfall (`target`) is found
/// by bisection on `[0, total demand]`.
pub fn size_device(
    net: &Network,
    device: &str,
    kind: DeviceKind,
) -> Result<SizingOutcome, SizingError> {
    let existing = net
        .device(device)
        .ok_or_else(|| SizingError::UnknownDevice(device.to_string()))?;
    if !check_compatible(existing.kind, kind) {
        return Err(SizingError::IncompatiblePlacement {
            device: device.to_string(),
            existing: existing.kind,
            requested: kind,
        });
    }

    let baseline = capacity_shortfall(net, 1.0)?;
    let outcome = |required: f64, residual: f64| SizingOutcome {
        placement: device.to_string(),
        kind,
        required_rating: required,
        residual_shortfall: residual,
        baseline_shortfall: baseline,
    };
    if baseline <= TOL {
        return Ok(outcome(0.0, 0.0));
    }

    let shortfall_at = |r: f64| capacity_shortfall(&upgraded(net, device, kind, r), 1.0);
    let total = net.total_demand();
    let target = shortfall_at(total)?;
    if shortfall_at(0.0)? <= target + TOL {
        return Ok(outcome(0.0, target));
    }
    let (mut lo, mut hi) = (0.0, total);
    while hi - lo > RATING_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if shortfall_at(mid)? <= target + TOL {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(outcome(hi, target))
}

/// One sized option in a comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComparisonRow {
    pub option: String,
    pub placement: String,
    pub kind: DeviceKind,
    pub required_rating: f64,
    pub residual_shortfall: f64,
    /// This option's rating over the soft-open-point option's rating (absent
    /// without a soft open point in the comparison, or when its rating is
    /// zero).
    pub ratio_vs_sop: Option<f64>,
}

/// Side-by-side sizing of alternative upgrades for the same planning problem.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Headroom the converter must cover: the hybrid option's rating.
    pub implied_headroom: Option<f64>,
    /// Demand the hybrid's galvanic switch transfers for free: the gap
    /// between the soft and hybrid ratings.
    pub implied_transferred_demand: Option<f64>,
    /// `h / (h + d)` computed from the implied quantities.
    pub rating_ratio: Option<f64>,
}

/// Sizes every option and derives the hybrid-vs-soft rating structure when
/// the comparison contains one of each.
pub fn compare_options(
    net: &Network,
    options: &[(String, DeviceKind)],
) -> Result<Comparison, SizingError> {
    let mut rows = Vec::with_capacity(options.len());
    for (i, (placement, kind)) in options.iter().enumerate() {
        let sized = size_device(net, placement, *kind)?;
        rows.push(ComparisonRow {
            option: format!("Option {}", i + 1),
            placement: sized.placement,
            kind: sized.kind,
            required_rating: sized.required_rating,
            residual_shortfall: sized.residual_shortfall,
            ratio_vs_sop: None,
        });
    }
    let sop = rows
        .iter()
        .find(|r| r.kind == DeviceKind::Sop)
        .map(|r| r.required_rating)
        .filter(|&r| r > TOL);
    if let Some(sop_rating) = sop {
        for row in &mut rows {
            row.ratio_vs_sop = Some(row.required_rating / sop_rating);
        }
    }
    let hop = rows
        .iter()
        .find(|r| matches!(r.kind, DeviceKind::Hop1 | DeviceKind::Hop2))
        .map(|r| r.required_rating);
    let (implied_headroom, implied_transferred_demand, ratio) = match (hop, sop) {
        (Some(h), Some(s)) if s >= h - TOL => {
            let d = (s - h).max(0.0);
            (Some(h), Some(d), rating_ratio(h, d).ok())
        }
        _ => (None, None, None),
    };
    Ok(Comparison { rows, implied_headroom, implied_transferred_demand, rating_ratio: ratio })
}

/// Convenience: does the device's declared normal position match its kind?
/// Used by callers that build upgrade candidates by hand.
pub fn normal_position_for(kind: DeviceKind) -> SwitchPos {
    kind.required_normal()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Branch, Bus, BusKind, Demand, Device, Source};

    /// Three substations; srcB too small to absorb feeder A by switching
    /// alone, and closing both ties at once would be non-radial. See the
    /// security tests for the same geometry.
    fn three_sub() -> Network {
        Network {
            buses: vec![
                Bus::new("busA", BusKind::SubstationBusbar),
                Bus::new("a1", BusKind::FeederNode),
                Bus::new("busB", BusKind::SubstationBusbar),
                Bus::new("b1", BusKind::FeederNode),
                Bus::new("busC", BusKind::SubstationBusbar),
                Bus::new("c1", BusKind::FeederNode),
            ],
            sources: vec![
                Source::grid("srcA", "busA", 10.0),
                Source::grid("srcB", "busB", 4.5),
                Source::grid("srcC", "busC", 10.0),
            ],
            branches: vec![
                Branch::new("fdr-a", "busA", "a1", 8.0),
                Branch::new("fdr-b", "busB", "b1", 8.0),
                Branch::new("fdr-c", "busC", "c1", 8.0),
            ],
            demands: vec![Demand::new("dA", "a1", 4.0), Demand::new("dB", "b1", 1.0)],
            devices: vec![
                Device::new("nop-ab", DeviceKind::Nop, "a1", "b1"),
                Device::new("nop-cb", DeviceKind::Nop, "c1", "b1"),
            ],
        }
    }

    #[test]
    fn rating_ratio_matches_closed_form() {
        // 0.25 / (0.25 + 1.0) is exactly representable.
        assert_eq!(rating_ratio(0.25, 1.0).unwrap(), 0.2);
        assert!((rating_ratio(1.0, 1.5).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(rating_ratio(0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rating_ratio_rejects_degenerate_inputs() {
        assert_eq!(rating_ratio(0.0, 0.0), Err(SizingError::DegenerateInput));
        assert_eq!(rating_ratio(-1.0, 2.0), Err(SizingError::DegenerateInput));
        assert_eq!(rating_ratio(f64::NAN, 1.0), Err(SizingError::DegenerateInput));
        assert_eq!(rating_ratio(f64::INFINITY, 1.0), Err(SizingError::DegenerateInput));
    }

    #[test]
    fn sizes_the_exact_import_needed() {
        // Losing srcA leaves 5 MVA on srcB (4.5): a converter on the C-B tie
        // must import the missing 0.5 MVA.
        let net = three_sub();
        let sized = size_device(&net, "nop-cb", DeviceKind::Sop).unwrap();
        assert!((sized.baseline_shortfall - 4.0).abs() <= 1e-9);
        assert!((sized.required_rating - 0.5).abs() <= 1e-6);
        assert!(sized.residual_shortfall.abs() <= TOL);
    }

    #[test]
    fn hybrid_needs_the_same_converter_but_keeps_its_switch() {
        let net = three_sub();
        let hop = size_device(&net, "nop-cb", DeviceKind::Hop1).unwrap();
        assert!((hop.required_rating - 0.5).abs() <= 1e-6);
        assert!(hop.residual_shortfall.abs() <= TOL);
    }

    #[test]
    fn converter_on_the_dead_feeder_tie_has_no_value() {
        // Upgrading the A-B tie cannot help when srcA is lost: with the tie
        // open its A-side terminal is de-energized, and with it closed the
        // converter is a parallel no-op. Sizing reports rating zero and the
        // baseline shortfall as residual.
        let mut net = three_sub();
        net.devices.retain(|d| d.id == "nop-ab");
        let sized = size_device(&net, "nop-ab", DeviceKind::Hop1).unwrap();
        assert_eq!(sized.required_rating, 0.0);
        assert!((sized.residual_shortfall - 4.0).abs() <= 1e-9);
        assert!((sized.baseline_shortfall - 4.0).abs() <= 1e-9);
    }

    #[test]
    fn shortfall_is_monotone_in_rating() {
        let net = three_sub();
        let mut last = f64::INFINITY;
        for r in [0.0, 0.2, 0.4, 0.5, 0.8] {
            let candidate = upgraded(&net, "nop-cb", DeviceKind::Sop, r);
            let s = capacity_shortfall(&candidate, 1.0).unwrap();
            assert!(s <= last + TOL, "shortfall increased from {last} to {s} at rating {r}");
            last = s;
        }
    }

    #[test]
    fn incompatible_and_unknown_placements_are_rejected() {
        let net = three_sub();
        assert!(matches!(
            size_device(&net, "nop-ab", DeviceKind::Hop2),
            Err(SizingError::IncompatiblePlacement { .. })
        ));
        assert!(matches!(
            size_device(&net, "fdr-a", DeviceKind::Sop),
            Err(SizingError::UnknownDevice(_))
        ));
    }

    #[test]
    fn comparison_derives_the_rating_structure() {
        let net = three_sub();
        let cmp = compare_options(
            &net,
            &[
                ("nop-cb".to_string(), DeviceKind::Hop1),
                ("nop-cb".to_string(), DeviceKind::Sop),
            ],
        )
        .unwrap();
        assert_eq!(cmp.rows.len(), 2);
        assert_eq!(cmp.rows[0].option, "Option 1");
        // Same placement, same needed import: ratio 1, no free transfer.
        assert!((cmp.implied_headroom.unwrap() - 0.5).abs() <= 1e-6);
        assert!(cmp.implied_transferred_demand.unwrap().abs() <= 1e-6);
        let r = cmp.rows[0].ratio_vs_sop.unwrap();
        assert!((r - 1.0).abs() <= 1e-5);
    }
}
