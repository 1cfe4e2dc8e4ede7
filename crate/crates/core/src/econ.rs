//! Discounted cash-flow economics for reinforcement deferral studies.
//!
//! Costs and benefits are treated as end-of-year amounts discounted at a flat
//! rate. The lifetime benefit is an explicit year-by-year sum; the closed-form
//! annuity factor is provided alongside as an independent cross-check.

use thiserror::Error;

/// Hours in the (non-leap) planning year used for energy conversions.
pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Error, PartialEq)]
pub enum EconError {
    /// Discount rates must be finite and greater than -100%.
    #[error("invalid discount rate {0}: must be finite and greater than -1")]
    InvalidRate(f64),
}

fn check_rate(rate: f64) -> Result<(), EconError> {
    if !rate.is_finite() || rate <= -1.0 {
        return Err(EconError::InvalidRate(rate));
    }
    Ok(())
}

/// Percentage cost reduction from deferring a capital expense by `years` at
/// the given discount rate: `100 - 100 / (1 + rate)^years`.
pub fn deferral_cost_reduction(years: u32, rate: f64) -> Result<f64, EconError> {
    check_rate(rate)?;
    Ok(100.0 - 100.0 / (1.0 + rate).powi(years as i32))
}

/// Present value of one currency unit per year for `years` years:
/// `Σ (1 + rate)^-i` in closed form.
pub fn annuity_factor(years: u32, rate: f64) -> Result<f64, EconError> {
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(years as f64);
    }
    Ok((1.0 - (1.0 + rate).powi(-(years as i32))) / rate)
}

/// Present value of a constant annual benefit over `years` years, summed
/// explicitly year by year.
pub fn lifetime_operational_benefit(
    annual_benefit: f64,
    years: u32,
    rate: f64,
) -> Result<f64, EconError> {
    check_rate(rate)?;
    let mut pv = 0.0;
    for year in 1..=years {
        pv += annual_benefit / (1.0 + rate).powi(year as i32);
    }
    Ok(pv)
}

/// Annual benefit from an average loss reduction, converting average MW saved
/// into MWh over the year at a flat energy price.
pub fn loss_reduction_annual_benefit(average_mw_saved: f64, price_per_mwh: f64) -> f64 {
    average_mw_saved * HOURS_PER_YEAR * price_per_mwh
}

/// Economic study parameters, typically attached to a network document.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_years: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annual_benefit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deferral_years: Option<u32>,
}
