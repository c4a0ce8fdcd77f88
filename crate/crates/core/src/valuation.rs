//! Monetary valuation of service flows and ecosystem assets.
//!
//! Sediment filtration is valued as an avoided cost (tonnes retained times
//! the unit cost of removing sediment from stormwater infrastructure) and
//! capitalised into an asset value with a finite-horizon annuity factor.
//! Carbon stocks are valued at a market price per tonne CO₂-e (a fair
//! value measure) or at social-cost-of-carbon prices for sensitivity.
//!
//! Defaults: AU$250/t sediment, 7% discount rate over 100 years with
//! annuity-due timing, AU$37/t CO₂-e market price, SCC prices of AU$73
//! and AU$274, and 3.67 t CO₂-e per tonne of carbon.

use std::fmt::Write as _;

use serde::Serialize;

use crate::accounts::{
    to_json_pretty, PeriodLabels, PhysicalFlowAccount, SERVICE_CARBON, SERVICE_SEDIMENT,
};
use crate::render::{csv_field, money_csv};
use crate::{Error, Result};

/// Whether annual flows arrive at period end (ordinary) or period start
/// (due). The due factor is the ordinary factor times `1 + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnuityTiming {
    Ordinary,
    Due,
}

/// Prices, rates, and conversion constants for the valuation layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValuationParams {
    /// Avoided cost of sediment removal, AU$/t.
    pub sediment_unit_cost: f64,
    /// Annual discount rate as a fraction.
    pub discount_rate: f64,
    /// Discounting horizon in years.
    pub horizon_years: u32,
    pub annuity_timing: AnnuityTiming,
    /// Market price of carbon, AU$/t CO₂-e.
    pub carbon_price: f64,
    /// Social-cost-of-carbon price ladder, AU$/t CO₂-e.
    pub scc_prices: Vec<f64>,
    /// Tonnes of CO₂-e per tonne of carbon.
    pub c_to_co2: f64,
}

impl Default for ValuationParams {
    fn default() -> Self {
        ValuationParams {
            sediment_unit_cost: 250.0,
            discount_rate: 0.07,
            horizon_years: 100,
            annuity_timing: AnnuityTiming::Due,
            carbon_price: 37.0,
            scc_prices: vec![73.0, 274.0],
            c_to_co2: 3.67,
        }
    }
}

impl ValuationParams {
    pub fn validate(&self) -> Result<()> {
        if self.discount_rate.is_nan() || self.discount_rate <= 0.0 {
            return Err(Error::NonPositiveRate(self.discount_rate));
        }
        if self.horizon_years < 1 {
            return Err(Error::InvalidHorizon(self.horizon_years));
        }
        let prices = [
            ("sediment_unit_cost", self.sediment_unit_cost),
            ("carbon_price", self.carbon_price),
            ("c_to_co2", self.c_to_co2),
        ];
        for (name, value) in prices {
            if value.is_nan() || value < 0.0 {
                return Err(Error::NegativeQuantity { name, value });
            }
        }
        if let Some(&value) = self.scc_prices.iter().find(|&&p| p.is_nan() || p < 0.0) {
            return Err(Error::NegativeQuantity {
                name: "scc_prices",
                value,
            });
        }
        Ok(())
    }
}

/// Which carbon price applies: the market price or an SCC ladder entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMode {
    Market,
    SccIndex(usize),
}

/// Annual avoided cost of a service flow: tonnes times unit cost.
pub fn flow_value(tonnes: f64, unit_cost: f64) -> Result<f64> {
    if tonnes < 0.0 {
        return Err(Error::NegativeQuantity {
            name: "tonnes",
            value: tonnes,
        });
    }
    Ok(tonnes * unit_cost)
}

/// Finite-horizon annuity factor.
///
/// Ordinary timing: `(1 − (1+r)^−T) / r`; due timing multiplies by `1+r`.
/// Perpetuities (r ≤ 0) are not supported.
pub fn annuity_factor(rate: f64, years: u32, timing: AnnuityTiming) -> Result<f64> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::NonPositiveRate(rate));
    }
    if years < 1 {
        return Err(Error::InvalidHorizon(years));
    }
    let ordinary = (1.0 - (1.0 + rate).powi(-(years as i32))) / rate;
    Ok(match timing {
        AnnuityTiming::Ordinary => ordinary,
        AnnuityTiming::Due => ordinary * (1.0 + rate),
    })
}

/// Present value of a constant annual flow over the configured horizon.
pub fn npv_asset_value(annual_flow: f64, params: &ValuationParams) -> Result<f64> {
    if annual_flow < 0.0 {
        return Err(Error::NegativeQuantity {
            name: "annual_flow",
            value: annual_flow,
        });
    }
    Ok(annual_flow
        * annuity_factor(
            params.discount_rate,
            params.horizon_years,
            params.annuity_timing,
        )?)
}

/// Value of a standing carbon stock: tonnes C × CO₂-e factor × price.
pub fn carbon_stock_value(t_c: f64, params: &ValuationParams, mode: PriceMode) -> Result<f64> {
    if t_c < 0.0 {
        return Err(Error::NegativeQuantity {
            name: "t_c",
            value: t_c,
        });
    }
    let price = match mode {
        PriceMode::Market => params.carbon_price,
        PriceMode::SccIndex(i) => *params.scc_prices.get(i).ok_or(Error::SccIndex {
            index: i,
            len: params.scc_prices.len(),
        })?,
    };
    Ok(t_c * params.c_to_co2 * price)
}

// ── Monetary account ─────────────────────────────────────────────────────

/// Baseline and scenario values of one service for one class, AU$.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonetaryCell {
    pub baseline: f64,
    pub scenario: f64,
    pub change: f64,
}

impl MonetaryCell {
    fn new(baseline: f64, scenario: f64) -> Self {
        MonetaryCell {
            baseline,
            scenario,
            change: scenario - baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonetaryRow {
    pub class_id: u32,
    pub name: String,
    pub sediment: MonetaryCell,
    pub carbon: MonetaryCell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonetaryTotals {
    pub sediment: MonetaryCell,
    pub carbon: MonetaryCell,
}

/// Monetary natural-capital account: per class and service, AU$ for both
/// periods plus the change. Sediment rows price the annual flow; carbon
/// rows price the standing stock at the market price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonetaryAccount {
    pub periods: PeriodLabels,
    pub rows: Vec<MonetaryRow>,
    pub totals: MonetaryTotals,
}

/// Build the monetary account from the physical flow accounts.
///
/// `physical` must contain accounts for both services, keyed by their
/// service names, covering one common class set.
pub fn build_monetary_account(
    physical: &[&PhysicalFlowAccount],
    params: &ValuationParams,
) -> Result<MonetaryAccount> {
    params.validate()?;
    let find = |service: &str| {
        physical
            .iter()
            .find(|a| a.service == service)
            .copied()
            .ok_or_else(|| Error::MissingService(service.to_string()))
    };
    let sediment = find(SERVICE_SEDIMENT)?;
    let carbon = find(SERVICE_CARBON)?;

    let sed_ids: Vec<u32> = sediment.rows.iter().map(|r| r.class_id).collect();
    let car_ids: Vec<u32> = carbon.rows.iter().map(|r| r.class_id).collect();
    if sed_ids != car_ids {
        return Err(Error::ClassSetMismatch {
            context: format!("monetary account inputs: {sed_ids:?} vs {car_ids:?}"),
        });
    }

    let mut rows = Vec::with_capacity(sed_ids.len());
    for (s, c) in sediment.rows.iter().zip(&carbon.rows) {
        rows.push(MonetaryRow {
            class_id: s.class_id,
            name: s.name.clone(),
            sediment: MonetaryCell::new(
                flow_value(s.baseline_qty, params.sediment_unit_cost)?,
                flow_value(s.scenario_qty, params.sediment_unit_cost)?,
            ),
            carbon: MonetaryCell::new(
                carbon_stock_value(c.baseline_qty, params, PriceMode::Market)?,
                carbon_stock_value(c.scenario_qty, params, PriceMode::Market)?,
            ),
        });
    }
    let column = |f: &dyn Fn(&MonetaryRow) -> f64| rows.iter().map(f).sum::<f64>();
    let totals = MonetaryTotals {
        sediment: MonetaryCell::new(
            column(&|r| r.sediment.baseline),
            column(&|r| r.sediment.scenario),
        ),
        carbon: MonetaryCell::new(
            column(&|r| r.carbon.baseline),
            column(&|r| r.carbon.scenario),
        ),
    };
    Ok(MonetaryAccount {
        periods: sediment.periods.clone(),
        rows,
        totals,
    })
}

impl MonetaryAccount {
    pub fn to_csv(&self) -> String {
        let p = &self.periods;
        let mut out = format!(
            "class_id,name,sediment_{b},sediment_{s},sediment_change,carbon_{b},carbon_{s},carbon_change\n",
            b = p.baseline,
            s = p.scenario
        );
        let cells = |out: &mut String, sediment: &MonetaryCell, carbon: &MonetaryCell| {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                money_csv(sediment.baseline),
                money_csv(sediment.scenario),
                money_csv(sediment.change),
                money_csv(carbon.baseline),
                money_csv(carbon.scenario),
                money_csv(carbon.change)
            );
        };
        for r in &self.rows {
            let _ = write!(out, "{},{},", r.class_id, csv_field(&r.name));
            cells(&mut out, &r.sediment, &r.carbon);
        }
        let _ = write!(out, ",Total,");
        cells(&mut out, &self.totals.sediment, &self.totals.carbon);
        out
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }
}
