//! Carbon stocks per land-cover class across three pools (above-ground,
//! below-ground, dead biomass), sequestration as the stock difference
//! between two results, and conversion to CO₂ equivalent.
//!
//! Carbon density is a class-level lookup, not per-pixel remote sensing:
//! a class stores `pools.total()` t C/ha over its mapped area. Litter and
//! soil carbon are not modelled, so stocks are an underestimate.

use std::collections::BTreeMap;

use crate::grid::LandCoverGrid;
use crate::params::ClassTable;
use crate::{Error, Result};

/// Conversion from tonnes of carbon to tonnes of CO₂-e, as conventionally
/// printed. The exact molar ratio 44/12 ≈ 3.6667 is available through
/// [`co2_equivalent_with`].
pub const C_TO_CO2: f64 = 3.67;

/// Stock held by one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStock {
    pub tonnes: f64,
    pub tonnes_per_ha: f64,
    pub area_ha: f64,
}

/// Carbon stocks per class plus the portfolio total.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonStockResult {
    pub per_class: BTreeMap<u32, ClassStock>,
    /// Sum of the per-class totals, t C.
    pub portfolio_total: f64,
}

impl CarbonStockResult {
    /// Per-class tonnes alone, for feeding account builders.
    pub fn tonnes_by_class(&self) -> BTreeMap<u32, f64> {
        self.per_class
            .iter()
            .map(|(&id, s)| (id, s.tonnes))
            .collect()
    }

    pub fn areas_by_class(&self) -> BTreeMap<u32, f64> {
        self.per_class
            .iter()
            .map(|(&id, s)| (id, s.area_ha))
            .collect()
    }
}

/// Carbon stock per class: combined pool density times mapped area.
///
/// Every class present in the land cover needs a parameter entry; classes
/// mapped over zero cells simply do not appear.
pub fn carbon_storage(
    landcover: &LandCoverGrid,
    classes: &ClassTable,
) -> Result<CarbonStockResult> {
    let mut per_class = BTreeMap::new();
    let mut portfolio = 0.0;
    for (class, area_ha) in landcover.class_areas_ha() {
        let params = classes.require(class)?;
        let density = params.pools.total();
        let tonnes = density * area_ha;
        portfolio += tonnes;
        per_class.insert(
            class,
            ClassStock {
                tonnes,
                tonnes_per_ha: density,
                area_ha,
            },
        );
    }
    Ok(CarbonStockResult {
        per_class,
        portfolio_total: portfolio,
    })
}

/// Net sequestration per class between two stock results: `t1 − t0`,
/// signed (negative when carbon was lost). The two results must cover the
/// same classes.
pub fn sequestration(t0: &CarbonStockResult, t1: &CarbonStockResult) -> Result<BTreeMap<u32, f64>> {
    let keys0: Vec<u32> = t0.per_class.keys().copied().collect();
    let keys1: Vec<u32> = t1.per_class.keys().copied().collect();
    if keys0 != keys1 {
        return Err(Error::ClassSetMismatch {
            context: format!("sequestration inputs: {keys0:?} vs {keys1:?}"),
        });
    }
    Ok(keys0
        .into_iter()
        .map(|id| (id, t1.per_class[&id].tonnes - t0.per_class[&id].tonnes))
        .collect())
}

/// Tonnes of CO₂-e for a quantity of carbon, at the conventional 3.67.
pub fn co2_equivalent(t_c: f64) -> f64 {
    co2_equivalent_with(t_c, C_TO_CO2)
}

/// CO₂-e conversion with an explicit factor (e.g. 44/12).
pub fn co2_equivalent_with(t_c: f64, factor: f64) -> f64 {
    t_c * factor
}
