//! RUSLE soil loss and downslope sediment routing with per-class trapping.
//!
//! Soil loss per cell is the factor product A = R·K·LS·C·P (t/ha/yr),
//! converted to t/cell/yr through the cell area. The eroded mass then
//! cascades along the D8 directions: every cell passes its own generated
//! loss downstream and retains a class-specific fraction of the load
//! flowing *through* it. A cell never traps its own generated loss, so
//! generation and filtration are never double-counted at one cell.
//!
//! Mass is conserved exactly: generated = trapped + exported at outlets.

use std::collections::BTreeMap;

use crate::grid::{assert_aligned, Grid, LandCoverGrid};
use crate::hydrology::FlowDirGrid;
use crate::params::ClassTable;
use crate::{Error, Result};

/// Raster inputs for the RUSLE product; per-class C and P factors come
/// from the class table.
#[derive(Debug, Clone, Copy)]
pub struct RusleInputs<'a> {
    /// Rainfall erosivity, MJ·mm·ha⁻¹·h⁻¹·yr⁻¹.
    pub r_factor: &'a Grid,
    /// Soil erodibility, t·ha·h·ha⁻¹·MJ⁻¹·mm⁻¹.
    pub k_factor: &'a Grid,
    /// Slope length-steepness factor, dimensionless.
    pub ls: &'a Grid,
    pub classes: &'a ClassTable,
}

/// Annual soil loss per cell, t·cell⁻¹·yr⁻¹.
///
/// Nodata in any input layer propagates to the output. Every class present
/// under a valid cell must have a parameter entry.
pub fn soil_loss(inputs: &RusleInputs, landcover: &LandCoverGrid) -> Result<Grid> {
    let r = inputs.r_factor;
    assert_aligned(r, inputs.k_factor)?;
    assert_aligned(r, inputs.ls)?;
    assert_aligned(r, landcover.grid())?;
    let area_ha = r.cell_area_ha();
    let mut loss = Grid::like(r, r.nodata());
    for row in 0..r.nrows() {
        for col in 0..r.ncols() {
            let cell = (
                r.value(row, col),
                inputs.k_factor.value(row, col),
                inputs.ls.value(row, col),
                landcover.class_at(row, col),
            );
            let (Some(rv), Some(kv), Some(lsv), Some(class)) = cell else {
                continue;
            };
            let p = inputs.classes.require(class)?;
            let per_ha = rv * kv * lsv * p.c_factor * p.p_factor;
            loss.set(row, col, per_ha * area_ha);
        }
    }
    Ok(loss)
}

/// Outcome of routing eroded soil downslope.
#[derive(Debug, Clone)]
pub struct SedimentResult {
    /// Generated loss actually routed, t·cell⁻¹·yr⁻¹.
    pub generated: Grid,
    /// Load retained per cell, t·cell⁻¹·yr⁻¹.
    pub trapped: Grid,
    /// Load leaving the grid at outlet cells, t·yr⁻¹.
    pub exported_at_outlets: f64,
    /// Trapped tonnage summed by the land-cover class of the trapping cell.
    pub per_class_trapped: BTreeMap<u32, f64>,
}

impl SedimentResult {
    pub fn total_generated(&self) -> f64 {
        self.generated.sum_valid()
    }

    pub fn total_trapped(&self) -> f64 {
        self.trapped.sum_valid()
    }
}

/// Route generated soil loss along the flow directions, trapping a
/// class-specific fraction of through-flow at every cell.
///
/// Cells are processed in topological order: each cell's outgoing load is
/// its own generated loss plus the untrapped share of its inflow. Loads
/// leaving outlet cells accumulate into `exported_at_outlets`.
pub fn route_sediment(
    loss: &Grid,
    dirs: &FlowDirGrid,
    classes: &ClassTable,
    landcover: &LandCoverGrid,
) -> Result<SedimentResult> {
    for (class, p) in classes.iter() {
        if !(0.0..=1.0).contains(&p.trap_eff) {
            return Err(Error::ParamRange {
                name: "trap_eff",
                class,
                value: p.trap_eff,
                range: "[0, 1]",
            });
        }
    }
    assert_aligned(loss, landcover.grid())?;
    assert_aligned(loss, &dirs.empty_grid(dirs.nodata()))?;

    let order = dirs.topological_order()?;
    let ncols = dirs.ncols();
    let mut generated = Grid::like(loss, loss.nodata());
    let mut trapped = Grid::like(loss, loss.nodata());
    let mut inflow = vec![0.0f64; loss.values().len()];
    let mut exported = 0.0f64;
    let mut per_class: BTreeMap<u32, f64> = BTreeMap::new();

    for &i in &order {
        let (row, col) = (i / ncols, i % ncols);
        let own = loss.value(row, col).unwrap_or(0.0);
        let trap_eff = match landcover.class_at(row, col) {
            Some(class) => classes.require(class)?.trap_eff,
            None => 0.0,
        };
        let caught = inflow[i] * trap_eff;
        let outgoing = own + inflow[i] - caught;
        generated.set(row, col, own);
        trapped.set(row, col, caught);
        if caught > 0.0 {
            if let Some(class) = landcover.class_at(row, col) {
                *per_class.entry(class).or_insert(0.0) += caught;
            }
        }
        match dirs.target(row, col) {
            Some((tr, tc)) => inflow[tr * ncols + tc] += outgoing,
            None => exported += outgoing,
        }
    }

    Ok(SedimentResult {
        generated,
        trapped,
        exported_at_outlets: exported,
        per_class_trapped: per_class,
    })
}

/// Tonnes of a service delivered by one class inside the reporting mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceQuantity {
    pub tonnes: f64,
    pub area_ha: f64,
    /// `tonnes / area_ha`; 0 for an empty class.
    pub tonnes_per_ha: f64,
}

/// Aggregate trapped sediment by asset class within the reporting mask.
///
/// Every class present in the mask gets an entry, including classes that
/// trapped nothing.
pub fn filtration_service(
    result: &SedimentResult,
    mask: &LandCoverGrid,
) -> Result<BTreeMap<u32, ServiceQuantity>> {
    assert_aligned(&result.trapped, mask.grid())?;
    if mask.grid().valid_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let area_ha = mask.grid().cell_area_ha();
    let mut tonnes: BTreeMap<u32, f64> = mask.classes().iter().map(|&c| (c, 0.0)).collect();
    let mut cells: BTreeMap<u32, usize> = mask.classes().iter().map(|&c| (c, 0)).collect();
    for row in 0..mask.grid().nrows() {
        for col in 0..mask.grid().ncols() {
            let Some(class) = mask.class_at(row, col) else {
                continue;
            };
            *cells.get_mut(&class).unwrap() += 1;
            if let Some(t) = result.trapped.value(row, col) {
                *tonnes.get_mut(&class).unwrap() += t;
            }
        }
    }
    Ok(tonnes
        .into_iter()
        .map(|(class, t)| {
            let area = cells[&class] as f64 * area_ha;
            let per_ha = if area > 0.0 { t / area } else { 0.0 };
            (
                class,
                ServiceQuantity {
                    tonnes: t,
                    area_ha: area,
                    tonnes_per_ha: per_ha,
                },
            )
        })
        .collect())
}

/// Build the optimal-scenario parameter table from a baseline: every
/// native class's trap efficiency rises to the maximum among native
/// classes, and each carbon pool rises to the native maximum for that
/// pool. Non-native classes are untouched.
pub fn optimal_scenario_params(base: &ClassTable) -> Result<ClassTable> {
    let natives: Vec<_> = base.iter().filter(|(_, p)| p.native).collect();
    if natives.is_empty() {
        return Err(Error::NoNativeClass);
    }
    let max_trap = natives
        .iter()
        .map(|(_, p)| p.trap_eff)
        .fold(f64::MIN, f64::max);
    let max_above = natives
        .iter()
        .map(|(_, p)| p.pools.above_ground)
        .fold(f64::MIN, f64::max);
    let max_below = natives
        .iter()
        .map(|(_, p)| p.pools.below_ground)
        .fold(f64::MIN, f64::max);
    let max_dead = natives
        .iter()
        .map(|(_, p)| p.pools.dead)
        .fold(f64::MIN, f64::max);

    let mut out = base.clone();
    let ids: Vec<u32> = base
        .iter()
        .filter(|(_, p)| p.native)
        .map(|(id, _)| id)
        .collect();
    for id in ids {
        let mut p = base.get(id).expect("native id exists").clone();
        p.trap_eff = max_trap;
        p.pools.above_ground = max_above;
        p.pools.below_ground = max_below;
        p.pools.dead = max_dead;
        out.insert(id, p);
    }
    Ok(out)
}
