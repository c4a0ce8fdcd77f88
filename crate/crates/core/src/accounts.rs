//! Ecosystem-account builders: the extent account (asset area with
//! opening/closing balances) and physical flow accounts (service
//! quantities per class for a baseline and a scenario).
//!
//! Account values stay unrounded; the CSV writers apply the table
//! presentation (whole tonnes, per-hectare to the account's decimals)
//! while the JSON writers emit the raw numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::grid::{assert_aligned, LandCoverGrid};
use crate::render::{csv_field, format_qty, format_trim};
use crate::{Error, Result};

pub const SERVICE_SEDIMENT: &str = "Sediment filtration";
pub const SERVICE_CARBON: &str = "Carbon storage";

/// Names of the accounting period endpoints, e.g. 2013 and 2023.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeriodLabels {
    pub baseline: String,
    pub scenario: String,
}

impl PeriodLabels {
    pub fn new(baseline: impl Into<String>, scenario: impl Into<String>) -> Self {
        PeriodLabels {
            baseline: baseline.into(),
            scenario: scenario.into(),
        }
    }
}

// ── Extent account ───────────────────────────────────────────────────────

/// One class row of the extent account, all areas in hectares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtentRow {
    pub class_id: u32,
    pub name: String,
    pub opening_ha: f64,
    pub additions_ha: f64,
    pub losses_ha: f64,
    pub closing_ha: f64,
    pub change_ha: f64,
}

/// Column sums of the extent account.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtentTotals {
    pub opening_ha: f64,
    pub additions_ha: f64,
    pub losses_ha: f64,
    pub closing_ha: f64,
    pub change_ha: f64,
}

/// Asset extent per ecosystem type over an accounting period.
///
/// Every row satisfies `closing = opening + additions − losses` and
/// `change = closing − opening`; totals are column sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtentAccount {
    pub periods: PeriodLabels,
    pub rows: Vec<ExtentRow>,
    pub totals: ExtentTotals,
}

/// Build the extent account from opening and closing land cover.
///
/// Additions and losses are reported net per class: a class either gained
/// or lost area, never both. Classes named in `names` appear even when
/// they are absent from both grids.
pub fn build_extent_account(
    t0: &LandCoverGrid,
    t1: &LandCoverGrid,
    names: &BTreeMap<u32, String>,
    periods: &PeriodLabels,
) -> Result<ExtentAccount> {
    assert_aligned(t0.grid(), t1.grid())?;
    let opening = t0.class_areas_ha();
    let closing = t1.class_areas_ha();
    let mut ids: BTreeSet<u32> = names.keys().copied().collect();
    ids.extend(opening.keys());
    ids.extend(closing.keys());

    let mut rows = Vec::with_capacity(ids.len());
    let mut totals = ExtentTotals {
        opening_ha: 0.0,
        additions_ha: 0.0,
        losses_ha: 0.0,
        closing_ha: 0.0,
        change_ha: 0.0,
    };
    for id in ids {
        let open = opening.get(&id).copied().unwrap_or(0.0);
        let close = closing.get(&id).copied().unwrap_or(0.0);
        let row = ExtentRow {
            class_id: id,
            name: display_name(names, id),
            opening_ha: open,
            additions_ha: (close - open).max(0.0),
            losses_ha: (open - close).max(0.0),
            closing_ha: close,
            change_ha: close - open,
        };
        totals.opening_ha += row.opening_ha;
        totals.additions_ha += row.additions_ha;
        totals.losses_ha += row.losses_ha;
        totals.closing_ha += row.closing_ha;
        totals.change_ha += row.change_ha;
        rows.push(row);
    }
    Ok(ExtentAccount {
        periods: periods.clone(),
        rows,
        totals,
    })
}

fn display_name(names: &BTreeMap<u32, String>, id: u32) -> String {
    names
        .get(&id)
        .cloned()
        .unwrap_or_else(|| format!("class {id}"))
}

impl ExtentAccount {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("class_id,name,opening_ha,additions_ha,losses_ha,closing_ha,change_ha\n");
        let area = |v: f64| format_trim(v, 4);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.class_id,
                csv_field(&r.name),
                area(r.opening_ha),
                area(r.additions_ha),
                area(r.losses_ha),
                area(r.closing_ha),
                area(r.change_ha)
            );
        }
        let t = &self.totals;
        let _ = writeln!(
            out,
            ",Total,{},{},{},{},{}",
            area(t.opening_ha),
            area(t.additions_ha),
            area(t.losses_ha),
            area(t.closing_ha),
            area(t.change_ha)
        );
        out
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }
}

// ── Physical flow accounts ───────────────────────────────────────────────

/// Convention for the per-hectare figure on the totals row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PerHaTotals {
    /// Portfolio quantity divided by portfolio area.
    #[default]
    PortfolioPerArea,
    /// Arithmetic mean of the class per-hectare values.
    ClassMean,
}

/// One class row of a physical flow account. Per-hectare entries are
/// absent (not zero) for classes with no mapped area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRow {
    pub class_id: u32,
    pub name: String,
    pub baseline_qty: f64,
    pub baseline_per_ha: Option<f64>,
    pub scenario_qty: f64,
    pub scenario_per_ha: Option<f64>,
    pub area_ha: f64,
    pub change_qty: f64,
    pub change_per_ha: Option<f64>,
}

/// Totals row: quantities are sums, per-hectare follows the convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTotals {
    pub baseline_qty: f64,
    pub baseline_per_ha: Option<f64>,
    pub scenario_qty: f64,
    pub scenario_per_ha: Option<f64>,
    pub area_ha: f64,
    pub change_qty: f64,
    pub change_per_ha: Option<f64>,
}

/// Per-class quantities of one service for baseline and scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalFlowAccount {
    pub service: String,
    /// Unit of the quantity column, e.g. "t/yr" or "t C".
    pub unit: String,
    pub periods: PeriodLabels,
    pub per_ha_convention: PerHaTotals,
    /// Decimal places for per-hectare presentation (quantities print whole).
    pub per_ha_decimals: u8,
    pub rows: Vec<FlowRow>,
    pub totals: FlowTotals,
}

/// Assemble a physical flow account from per-class quantity maps.
///
/// The baseline, scenario, and area maps must share one class set.
#[allow(clippy::too_many_arguments)]
pub fn build_physical_flow_account(
    service: impl Into<String>,
    unit: impl Into<String>,
    baseline: &BTreeMap<u32, f64>,
    scenario: &BTreeMap<u32, f64>,
    areas: &BTreeMap<u32, f64>,
    names: &BTreeMap<u32, String>,
    periods: &PeriodLabels,
    convention: PerHaTotals,
    per_ha_decimals: u8,
) -> Result<PhysicalFlowAccount> {
    let keys: Vec<u32> = baseline.keys().copied().collect();
    for (label, map) in [("scenario", scenario), ("areas", areas)] {
        let other: Vec<u32> = map.keys().copied().collect();
        if other != keys {
            return Err(Error::ClassSetMismatch {
                context: format!("physical account {label} keys {other:?} vs baseline {keys:?}"),
            });
        }
    }

    let per_ha = |qty: f64, area: f64| (area > 0.0).then(|| qty / area);
    let mut rows = Vec::with_capacity(keys.len());
    for &id in &keys {
        let (b, s, a) = (baseline[&id], scenario[&id], areas[&id]);
        rows.push(FlowRow {
            class_id: id,
            name: display_name(names, id),
            baseline_qty: b,
            baseline_per_ha: per_ha(b, a),
            scenario_qty: s,
            scenario_per_ha: per_ha(s, a),
            area_ha: a,
            change_qty: s - b,
            change_per_ha: per_ha(s - b, a),
        });
    }

    let sum = |f: fn(&FlowRow) -> f64| rows.iter().map(f).sum::<f64>();
    let total_area = sum(|r| r.area_ha);
    let totals_per_ha = |qty: f64, per_class: Vec<Option<f64>>| match convention {
        PerHaTotals::PortfolioPerArea => (total_area > 0.0).then(|| qty / total_area),
        PerHaTotals::ClassMean => {
            let vals: Vec<f64> = per_class.into_iter().flatten().collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let totals = FlowTotals {
        baseline_qty: sum(|r| r.baseline_qty),
        baseline_per_ha: totals_per_ha(
            sum(|r| r.baseline_qty),
            rows.iter().map(|r| r.baseline_per_ha).collect(),
        ),
        scenario_qty: sum(|r| r.scenario_qty),
        scenario_per_ha: totals_per_ha(
            sum(|r| r.scenario_qty),
            rows.iter().map(|r| r.scenario_per_ha).collect(),
        ),
        area_ha: total_area,
        change_qty: sum(|r| r.change_qty),
        change_per_ha: totals_per_ha(
            sum(|r| r.change_qty),
            rows.iter().map(|r| r.change_per_ha).collect(),
        ),
    };

    Ok(PhysicalFlowAccount {
        service: service.into(),
        unit: unit.into(),
        periods: periods.clone(),
        per_ha_convention: convention,
        per_ha_decimals,
        rows,
        totals,
    })
}

impl PhysicalFlowAccount {
    pub fn to_csv(&self) -> String {
        let d = self.per_ha_decimals;
        let qty = |v: f64| format_qty(v, 0).replace(',', "");
        let per = |v: Option<f64>| {
            v.map(|x| format_qty(x, d).replace(',', ""))
                .unwrap_or_default()
        };
        let mut out = String::from(
            "class_id,name,baseline_qty,baseline_per_ha,scenario_qty,scenario_per_ha,area_ha,change_qty,change_per_ha\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.class_id,
                csv_field(&r.name),
                qty(r.baseline_qty),
                per(r.baseline_per_ha),
                qty(r.scenario_qty),
                per(r.scenario_per_ha),
                format_trim(r.area_ha, 4),
                qty(r.change_qty),
                per(r.change_per_ha)
            );
        }
        let t = &self.totals;
        let _ = writeln!(
            out,
            ",Total,{},{},{},{},{},{},{}",
            qty(t.baseline_qty),
            per(t.baseline_per_ha),
            qty(t.scenario_qty),
            per(t.scenario_per_ha),
            format_trim(t.area_ha, 4),
            qty(t.change_qty),
            per(t.change_per_ha)
        );
        out
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }
}

/// Pretty JSON with a trailing newline, used by every account writer.
pub(crate) fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("accounts serialize infallibly");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn cover(values: Vec<f64>, ncols: usize) -> LandCoverGrid {
        let g = Grid::new(
            ncols,
            values.len() / ncols,
            0.0,
            0.0,
            100.0,
            -9999.0,
            values,
        )
        .unwrap();
        LandCoverGrid::from_grid(g).unwrap()
    }

    fn names(pairs: &[(u32, &str)]) -> BTreeMap<u32, String> {
        pairs.iter().map(|&(id, n)| (id, n.to_string())).collect()
    }

    fn periods() -> PeriodLabels {
        PeriodLabels::new("2013", "2023")
    }

    #[test]
    fn unchanged_cover_has_zero_movement() {
        let lc = cover(vec![1.0, 1.0, 2.0, 2.0], 2);
        let account =
            build_extent_account(&lc, &lc, &names(&[(1, "a"), (2, "b")]), &periods()).unwrap();
        for row in &account.rows {
            assert_eq!(row.additions_ha, 0.0);
            assert_eq!(row.losses_ha, 0.0);
            assert_eq!(row.change_ha, 0.0);
            assert_eq!(row.opening_ha, row.closing_ha);
        }
        assert_eq!(account.totals.opening_ha, 4.0);
        assert_eq!(account.totals.closing_ha, 4.0);
    }

    #[test]
    fn reclassification_conserves_total_area() {
        let t0 = cover(vec![1.0, 1.0, 1.0, 2.0], 2);
        let t1 = cover(vec![1.0, 1.0, 2.0, 2.0], 2);
        let account = build_extent_account(
            &t0,
            &t1,
            &names(&[(1, "grass"), (2, "woodland")]),
            &periods(),
        )
        .unwrap();
        let grass = &account.rows[0];
        assert_eq!(grass.losses_ha, 1.0);
        assert_eq!(grass.additions_ha, 0.0);
        assert_eq!(grass.change_ha, -1.0);
        let woodland = &account.rows[1];
        assert_eq!(woodland.additions_ha, 1.0);
        assert_eq!(account.totals.change_ha, 0.0);
        assert_eq!(account.totals.opening_ha, account.totals.closing_ha);
    }

    #[test]
    fn named_class_missing_from_both_grids_rows_as_zero() {
        let lc = cover(vec![1.0], 1);
        let account =
            build_extent_account(&lc, &lc, &names(&[(1, "a"), (9, "ghost")]), &periods()).unwrap();
        let ghost = account.rows.iter().find(|r| r.class_id == 9).unwrap();
        assert_eq!(ghost.opening_ha, 0.0);
        assert_eq!(ghost.closing_ha, 0.0);
        assert_eq!(ghost.change_ha, 0.0);
    }

    #[test]
    fn misaligned_grids_are_rejected() {
        let t0 = cover(vec![1.0], 1);
        let g = Grid::new(1, 1, 0.0, 0.0, 25.0, -9999.0, vec![1.0]).unwrap();
        let t1 = LandCoverGrid::from_grid(g).unwrap();
        assert!(build_extent_account(&t0, &t1, &names(&[(1, "a")]), &periods()).is_err());
    }

    fn map(pairs: &[(u32, f64)]) -> BTreeMap<u32, f64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn flow_account_change_is_scenario_minus_baseline() {
        let account = build_physical_flow_account(
            SERVICE_SEDIMENT,
            "t/yr",
            &map(&[(1, 10.0), (2, 20.0)]),
            &map(&[(1, 14.0), (2, 26.0)]),
            &map(&[(1, 5.0), (2, 8.0)]),
            &names(&[(1, "a"), (2, "b")]),
            &periods(),
            PerHaTotals::PortfolioPerArea,
            1,
        )
        .unwrap();
        assert_eq!(account.rows[0].change_qty, 4.0);
        assert_eq!(account.rows[1].change_qty, 6.0);
        assert_eq!(account.totals.change_qty, 10.0);
        assert_eq!(account.totals.baseline_qty, 30.0);
        assert!((account.totals.baseline_per_ha.unwrap() - 30.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn identical_periods_zero_the_change_column() {
        let q = map(&[(1, 10.0)]);
        let account = build_physical_flow_account(
            SERVICE_CARBON,
            "t C",
            &q,
            &q,
            &map(&[(1, 4.0)]),
            &names(&[(1, "a")]),
            &periods(),
            PerHaTotals::PortfolioPerArea,
            0,
        )
        .unwrap();
        assert_eq!(account.rows[0].change_qty, 0.0);
        assert_eq!(account.totals.change_qty, 0.0);
    }

    #[test]
    fn zero_area_reports_absent_per_ha() {
        let account = build_physical_flow_account(
            SERVICE_SEDIMENT,
            "t/yr",
            &map(&[(1, 0.0)]),
            &map(&[(1, 0.0)]),
            &map(&[(1, 0.0)]),
            &names(&[(1, "a")]),
            &periods(),
            PerHaTotals::PortfolioPerArea,
            1,
        )
        .unwrap();
        assert!(account.rows[0].baseline_per_ha.is_none());
        assert!(account.totals.baseline_per_ha.is_none());
    }

    #[test]
    fn key_mismatch_is_an_error() {
        let err = build_physical_flow_account(
            SERVICE_SEDIMENT,
            "t/yr",
            &map(&[(1, 1.0)]),
            &map(&[(2, 1.0)]),
            &map(&[(1, 1.0)]),
            &names(&[]),
            &periods(),
            PerHaTotals::PortfolioPerArea,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ClassSetMismatch { .. }));
    }

    #[test]
    fn class_mean_convention_averages_per_ha() {
        let account = build_physical_flow_account(
            SERVICE_SEDIMENT,
            "t/yr",
            &map(&[(1, 10.0), (2, 30.0)]),
            &map(&[(1, 10.0), (2, 30.0)]),
            &map(&[(1, 10.0), (2, 10.0)]),
            &names(&[]),
            &periods(),
            PerHaTotals::ClassMean,
            1,
        )
        .unwrap();
        assert!((account.totals.baseline_per_ha.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn building_twice_yields_identical_accounts() {
        let b = map(&[(1, 1.25), (2, 7.5)]);
        let s = map(&[(1, 2.5), (2, 9.0)]);
        let a = map(&[(1, 3.0), (2, 4.0)]);
        let n = names(&[(1, "a"), (2, "b")]);
        let build = || {
            build_physical_flow_account(
                SERVICE_SEDIMENT,
                "t/yr",
                &b,
                &s,
                &a,
                &n,
                &periods(),
                PerHaTotals::PortfolioPerArea,
                1,
            )
            .unwrap()
        };
        assert_eq!(build(), build());
        assert_eq!(build().to_csv(), build().to_csv());
        assert_eq!(build().to_json(), build().to_json());
    }
}
