//! Property tests for the serialization, accounting, and valuation layers.

use std::collections::BTreeMap;

use proptest::prelude::*;

use natcap_core::accounts::{
    build_extent_account, build_physical_flow_account, PerHaTotals, PeriodLabels,
};
use natcap_core::carbon::{co2_equivalent, co2_equivalent_with};
use natcap_core::grid::{read_ascii_grid, write_ascii_grid, Grid, LandCoverGrid};
use natcap_core::valuation::{
    annuity_factor, flow_value, npv_asset_value, AnnuityTiming, ValuationParams,
};

const NODATA: f64 = -9999.0;

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (
        (1usize..8, 1usize..8),
        0.1f64..1000.0,
        -1e5f64..1e5,
        -1e5f64..1e5,
    )
        .prop_flat_map(|((ncols, nrows), cellsize, xll, yll)| {
            proptest::collection::vec(
                prop_oneof![4 => -1e6f64..1e6, 1 => Just(NODATA)],
                ncols * nrows,
            )
            .prop_map(move |values| {
                Grid::new(ncols, nrows, xll, yll, cellsize, NODATA, values).unwrap()
            })
        })
}

proptest! {
    /// read ∘ write is the identity, field for field and value for value.
    #[test]
    fn ascii_round_trip(g in grid_strategy()) {
        let text = write_ascii_grid(&g);
        let back = read_ascii_grid(&text).unwrap();
        prop_assert_eq!(&g, &back);
        prop_assert_eq!(write_ascii_grid(&back), text);
    }

    /// Nodata cells survive any per-cell map untouched.
    #[test]
    fn map_valid_preserves_nodata(g in grid_strategy(), scale in -10.0f64..10.0) {
        let mapped = g.map_valid(|_, _, v| v * scale);
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                prop_assert_eq!(g.is_valid(r, c), mapped.is_valid(r, c));
            }
        }
    }

    /// Cell area grows strictly with cell size.
    #[test]
    fn cell_area_monotone(a in 0.01f64..1000.0, b in 0.01f64..1000.0) {
        prop_assume!(a < b);
        let make = |cs: f64| Grid::new(1, 1, 0.0, 0.0, cs, NODATA, vec![0.0]).unwrap();
        prop_assert!(make(a).cell_area_ha() < make(b).cell_area_ha());
    }
}

fn landcover_pair_strategy() -> impl Strategy<Value = (LandCoverGrid, LandCoverGrid)> {
    ((1usize..12, 1usize..12), 1u32..8).prop_flat_map(|((ncols, nrows), nclasses)| {
        let cell = 0u32..nclasses;
        (
            proptest::collection::vec(cell.clone(), ncols * nrows),
            proptest::collection::vec(cell, ncols * nrows),
        )
            .prop_map(move |(a, b)| {
                let build = |vals: Vec<u32>| {
                    let g = Grid::new(
                        ncols,
                        nrows,
                        0.0,
                        0.0,
                        100.0,
                        NODATA,
                        vals.into_iter().map(f64::from).collect(),
                    )
                    .unwrap();
                    LandCoverGrid::from_grid(g).unwrap()
                };
                (build(a), build(b))
            })
    })
}

proptest! {
    /// Extent-account identities over random reclassifications:
    /// closing = opening + additions − losses, change = closing − opening,
    /// and total area is conserved.
    #[test]
    fn extent_identities((t0, t1) in landcover_pair_strategy()) {
        let names = BTreeMap::new();
        let periods = PeriodLabels::new("t0", "t1");
        let account = build_extent_account(&t0, &t1, &names, &periods).unwrap();
        for row in &account.rows {
            prop_assert!(
                (row.closing_ha - (row.opening_ha + row.additions_ha - row.losses_ha)).abs()
                    < 1e-9
            );
            prop_assert!((row.change_ha - (row.closing_ha - row.opening_ha)).abs() < 1e-9);
            prop_assert!(row.additions_ha >= 0.0 && row.losses_ha >= 0.0);
        }
        prop_assert!((account.totals.opening_ha - account.totals.closing_ha).abs() < 1e-9);
        let sum: f64 = account.rows.iter().map(|r| r.opening_ha).sum();
        prop_assert!((sum - account.totals.opening_ha).abs() < 1e-9);
    }

    /// Physical-flow change column is exactly scenario − baseline.
    #[test]
    fn flow_change_column(
        quantities in proptest::collection::vec((0.0f64..1e4, 0.0f64..1e4, 0.1f64..1e3), 1..10)
    ) {
        let baseline: BTreeMap<u32, f64> =
            quantities.iter().enumerate().map(|(i, q)| (i as u32, q.0)).collect();
        let scenario: BTreeMap<u32, f64> =
            quantities.iter().enumerate().map(|(i, q)| (i as u32, q.1)).collect();
        let areas: BTreeMap<u32, f64> =
            quantities.iter().enumerate().map(|(i, q)| (i as u32, q.2)).collect();
        let account = build_physical_flow_account(
            "svc", "t", &baseline, &scenario, &areas, &BTreeMap::new(),
            &PeriodLabels::new("a", "b"), PerHaTotals::PortfolioPerArea, 1,
        ).unwrap();
        for row in &account.rows {
            prop_assert_eq!(row.change_qty, row.scenario_qty - row.baseline_qty);
        }
        let change_sum: f64 = account.rows.iter().map(|r| r.change_qty).sum();
        prop_assert!((account.totals.change_qty - change_sum).abs() < 1e-9);
    }

    /// The annuity NPV equals the brute-force discounted sum.
    #[test]
    fn npv_matches_bruteforce(
        rate in 0.01f64..0.2,
        years in 1u32..200,
        flow in 0.0f64..1e6,
        due in any::<bool>(),
    ) {
        let timing = if due { AnnuityTiming::Due } else { AnnuityTiming::Ordinary };
        let params = ValuationParams {
            discount_rate: rate,
            horizon_years: years,
            annuity_timing: timing,
            ..ValuationParams::default()
        };
        let value = npv_asset_value(flow, &params).unwrap();
        // Ordinary: payments at t = 1..=T; due: payments at t = 0..T.
        let offset = if due { 0 } else { 1 };
        let brute: f64 = (0..years)
            .map(|t| flow / (1.0 + rate).powi((t + offset) as i32))
            .sum();
        prop_assert!((value - brute).abs() <= 1e-9 * brute.abs().max(1.0));
    }

    /// The factor falls as the rate rises and rises with the horizon
    /// (strictly while the discounted tail is representable in f64, and
    /// never decreasing beyond that).
    #[test]
    fn annuity_factor_monotonicity(
        r1 in 0.01f64..0.5,
        dr in 0.001f64..0.5,
        years in 1u32..300,
        dy in 1u32..100,
    ) {
        let f = |r: f64, t: u32| annuity_factor(r, t, AnnuityTiming::Ordinary).unwrap();
        prop_assert!(f(r1 + dr, years) < f(r1, years));
        prop_assert!(f(r1, years + dy) >= f(r1, years));
        if r1 <= 0.2 && years + dy <= 100 {
            prop_assert!(f(r1, years + dy) > f(r1, years));
        }
    }

    /// Pricing is linear in quantity and in price.
    #[test]
    fn pricing_linearity(q in 0.0f64..1e5, price in 0.0f64..1e4, k in 0.0f64..10.0) {
        let direct = flow_value(q * k, price).unwrap();
        let scaled = flow_value(q, price).unwrap() * k;
        prop_assert!((direct - scaled).abs() <= 1e-9 * direct.abs().max(1.0));
        let by_price = flow_value(q, price * k).unwrap();
        prop_assert!((by_price - scaled).abs() <= 1e-9 * by_price.abs().max(1.0));
    }

    /// CO₂-e conversion is linear and the configurable factor matches.
    #[test]
    fn co2_linearity(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let lhs = co2_equivalent(a + b);
        let rhs = co2_equivalent(a) + co2_equivalent(b);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
        let molar = co2_equivalent_with(a, 44.0 / 12.0);
        prop_assert!((molar - a * 44.0 / 12.0).abs() <= 1e-12 * molar.abs().max(1.0));
    }
}

#[test]
fn annuity_factor_approaches_perpetuity_limit() {
    let f = annuity_factor(0.07, 10_000, AnnuityTiming::Ordinary).unwrap();
    assert!((f - 14.285714).abs() < 1e-6);
}
