//! Randomized oracle checks for the hydrology and erosion models.
//!
//! Each model result is compared against an independent brute-force
//! re-computation: a breadth-first drainage check for pit filling, a
//! path-walking accumulator for flow accumulation, and a per-source
//! cascade walk for sediment routing.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use natcap_core::erosion::{optimal_scenario_params, route_sediment, SedimentResult};
use natcap_core::grid::{Grid, LandCoverGrid};
use natcap_core::hydrology::{
    fill_pits, flow_accumulation, flow_direction_d8, FlowCell, FlowDirGrid,
};
use natcap_core::params::{CarbonPools, ClassParams, ClassTable};

const NODATA: f64 = -9999.0;

fn random_dem(rng: &mut StdRng, ncols: usize, nrows: usize, nodata_share: f64) -> Grid {
    loop {
        let values: Vec<f64> = (0..ncols * nrows)
            .map(|_| {
                if rng.gen_bool(nodata_share) {
                    NODATA
                } else {
                    rng.gen_range(0.0..100.0)
                }
            })
            .collect();
        if values.iter().any(|&v| v != NODATA) {
            return Grid::new(ncols, nrows, 0.0, 0.0, 10.0, NODATA, values).unwrap();
        }
    }
}

/// Breadth-first drainage oracle: the set of cells that can reach a grid
/// edge or nodata boundary along a never-ascending path, grown from the
/// boundary inward along never-descending steps.
fn cells_draining_to_edge(dem: &Grid) -> Vec<bool> {
    let (nrows, ncols) = (dem.nrows(), dem.ncols());
    let mut reachable = vec![false; nrows * ncols];
    let mut queue = std::collections::VecDeque::new();
    let neighbours = |r: usize, c: usize| {
        let mut out = Vec::with_capacity(8);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 && (nr as usize) < nrows && (nc as usize) < ncols {
                    out.push((nr as usize, nc as usize));
                }
            }
        }
        out
    };
    for r in 0..nrows {
        for c in 0..ncols {
            if !dem.is_valid(r, c) {
                continue;
            }
            let boundary = r == 0
                || r == nrows - 1
                || c == 0
                || c == ncols - 1
                || neighbours(r, c)
                    .iter()
                    .any(|&(nr, nc)| !dem.is_valid(nr, nc));
            if boundary {
                reachable[r * ncols + c] = true;
                queue.push_back((r, c));
            }
        }
    }
    while let Some((r, c)) = queue.pop_front() {
        let z = dem.get(r, c);
        for (nr, nc) in neighbours(r, c) {
            let i = nr * ncols + nc;
            if !reachable[i] && dem.is_valid(nr, nc) && dem.get(nr, nc) >= z {
                reachable[i] = true;
                queue.push_back((nr, nc));
            }
        }
    }
    reachable
}

#[test]
fn pit_filling_satisfies_the_drainage_oracle() {
    let mut rng = StdRng::seed_from_u64(101);
    for case in 0..200 {
        let dem = random_dem(&mut rng, 8, 8, if case % 3 == 0 { 0.15 } else { 0.0 });
        let filled = fill_pits(&dem).unwrap();
        // Never lowered, and unchanged cells are genuinely outside pits.
        for (v0, v1) in dem.values().iter().zip(filled.values()) {
            assert!(v1 >= v0 || *v0 == NODATA);
        }
        let reachable = cells_draining_to_edge(&filled);
        for r in 0..filled.nrows() {
            for c in 0..filled.ncols() {
                if filled.is_valid(r, c) {
                    assert!(
                        reachable[r * filled.ncols() + c],
                        "case {case} cell ({r},{c})"
                    );
                }
            }
        }
        // Idempotence.
        let refilled = fill_pits(&filled).unwrap();
        assert_eq!(filled.values(), refilled.values(), "case {case}");
    }
}

#[test]
fn flow_direction_is_acyclic_after_filling() {
    let mut rng = StdRng::seed_from_u64(202);
    for _ in 0..100 {
        let dem = random_dem(&mut rng, 10, 10, 0.05);
        let filled = fill_pits(&dem).unwrap();
        let dirs = flow_direction_d8(&filled).unwrap();
        assert!(dirs.topological_order().is_ok());
    }
}

/// Path-walking accumulation oracle: every cell walks its full downstream
/// path, incrementing itself and every visited cell.
fn oracle_accumulation(dirs: &FlowDirGrid) -> Vec<f64> {
    let (nrows, ncols) = (dirs.nrows(), dirs.ncols());
    let mut acc = vec![0.0f64; nrows * ncols];
    for r in 0..nrows {
        for c in 0..ncols {
            if matches!(dirs.cell(r, c), FlowCell::NoData) {
                continue;
            }
            let (mut cr, mut cc) = (r, c);
            let mut steps = 0;
            loop {
                acc[cr * ncols + cc] += 1.0;
                match dirs.target(cr, cc) {
                    Some((nr, nc)) => {
                        (cr, cc) = (nr, nc);
                        steps += 1;
                        assert!(steps <= nrows * ncols, "cycle in directions");
                    }
                    None => break,
                }
            }
        }
    }
    acc
}

#[test]
fn accumulation_matches_path_walking_oracle() {
    let mut rng = StdRng::seed_from_u64(303);
    for _ in 0..100 {
        let dem = random_dem(&mut rng, 8, 8, 0.1);
        let filled = fill_pits(&dem).unwrap();
        let dirs = flow_direction_d8(&filled).unwrap();
        let acc = flow_accumulation(&dirs).unwrap();
        let oracle = oracle_accumulation(&dirs);
        for r in 0..8 {
            for c in 0..8 {
                if filled.is_valid(r, c) {
                    assert_eq!(acc.get(r, c), oracle[r * 8 + c]);
                }
            }
        }
        // Every valid cell drains through exactly one outlet.
        let mut outlet_sum = 0.0;
        for r in 0..8 {
            for c in 0..8 {
                if matches!(dirs.cell(r, c), FlowCell::Outlet) {
                    outlet_sum += acc.get(r, c);
                }
            }
        }
        assert_eq!(outlet_sum as usize, filled.valid_count());
    }
}

// ── Sediment routing oracle ──────────────────────────────────────────────

struct Catchment {
    loss: Grid,
    dirs: FlowDirGrid,
    table: ClassTable,
    landcover: LandCoverGrid,
}

fn class_entry(name: &str, native: bool, trap: f64) -> ClassParams {
    ClassParams {
        name: name.into(),
        native,
        c_factor: 0.1,
        p_factor: 1.0,
        trap_eff: trap,
        pools: CarbonPools {
            above_ground: 10.0,
            below_ground: 4.0,
            dead: 1.0,
        },
    }
}

fn random_catchment(rng: &mut StdRng, max_side: usize) -> Catchment {
    let ncols = rng.gen_range(2..=max_side);
    let nrows = rng.gen_range(2..=max_side);
    let dem = random_dem(rng, ncols, nrows, 0.05);
    let filled = fill_pits(&dem).unwrap();
    let dirs = flow_direction_d8(&filled).unwrap();
    let nclasses = rng.gen_range(1..=4u32);
    let mut table = ClassTable::new();
    for id in 0..nclasses {
        table.insert(
            id,
            class_entry(
                &format!("class {id}"),
                id % 2 == 0,
                rng.gen_range(0.0..=1.0),
            ),
        );
    }
    let mut loss = Grid::like(&filled, NODATA);
    let mut cover = Grid::like(&filled, NODATA);
    for r in 0..nrows {
        for c in 0..ncols {
            if filled.is_valid(r, c) {
                loss.set(r, c, rng.gen_range(0.0..10.0));
                cover.set(r, c, rng.gen_range(0..nclasses) as f64);
            }
        }
    }
    Catchment {
        loss,
        dirs,
        table,
        landcover: LandCoverGrid::from_grid(cover).unwrap(),
    }
}

/// Independent cascade walk: each source cell's load travels its whole
/// flow path, attenuated by (1 − trap) at every downstream cell.
fn oracle_route(catchment: &Catchment) -> (Vec<f64>, f64) {
    let dirs = &catchment.dirs;
    let ncols = dirs.ncols();
    let n = ncols * dirs.nrows();
    let mut trapped = vec![0.0f64; n];
    let mut exported = 0.0f64;
    for r in 0..dirs.nrows() {
        for c in 0..ncols {
            if matches!(dirs.cell(r, c), FlowCell::NoData) {
                continue;
            }
            let mut remaining = catchment.loss.value(r, c).unwrap_or(0.0);
            let (mut cr, mut cc) = (r, c);
            let mut steps = 0;
            loop {
                match dirs.target(cr, cc) {
                    Some((nr, nc)) => {
                        let eff = catchment
                            .landcover
                            .class_at(nr, nc)
                            .map(|class| catchment.table.get(class).unwrap().trap_eff)
                            .unwrap_or(0.0);
                        trapped[nr * ncols + nc] += remaining * eff;
                        remaining *= 1.0 - eff;
                        (cr, cc) = (nr, nc);
                        steps += 1;
                        assert!(steps <= n);
                    }
                    None => {
                        exported += remaining;
                        break;
                    }
                }
            }
        }
    }
    (trapped, exported)
}

fn route(catchment: &Catchment) -> SedimentResult {
    route_sediment(
        &catchment.loss,
        &catchment.dirs,
        &catchment.table,
        &catchment.landcover,
    )
    .unwrap()
}

#[test]
fn routing_matches_cascade_oracle_and_conserves_mass() {
    let mut rng = StdRng::seed_from_u64(404);
    for case in 0..300 {
        let catchment = random_catchment(&mut rng, 12);
        let result = route(&catchment);
        let (oracle_trapped, oracle_exported) = oracle_route(&catchment);
        let ncols = catchment.dirs.ncols();
        for r in 0..catchment.dirs.nrows() {
            for c in 0..ncols {
                if let Some(t) = result.trapped.value(r, c) {
                    let o = oracle_trapped[r * ncols + c];
                    assert!(
                        (t - o).abs() <= 1e-9 * o.abs().max(1.0),
                        "case {case} cell ({r},{c}): {t} vs {o}"
                    );
                }
            }
        }
        assert!(
            (result.exported_at_outlets - oracle_exported).abs()
                <= 1e-9 * oracle_exported.abs().max(1.0),
            "case {case}"
        );
        let generated = result.total_generated();
        let balance = result.total_trapped() + result.exported_at_outlets;
        assert!(
            (generated - balance).abs() <= 1e-6 * generated.abs().max(1.0),
            "case {case}: {generated} vs {balance}"
        );
        // Per-class tallies add up to the trapped total.
        let per_class_sum: f64 = result.per_class_trapped.values().sum();
        assert!((per_class_sum - result.total_trapped()).abs() <= 1e-9 * per_class_sum.max(1.0));
    }
}

#[test]
fn raising_trap_efficiency_never_reduces_total_trapped() {
    let mut rng = StdRng::seed_from_u64(505);
    for _ in 0..100 {
        let mut catchment = random_catchment(&mut rng, 10);
        let before = route(&catchment);
        // Raise one class's efficiency.
        let ids: Vec<u32> = catchment.table.ids().collect();
        let pick = ids[rng.gen_range(0..ids.len())];
        let mut params = catchment.table.get(pick).unwrap().clone();
        params.trap_eff = (params.trap_eff + rng.gen_range(0.0..=1.0)).min(1.0);
        catchment.table.insert(pick, params);
        let after = route(&catchment);
        assert!(after.total_trapped() >= before.total_trapped() - 1e-9);
        assert!(after.exported_at_outlets <= before.exported_at_outlets + 1e-9);
    }
}

#[test]
fn routing_is_scale_equivariant() {
    let mut rng = StdRng::seed_from_u64(606);
    for _ in 0..50 {
        let catchment = random_catchment(&mut rng, 10);
        let scale = rng.gen_range(0.1..50.0);
        let base = route(&catchment);
        let scaled_catchment = Catchment {
            loss: catchment.loss.map_valid(|_, _, v| v * scale),
            ..catchment
        };
        let scaled = route(&scaled_catchment);
        assert!(
            (scaled.total_trapped() - scale * base.total_trapped()).abs()
                <= 1e-9 * scaled.total_trapped().max(1.0)
        );
        assert!(
            (scaled.exported_at_outlets - scale * base.exported_at_outlets).abs()
                <= 1e-9 * scaled.exported_at_outlets.max(1.0)
        );
    }
}

#[test]
fn optimal_substitution_never_reduces_portfolio_trapping() {
    let mut rng = StdRng::seed_from_u64(707);
    for _ in 0..100 {
        let catchment = random_catchment(&mut rng, 10);
        if !catchment.table.iter().any(|(_, p)| p.native) {
            continue;
        }
        let before = route(&catchment);
        let optimal = Catchment {
            table: optimal_scenario_params(&catchment.table).unwrap(),
            ..catchment
        };
        let after = route(&optimal);
        assert!(after.total_trapped() >= before.total_trapped() - 1e-9);
    }
}

#[test]
fn per_class_trapped_keys_come_from_landcover() {
    let mut rng = StdRng::seed_from_u64(808);
    let catchment = random_catchment(&mut rng, 8);
    let result = route(&catchment);
    let classes: BTreeMap<u32, ()> = catchment
        .landcover
        .classes()
        .iter()
        .map(|&c| (c, ()))
        .collect();
    for class in result.per_class_trapped.keys() {
        assert!(classes.contains_key(class));
    }
}
