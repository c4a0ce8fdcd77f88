//! Hydrological conditioning of the DEM and slope-length factors.
//!
//! The chain is pit filling → D8 flow direction → flow accumulation →
//! LS factor. All stages are pure functions of their inputs and the
//! outputs are deterministic regardless of how the caller schedules them.
//!
//! Routing is single-flow-direction D8: each cell drains to the steepest
//! descent among its eight neighbours, diagonals weighted by √2, ties
//! broken in the fixed order E, SE, S, SW, W, NW, N, NE. Cells with no
//! lower neighbour on the grid edge (or beside nodata) are outlets.
//! Flats left by exact pit filling are drained by a breadth-first sweep
//! from the cells that already have a direction, so every flat cell points
//! toward the front that flooded it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::grid::{assert_aligned, Grid};
use crate::{Error, Result};

/// The eight D8 directions in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir8 {
    E,
    SE,
    S,
    SW,
    W,
    NW,
    N,
    NE,
}

impl Dir8 {
    pub const ALL: [Dir8; 8] = [
        Dir8::E,
        Dir8::SE,
        Dir8::S,
        Dir8::SW,
        Dir8::W,
        Dir8::NW,
        Dir8::N,
        Dir8::NE,
    ];

    /// `(d_row, d_col)` with row 0 at the north edge.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Dir8::E => (0, 1),
            Dir8::SE => (1, 1),
            Dir8::S => (1, 0),
            Dir8::SW => (1, -1),
            Dir8::W => (0, -1),
            Dir8::NW => (-1, -1),
            Dir8::N => (-1, 0),
            Dir8::NE => (-1, 1),
        }
    }

    /// Distance to the neighbour in units of cellsize (1 or √2).
    pub fn distance_factor(self) -> f64 {
        match self {
            Dir8::E | Dir8::S | Dir8::W | Dir8::N => 1.0,
            _ => std::f64::consts::SQRT_2,
        }
    }

    pub fn opposite(self) -> Dir8 {
        match self {
            Dir8::E => Dir8::W,
            Dir8::SE => Dir8::NW,
            Dir8::S => Dir8::N,
            Dir8::SW => Dir8::NE,
            Dir8::W => Dir8::E,
            Dir8::NW => Dir8::SE,
            Dir8::N => Dir8::S,
            Dir8::NE => Dir8::SW,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Dir8::E => "E",
            Dir8::SE => "SE",
            Dir8::S => "S",
            Dir8::SW => "SW",
            Dir8::W => "W",
            Dir8::NW => "NW",
            Dir8::N => "N",
            Dir8::NE => "NE",
        }
    }
}

/// State of one cell in a flow-direction grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowCell {
    NoData,
    /// Drains off the grid (edge or nodata boundary).
    Outlet,
    Flow(Dir8),
}

/// Per-cell D8 directions aligned to the source DEM.
///
/// Following directions from any valid cell terminates at an outlet; the
/// graph is acyclic by construction (strict descent, or breadth-first
/// order across flats).
#[derive(Debug, Clone)]
pub struct FlowDirGrid {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    cells: Vec<FlowCell>,
}

impl FlowDirGrid {
    /// Assemble from raw parts (used by tests and synthetic fixtures).
    pub fn from_parts(template: &Grid, cells: Vec<FlowCell>) -> Result<Self> {
        if cells.len() != template.ncols() * template.nrows() {
            return Err(Error::InvalidGrid(format!(
                "expected {} flow cells, got {}",
                template.ncols() * template.nrows(),
                cells.len()
            )));
        }
        Ok(FlowDirGrid {
            ncols: template.ncols(),
            nrows: template.nrows(),
            xll: template.xll(),
            yll: template.yll(),
            cellsize: template.cellsize(),
            nodata: template.nodata(),
            cells,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    #[inline]
    fn index(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> FlowCell {
        self.cells[self.index(row, col)]
    }

    /// Downstream neighbour of a cell, `None` for outlets and nodata.
    pub fn target(&self, row: usize, col: usize) -> Option<(usize, usize)> {
        match self.cell(row, col) {
            FlowCell::Flow(d) => {
                let (dr, dc) = d.offset();
                let nr = row as isize + dr;
                let nc = col as isize + dc;
                debug_assert!(
                    nr >= 0 && nc >= 0 && (nr as usize) < self.nrows && (nc as usize) < self.ncols
                );
                Some((nr as usize, nc as usize))
            }
            _ => None,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| !matches!(c, FlowCell::NoData))
            .count()
    }

    /// Grid sharing this flow grid's geometry, filled with `fill`.
    pub fn empty_grid(&self, fill: f64) -> Grid {
        Grid::new(
            self.ncols,
            self.nrows,
            self.xll,
            self.yll,
            self.cellsize,
            self.nodata,
            vec![fill; self.ncols * self.nrows],
        )
        .expect("geometry is valid")
    }

    /// Cell indices in upstream-to-downstream order (Kahn's algorithm).
    /// Fails if the directions contain a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.ncols * self.nrows;
        let mut indegree = vec![0u32; n];
        for row in 0..self.nrows {
            for col in 0..self.ncols {
                if let Some((tr, tc)) = self.target(row, col) {
                    indegree[self.index(tr, tc)] += 1;
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..n)
            .filter(|&i| !matches!(self.cells[i], FlowCell::NoData) && indegree[i] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.valid_count());
        while let Some(i) = queue.pop_front() {
            order.push(i);
            let (row, col) = (i / self.ncols, i % self.ncols);
            if let Some((tr, tc)) = self.target(row, col) {
                let t = self.index(tr, tc);
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        let valid = self.valid_count();
        if order.len() != valid {
            return Err(Error::FlowCycle {
                remaining: valid - order.len(),
            });
        }
        Ok(order)
    }
}

/// The RUSLE LS raster; alias kept for readability at call sites.
pub type LsGrid = Grid;

// ── Pit filling ──────────────────────────────────────────────────────────

/// f64 ordered by `total_cmp` for use in the flood heap.
#[derive(PartialEq)]
struct HeapElev(f64);

impl Eq for HeapElev {}

impl PartialOrd for HeapElev {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapElev {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Fill depressions by priority-flood: a water level rises from the grid
/// edge (and from nodata boundaries) and every cell below the level of the
/// front that reaches it is raised to that level.
///
/// The result is cellwise ≥ the input, cells outside depressions are
/// unchanged, and every valid cell has a non-ascending path to a grid edge
/// or nodata boundary. Filling is exact (no epsilon gradient is imposed);
/// the resulting flats are drained later by [`flow_direction_d8`].
pub fn fill_pits(dem: &Grid) -> Result<Grid> {
    let (nrows, ncols) = (dem.nrows(), dem.ncols());
    let n = nrows * ncols;
    let mut filled = dem.clone();
    let mut visited = vec![false; n];
    // (elevation, insertion sequence, index): the sequence number makes
    // tie handling deterministic.
    let mut heap: BinaryHeap<Reverse<(HeapElev, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;

    let push = |heap: &mut BinaryHeap<_>, seq: &mut u64, z: f64, i: usize| {
        heap.push(Reverse((HeapElev(z), *seq, i)));
        *seq += 1;
    };

    for row in 0..nrows {
        for col in 0..ncols {
            if !dem.is_valid(row, col) {
                continue;
            }
            let on_edge = row == 0 || row == nrows - 1 || col == 0 || col == ncols - 1;
            let beside_nodata = Dir8::ALL.iter().any(|d| {
                let (dr, dc) = d.offset();
                let nr = row as isize + dr;
                let nc = col as isize + dc;
                nr >= 0
                    && nc >= 0
                    && (nr as usize) < nrows
                    && (nc as usize) < ncols
                    && !dem.is_valid(nr as usize, nc as usize)
            });
            if on_edge || beside_nodata {
                let i = dem.index(row, col);
                visited[i] = true;
                push(&mut heap, &mut seq, dem.get(row, col), i);
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::AllNodata);
    }

    while let Some(Reverse((HeapElev(level), _, i))) = heap.pop() {
        let (row, col) = (i / ncols, i % ncols);
        for d in Dir8::ALL {
            let (dr, dc) = d.offset();
            let nr = row as isize + dr;
            let nc = col as isize + dc;
            if nr < 0 || nc < 0 || nr as usize >= nrows || nc as usize >= ncols {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            let j = dem.index(nr, nc);
            if visited[j] || !dem.is_valid(nr, nc) {
                continue;
            }
            visited[j] = true;
            let z = dem.get(nr, nc).max(level);
            filled.set(nr, nc, z);
            push(&mut heap, &mut seq, z, j);
        }
    }
    Ok(filled)
}

// ── Flow direction ───────────────────────────────────────────────────────

/// Assign D8 directions on a pit-filled DEM.
///
/// Each valid cell points to the neighbour with the steepest drop per unit
/// distance; equal drops resolve to the first direction in tie-break
/// order. A cell with no lower neighbour becomes an outlet if it touches
/// the grid edge or a nodata cell, and otherwise must sit on a flat that
/// can drain through equal-elevation neighbours; flats with no such exit
/// are reported as unresolved (the DEM was not pit-filled).
pub fn flow_direction_d8(dem: &Grid) -> Result<FlowDirGrid> {
    let (nrows, ncols) = (dem.nrows(), dem.ncols());
    let mut cells = vec![FlowCell::NoData; nrows * ncols];
    let mut unresolved: Vec<usize> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    for row in 0..nrows {
        for col in 0..ncols {
            let i = dem.index(row, col);
            let Some(z0) = dem.value(row, col) else {
                continue;
            };
            let mut best_drop = 0.0f64;
            let mut best_dir: Option<Dir8> = None;
            let mut beside_boundary = row == 0 || row == nrows - 1 || col == 0 || col == ncols - 1;
            for d in Dir8::ALL {
                let (dr, dc) = d.offset();
                let nr = row as isize + dr;
                let nc = col as isize + dc;
                if nr < 0 || nc < 0 || nr as usize >= nrows || nc as usize >= ncols {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                let Some(zn) = dem.value(nr, nc) else {
                    beside_boundary = true;
                    continue;
                };
                let drop = (z0 - zn) / (d.distance_factor() * dem.cellsize());
                if drop > best_drop {
                    best_drop = drop;
                    best_dir = Some(d);
                }
            }
            if let Some(d) = best_dir {
                cells[i] = FlowCell::Flow(d);
                queue.push_back(i);
            } else if beside_boundary {
                cells[i] = FlowCell::Outlet;
                queue.push_back(i);
            } else {
                unresolved.push(i);
            }
        }
    }

    // Drain flats: breadth-first from every already-resolved cell, letting
    // an unresolved cell of equal elevation point back toward the front.
    let mut pending = unresolved.len();
    while let Some(i) = queue.pop_front() {
        if pending == 0 {
            break;
        }
        let (row, col) = (i / ncols, i % ncols);
        let z = dem.get(row, col);
        for d in Dir8::ALL {
            let (dr, dc) = d.offset();
            let nr = row as isize + dr;
            let nc = col as isize + dc;
            if nr < 0 || nc < 0 || nr as usize >= nrows || nc as usize >= ncols {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            let j = dem.index(nr, nc);
            if !matches!(cells[j], FlowCell::NoData) || !dem.is_valid(nr, nc) {
                continue;
            }
            if dem.get(nr, nc) == z {
                cells[j] = FlowCell::Flow(d.opposite());
                queue.push_back(j);
                pending -= 1;
            }
        }
    }
    if pending > 0 {
        let i = unresolved
            .into_iter()
            .find(|&i| matches!(cells[i], FlowCell::NoData))
            .expect("pending cells remain");
        return Err(Error::UnresolvedFlat {
            row: i / ncols,
            col: i % ncols,
        });
    }

    FlowDirGrid::from_parts(dem, cells)
}

// ── Flow accumulation ────────────────────────────────────────────────────

/// Number of cells draining through each cell, itself included.
///
/// Processed in topological order, so the total at the outlets equals the
/// number of valid cells. Fails on cyclic direction grids.
pub fn flow_accumulation(dirs: &FlowDirGrid) -> Result<Grid> {
    let order = dirs.topological_order()?;
    let mut acc = dirs.empty_grid(dirs.nodata());
    for &i in &order {
        let (row, col) = (i / dirs.ncols(), i % dirs.ncols());
        acc.set(row, col, 1.0);
    }
    for &i in &order {
        let (row, col) = (i / dirs.ncols(), i % dirs.ncols());
        if let Some((tr, tc)) = dirs.target(row, col) {
            let inc = acc.get(row, col);
            acc.set(tr, tc, acc.get(tr, tc) + inc);
        }
    }
    Ok(acc)
}

// ── LS factor ────────────────────────────────────────────────────────────

/// Configuration for the LS computation.
#[derive(Debug, Clone)]
pub struct LsParams {
    /// Slope-length cap λmax in metres; L is capped at √(λmax / 22.13).
    pub max_slope_length_m: f64,
}

impl Default for LsParams {
    fn default() -> Self {
        LsParams {
            max_slope_length_m: 333.0,
        }
    }
}

/// McCool slope-steepness factor.
fn s_factor(tan_theta: f64) -> f64 {
    let sin_theta = tan_theta / (1.0 + tan_theta * tan_theta).sqrt();
    if tan_theta < 0.09 {
        10.8 * sin_theta + 0.03
    } else {
        16.8 * sin_theta - 0.50
    }
}

/// Gradient magnitude at a cell from central differences, falling back to
/// one-sided differences beside edges and nodata.
fn gradient(dem: &Grid, row: usize, col: usize) -> f64 {
    let h = dem.cellsize();
    let z0 = dem.get(row, col);
    let axis = |prev: Option<f64>, next: Option<f64>| match (prev, next) {
        (Some(a), Some(b)) => (b - a) / (2.0 * h),
        (Some(a), None) => (z0 - a) / h,
        (None, Some(b)) => (b - z0) / h,
        (None, None) => 0.0,
    };
    let west = (col > 0).then(|| dem.value(row, col - 1)).flatten();
    let east = (col + 1 < dem.ncols())
        .then(|| dem.value(row, col + 1))
        .flatten();
    let north = (row > 0).then(|| dem.value(row - 1, col)).flatten();
    let south = (row + 1 < dem.nrows())
        .then(|| dem.value(row + 1, col))
        .flatten();
    let gx = axis(west, east);
    let gy = axis(north, south);
    (gx * gx + gy * gy).sqrt()
}

/// RUSLE LS factor per cell.
///
/// Slope comes from the pit-filled DEM gradient; the length factor is
/// L = √(A·cellsize / 22.13) with A the accumulation count, capped at the
/// configured slope-length limit. Nodata in either input propagates.
pub fn compute_ls(dem: &Grid, accum: &Grid, params: &LsParams) -> Result<LsGrid> {
    assert_aligned(dem, accum)?;
    let l_cap = (params.max_slope_length_m / 22.13).sqrt();
    let mut ls = Grid::like(dem, dem.nodata());
    for row in 0..dem.nrows() {
        for col in 0..dem.ncols() {
            let (Some(_), Some(acc)) = (dem.value(row, col), accum.value(row, col)) else {
                continue;
            };
            let tan_theta = gradient(dem, row, col);
            let l = (acc * dem.cellsize() / 22.13).sqrt().min(l_cap);
            ls.set(row, col, l * s_factor(tan_theta));
        }
    }
    Ok(ls)
}
