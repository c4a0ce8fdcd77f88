//! Raster data model and ESRI ASCII grid serialization.
//!
//! A [`Grid`] is a rectangular single-band raster of `f64` cell values with
//! a lower-left origin, square cells, and a nodata sentinel. Row 0 is the
//! northernmost row and cells are stored row-major, matching the ASCII grid
//! convention. Every numeric module in the crate consumes and produces
//! grids; layers are never reprojected, only checked for alignment.
//!
//! The one and only file format is the six-line-header ESRI ASCII grid:
//!
//! ```text
//! ncols 2
//! nrows 1
//! xllcorner 0
//! yllcorner 0
//! cellsize 10
//! NODATA_value -9999
//! 1 2
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! `read(write(g))` reproduces `g` exactly and a second serialization is
//! byte-identical to the first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Rectangular single-band raster. Row 0 is the northernmost row.
///
/// Grids are treated as immutable once a pipeline stage has produced them;
/// mutation is only used while a stage is building its output.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    ncols: usize,
    nrows: usize,
    xll: f64,
    yll: f64,
    cellsize: f64,
    nodata: f64,
    values: Vec<f64>,
}

impl Grid {
    /// Build a grid from parts, checking the structural invariants
    /// (`values.len() == ncols * nrows`, positive dimensions and cell size).
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {ncols}x{nrows}"
            )));
        }
        if cellsize.is_nan() || cellsize <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "cellsize must be positive, got {cellsize}"
            )));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                ncols * nrows,
                values.len()
            )));
        }
        Ok(Grid {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            values,
        })
    }

    /// Grid of constant `fill` value.
    pub fn filled(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cellsize: f64,
        nodata: f64,
        fill: f64,
    ) -> Result<Self> {
        Grid::new(
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata,
            vec![fill; ncols * nrows],
        )
    }

    /// New grid sharing `other`'s geometry, filled with `fill`.
    pub fn like(other: &Grid, fill: f64) -> Self {
        Grid {
            ncols: other.ncols,
            nrows: other.nrows,
            xll: other.xll,
            yll: other.yll,
            cellsize: other.cellsize,
            nodata: other.nodata,
            values: vec![fill; other.ncols * other.nrows],
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn xll(&self) -> f64 {
        self.xll
    }

    pub fn yll(&self) -> f64 {
        self.yll
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.nrows && col < self.ncols);
        row * self.ncols + col
    }

    /// Raw cell value, nodata sentinel included.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self.index(row, col);
        self.values[i] = value;
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.get(row, col) != self.nodata
    }

    /// Cell value, or `None` for nodata.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.get(row, col);
        (v != self.nodata).then_some(v)
    }

    /// Iterate valid cells as `(row, col, value)`.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (0..self.ncols).filter_map(move |c| self.value(r, c).map(|v| (r, c, v)))
        })
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != self.nodata).count()
    }

    /// Area of one cell in hectares: `cellsize^2 / 10_000`.
    pub fn cell_area_ha(&self) -> f64 {
        cell_area_ha(self)
    }

    /// Sum of all valid cell values.
    pub fn sum_valid(&self) -> f64 {
        self.values
            .iter()
            .filter(|&&v| v != self.nodata)
            .sum::<f64>()
    }

    /// Apply `f` to every valid cell, propagating nodata unchanged.
    pub fn map_valid(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Grid {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                if let Some(v) = self.value(r, c) {
                    out.set(r, c, f(r, c, v));
                }
            }
        }
        out
    }
}

/// Area of one cell in hectares.
pub fn cell_area_ha(g: &Grid) -> f64 {
    g.cellsize * g.cellsize / 10_000.0
}

/// Check that two grids share dimensions, cell size, and origin within
/// 1e-6 relative tolerance, naming the first differing field.
pub fn assert_aligned(a: &Grid, b: &Grid) -> Result<()> {
    fn close(x: f64, y: f64) -> bool {
        let scale = x.abs().max(y.abs()).max(1.0);
        (x - y).abs() <= 1e-6 * scale
    }
    if a.ncols != b.ncols {
        return Err(Error::Misaligned {
            field: "ncols",
            left: a.ncols as f64,
            right: b.ncols as f64,
        });
    }
    if a.nrows != b.nrows {
        return Err(Error::Misaligned {
            field: "nrows",
            left: a.nrows as f64,
            right: b.nrows as f64,
        });
    }
    if !close(a.cellsize, b.cellsize) {
        return Err(Error::Misaligned {
            field: "cellsize",
            left: a.cellsize,
            right: b.cellsize,
        });
    }
    if !close(a.xll, b.xll) {
        return Err(Error::Misaligned {
            field: "xllcorner",
            left: a.xll,
            right: b.xll,
        });
    }
    if !close(a.yll, b.yll) {
        return Err(Error::Misaligned {
            field: "yllcorner",
            left: a.yll,
            right: b.yll,
        });
    }
    Ok(())
}

// ── ASCII grid serialization ─────────────────────────────────────────────

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

/// Parse an ESRI ASCII grid from text.
///
/// The six header lines must appear in the canonical order (keys matched
/// case-insensitively), followed by exactly `ncols * nrows`
/// whitespace-separated values, row-major from the northernmost row.
pub fn read_ascii_grid(text: &str) -> Result<Grid> {
    let mut lines = text.lines().enumerate();
    let mut header = [0.0f64; 6];
    for (key_idx, expected) in HEADER_KEYS.iter().enumerate() {
        let (line_no, line) = lines.next().ok_or_else(|| Error::Parse {
            line: key_idx + 1,
            message: format!("missing header line {expected:?}"),
        })?;
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        if !key.eq_ignore_ascii_case(expected) {
            return Err(Error::Parse {
                line: line_no + 1,
                message: format!("expected header key {expected:?}, got {key:?}"),
            });
        }
        let raw = parts.next().ok_or_else(|| Error::Parse {
            line: line_no + 1,
            message: format!("header key {expected:?} has no value"),
        })?;
        header[key_idx] = raw.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no + 1,
            message: format!("non-numeric value {raw:?} for {expected:?}"),
        })?;
        if let Some(extra) = parts.next() {
            return Err(Error::Parse {
                line: line_no + 1,
                message: format!("unexpected token {extra:?} after header value"),
            });
        }
    }
    let ncols = parse_dimension(header[0], "ncols")?;
    let nrows = parse_dimension(header[1], "nrows")?;

    let mut values = Vec::with_capacity(ncols * nrows);
    let mut last_line = 7;
    for (line_no, line) in lines {
        last_line = line_no + 1;
        for token in line.split_whitespace() {
            let v = token.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("non-numeric cell value {token:?}"),
            })?;
            values.push(v);
        }
    }
    if values.len() != ncols * nrows {
        return Err(Error::Parse {
            line: last_line,
            message: format!("expected {} values, got {}", ncols * nrows, values.len()),
        });
    }
    Grid::new(
        ncols, nrows, header[2], header[3], header[4], header[5], values,
    )
}

fn parse_dimension(v: f64, name: &str) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > usize::MAX as f64 {
        return Err(Error::Parse {
            line: 1,
            message: format!("{name} must be a positive integer, got {v}"),
        });
    }
    Ok(v as usize)
}

/// Serialize a grid as an ESRI ASCII grid, one raster row per line.
///
/// Values use shortest round-trip formatting, so re-reading the output
/// reproduces the grid exactly and re-writing it is byte-identical.
pub fn write_ascii_grid(g: &Grid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", g.ncols);
    let _ = writeln!(out, "nrows {}", g.nrows);
    let _ = writeln!(out, "xllcorner {}", g.xll);
    let _ = writeln!(out, "yllcorner {}", g.yll);
    let _ = writeln!(out, "cellsize {}", g.cellsize);
    let _ = writeln!(out, "NODATA_value {}", g.nodata);
    for row in 0..g.nrows {
        for col in 0..g.ncols {
            if col > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", g.get(row, col));
        }
        out.push('\n');
    }
    out
}

/// Read an ASCII grid from a file.
pub fn read_ascii_grid_file(path: impl AsRef<Path>) -> Result<Grid> {
    let text = fs::read_to_string(path)?;
    read_ascii_grid(&text)
}

/// Write an ASCII grid to a file.
pub fn write_ascii_grid_file(g: &Grid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_ascii_grid(g))?;
    Ok(())
}

// ── Land cover ───────────────────────────────────────────────────────────

/// Raster whose valid cells are integer land-cover class identifiers.
#[derive(Debug, Clone)]
pub struct LandCoverGrid {
    grid: Grid,
    classes: Vec<u32>,
}

impl LandCoverGrid {
    /// Wrap a grid, checking that every valid cell holds a non-negative
    /// integer, and collecting the class identifiers present.
    pub fn from_grid(grid: Grid) -> Result<Self> {
        let mut classes: Vec<u32> = Vec::new();
        for (r, c, v) in grid.iter_valid() {
            if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                return Err(Error::InvalidGrid(format!(
                    "land-cover value {v} at ({r}, {c}) is not a class identifier"
                )));
            }
            let id = v as u32;
            if let Err(pos) = classes.binary_search(&id) {
                classes.insert(pos, id);
            }
        }
        Ok(LandCoverGrid { grid, classes })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Class identifiers present, ascending.
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    /// Class of a cell, or `None` for nodata.
    #[inline]
    pub fn class_at(&self, row: usize, col: usize) -> Option<u32> {
        self.grid.value(row, col).map(|v| v as u32)
    }

    /// Cell count per class.
    pub fn class_cell_counts(&self) -> BTreeMap<u32, usize> {
        let mut counts = BTreeMap::new();
        for (_, _, v) in self.grid.iter_valid() {
            *counts.entry(v as u32).or_insert(0usize) += 1;
        }
        counts
    }

    /// Area per class in hectares.
    pub fn class_areas_ha(&self) -> BTreeMap<u32, f64> {
        let area = self.grid.cell_area_ha();
        self.class_cell_counts()
            .into_iter()
            .map(|(id, n)| (id, n as f64 * area))
            .collect()
    }

    /// New land-cover grid keeping only the listed classes; every other
    /// cell becomes nodata. Used to cut the reporting boundary out of the
    /// full catchment cover.
    pub fn retain_classes(&self, keep: &[u32]) -> LandCoverGrid {
        let nodata = self.grid.nodata();
        let mut g = self.grid.clone();
        for r in 0..g.nrows() {
            for c in 0..g.ncols() {
                if let Some(id) = self.class_at(r, c) {
                    if !keep.contains(&id) {
                        g.set(r, c, nodata);
                    }
                }
            }
        }
        LandCoverGrid::from_grid(g).expect("masking preserves integer values")
    }
}
