//! Natural-capital accounting engine for riparian land assets.
//!
//! The crate models two ecosystem services from gridded spatial inputs —
//! sediment filtration by riparian vegetation and carbon storage — values
//! them in monetary terms, and assembles the results into ecosystem
//! accounts and financial-statement style disclosures.
//!
//! Pipeline, bottom to top:
//!
//! 1. [`grid`] — raster data model and ESRI ASCII grid serialization.
//! 2. [`hydrology`] — pit filling, D8 flow direction/accumulation, LS factor.
//! 3. [`erosion`] — RUSLE soil loss, downslope routing with per-class
//!    trapping, and the filtration-service aggregation.
//! 4. [`carbon`] — three-pool carbon stocks per land-cover class.
//! 5. [`accounts`] — extent and physical-flow accounts.
//! 6. [`valuation`] — avoided-cost pricing, annuity NPV, carbon pricing.
//! 7. [`statements`] — environmental P&L, natural capital balance sheet,
//!    and supporting notes, under three disclosure alternatives.
//!
//! All numeric work is done on unrounded `f64`; quantities are rounded
//! only when a table is rendered.

pub mod accounts;
pub mod carbon;
pub mod erosion;
mod error;
pub mod grid;
pub mod hydrology;
pub mod params;
pub mod render;
pub mod statements;
pub mod valuation;

pub use error::{Error, Result};
