//! Run configuration: an INI-style file of `key = value` sections naming
//! the input rasters, the class parameter table, the reporting boundary,
//! period labels, valuation parameters, and output options.
//!
//! Only the raster paths, class table, asset classes, and period labels
//! are required; every valuation parameter has a default. Relative paths
//! are resolved against the directory containing the config file.
//!
//! ```ini
//! [rasters]
//! dem = dem.asc
//! r_factor = r_factor.asc
//! k_factor = k_factor.asc
//! landcover = landcover.asc
//!
//! [classes]
//! table = class_params.csv
//! asset_classes = 1,2,3,4,5,6,7,8,9
//!
//! [periods]
//! baseline = 2013
//! scenario = 2023
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use natcap_core::accounts::{PerHaTotals, PeriodLabels};
use natcap_core::statements::DisclosureAlternative;
use natcap_core::valuation::{AnnuityTiming, ValuationParams};

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dem: PathBuf,
    pub r_factor: PathBuf,
    pub k_factor: PathBuf,
    pub landcover: PathBuf,
    /// Closing-period land cover; the opening cover is reused when absent.
    pub landcover_scenario: Option<PathBuf>,
    pub class_table: PathBuf,
    /// Classes that form the riparian reporting boundary.
    pub asset_classes: Vec<u32>,
    pub periods: PeriodLabels,
    pub valuation: ValuationParams,
    pub per_ha_totals: PerHaTotals,
    pub alternative: DisclosureAlternative,
    pub out_dir: PathBuf,
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

fn parse_ini(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got {raw:?}", lineno + 1);
        };
        let Some(section) = &current else {
            bail!(
                "line {}: `{}` appears before any [section]",
                lineno + 1,
                key.trim()
            );
        };
        let previous = sections
            .get_mut(section)
            .expect("section exists")
            .insert(key.trim().to_string(), value.trim().to_string());
        if previous.is_some() {
            bail!(
                "line {}: duplicate key [{section}].{}",
                lineno + 1,
                key.trim()
            );
        }
    }
    Ok(sections)
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl<'a> Reader<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&'a str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    fn require(&self, section: &str, key: &str) -> Result<&'a str> {
        self.get(section, key)
            .ok_or_else(|| anyhow!("missing required key [{section}].{key}"))
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| anyhow!("[{section}].{key}: invalid value {raw:?}")),
        }
    }
}

/// Load and validate a run configuration.
///
/// Checks that every referenced file exists and that the parameter values
/// are in range; grid alignment and class coverage are verified when the
/// pipeline loads the rasters themselves.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let sections = parse_ini(&text).with_context(|| format!("config {}", path.display()))?;
    let reader = Reader {
        sections: &sections,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |raw: &str| -> PathBuf { base.join(raw) };

    let file = |section: &str, key: &str| -> Result<PathBuf> {
        let p = resolve(reader.require(section, key)?);
        if !p.is_file() {
            bail!("[{section}].{key}: file not found: {}", p.display());
        }
        Ok(p)
    };

    let dem = file("rasters", "dem")?;
    let r_factor = file("rasters", "r_factor")?;
    let k_factor = file("rasters", "k_factor")?;
    let landcover = file("rasters", "landcover")?;
    let landcover_scenario = match reader.get("rasters", "landcover_scenario") {
        Some(raw) => {
            let p = resolve(raw);
            if !p.is_file() {
                bail!(
                    "[rasters].landcover_scenario: file not found: {}",
                    p.display()
                );
            }
            Some(p)
        }
        None => None,
    };
    let class_table = file("classes", "table")?;

    let asset_classes: Vec<u32> = reader
        .require("classes", "asset_classes")?
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("[classes].asset_classes: invalid class id {tok:?}"))
        })
        .collect::<Result<_>>()?;
    if asset_classes.is_empty() {
        bail!("[classes].asset_classes: at least one class id is required");
    }

    let periods = PeriodLabels::new(
        reader.require("periods", "baseline")?,
        reader.require("periods", "scenario")?,
    );

    let defaults = ValuationParams::default();
    let annuity_timing = match reader.get("valuation", "annuity_timing") {
        None => defaults.annuity_timing,
        Some("ordinary") => AnnuityTiming::Ordinary,
        Some("due") => AnnuityTiming::Due,
        Some(other) => bail!("[valuation].annuity_timing: expected ordinary or due, got {other:?}"),
    };
    let scc_prices = match reader.get("valuation", "scc_prices") {
        None => defaults.scc_prices.clone(),
        Some(raw) => raw
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("[valuation].scc_prices: invalid price {tok:?}"))
            })
            .collect::<Result<_>>()?,
    };
    let valuation = ValuationParams {
        sediment_unit_cost: reader
            .parse("valuation", "sediment_unit_cost")?
            .unwrap_or(defaults.sediment_unit_cost),
        discount_rate: reader
            .parse("valuation", "discount_rate")?
            .unwrap_or(defaults.discount_rate),
        horizon_years: reader
            .parse("valuation", "horizon_years")?
            .unwrap_or(defaults.horizon_years),
        annuity_timing,
        carbon_price: reader
            .parse("valuation", "carbon_price")?
            .unwrap_or(defaults.carbon_price),
        scc_prices,
        c_to_co2: reader
            .parse("valuation", "c_to_co2")?
            .unwrap_or(defaults.c_to_co2),
    };
    valuation
        .validate()
        .map_err(|e| anyhow!("[valuation]: {e}"))?;

    let per_ha_totals = match reader.get("accounts", "per_ha_totals") {
        None => PerHaTotals::default(),
        Some("portfolio_per_area") => PerHaTotals::PortfolioPerArea,
        Some("class_mean") => PerHaTotals::ClassMean,
        Some(other) => bail!(
            "[accounts].per_ha_totals: expected portfolio_per_area or class_mean, got {other:?}"
        ),
    };

    let alternative = match reader.get("output", "alternative") {
        None => DisclosureAlternative::Voluntary,
        Some(raw) => DisclosureAlternative::parse(raw).ok_or_else(|| {
            anyhow!(
                "[output].alternative: expected balance_sheet_item, notes_only, or voluntary, \
                 got {raw:?}"
            )
        })?,
    };
    let out_dir = resolve(reader.get("output", "directory").unwrap_or("out"));

    Ok(RunConfig {
        dem,
        r_factor,
        k_factor,
        landcover,
        landcover_scenario,
        class_table,
        asset_classes,
        periods,
        valuation,
        per_ha_totals,
        alternative,
        out_dir,
    })
}

/// Serialize a configuration back to canonical INI text. Paths are
/// emitted as stored (absolute after loading), so the output reparses to
/// an identical configuration.
pub fn to_conf_string(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let path = |p: &Path| p.display().to_string();
    let _ = writeln!(out, "[rasters]");
    let _ = writeln!(out, "dem = {}", path(&cfg.dem));
    let _ = writeln!(out, "r_factor = {}", path(&cfg.r_factor));
    let _ = writeln!(out, "k_factor = {}", path(&cfg.k_factor));
    let _ = writeln!(out, "landcover = {}", path(&cfg.landcover));
    if let Some(p) = &cfg.landcover_scenario {
        let _ = writeln!(out, "landcover_scenario = {}", path(p));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[classes]");
    let _ = writeln!(out, "table = {}", path(&cfg.class_table));
    let ids: Vec<String> = cfg.asset_classes.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "asset_classes = {}", ids.join(","));
    let _ = writeln!(out);
    let _ = writeln!(out, "[periods]");
    let _ = writeln!(out, "baseline = {}", cfg.periods.baseline);
    let _ = writeln!(out, "scenario = {}", cfg.periods.scenario);
    let _ = writeln!(out);
    let _ = writeln!(out, "[valuation]");
    let v = &cfg.valuation;
    let _ = writeln!(out, "sediment_unit_cost = {}", v.sediment_unit_cost);
    let _ = writeln!(out, "discount_rate = {}", v.discount_rate);
    let _ = writeln!(out, "horizon_years = {}", v.horizon_years);
    let timing = match v.annuity_timing {
        AnnuityTiming::Ordinary => "ordinary",
        AnnuityTiming::Due => "due",
    };
    let _ = writeln!(out, "annuity_timing = {timing}");
    let _ = writeln!(out, "carbon_price = {}", v.carbon_price);
    let prices: Vec<String> = v.scc_prices.iter().map(f64::to_string).collect();
    let _ = writeln!(out, "scc_prices = {}", prices.join(","));
    let _ = writeln!(out, "c_to_co2 = {}", v.c_to_co2);
    let _ = writeln!(out);
    let _ = writeln!(out, "[accounts]");
    let convention = match cfg.per_ha_totals {
        PerHaTotals::PortfolioPerArea => "portfolio_per_area",
        PerHaTotals::ClassMean => "class_mean",
    };
    let _ = writeln!(out, "per_ha_totals = {convention}");
    let _ = writeln!(out);
    let _ = writeln!(out, "[output]");
    let _ = writeln!(out, "directory = {}", path(&cfg.out_dir));
    let _ = writeln!(out, "alternative = {}", cfg.alternative.as_str());
    out
}
