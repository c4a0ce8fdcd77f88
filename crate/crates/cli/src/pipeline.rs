//! Pipeline orchestration: ingestion → hydrology → erosion and carbon
//! models → accounts → valuation → statements, with atomic output.
//!
//! Every artifact is rendered in memory first; files reach the output
//! directory only after the whole run has succeeded, staged through a
//! temporary directory and renamed into place. A failed run therefore
//! leaves the output directory exactly as it was.
//!
//! The optimal scenario is generated from the baseline parameter table by
//! the native-maximum substitution, not read from separate rasters: the
//! same DEM, erosivity, erodibility, and land cover drive both periods.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use natcap_core::accounts::{
    build_extent_account, build_physical_flow_account, ExtentAccount, PhysicalFlowAccount,
    SERVICE_CARBON, SERVICE_SEDIMENT,
};
use natcap_core::carbon::carbon_storage;
use natcap_core::erosion::{
    filtration_service, optimal_scenario_params, route_sediment, soil_loss, RusleInputs,
};
use natcap_core::grid::{read_ascii_grid_file, LandCoverGrid};
use natcap_core::hydrology::{
    compute_ls, fill_pits, flow_accumulation, flow_direction_d8, LsParams,
};
use natcap_core::params::ClassTable;
use natcap_core::statements::{
    build_statement_set, select_disclosure, OutputFormat, RenderedFile, ServiceClassification,
    StatementSet,
};
use natcap_core::valuation::{build_monetary_account, MonetaryAccount};

use crate::config::RunConfig;

/// Pipeline stages the CLI can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Extent,
    Physical,
    Monetary,
    Statements,
    All,
}

/// Everything the models need, loaded and cross-checked.
pub struct Inputs {
    pub dem: natcap_core::grid::Grid,
    pub r_factor: natcap_core::grid::Grid,
    pub k_factor: natcap_core::grid::Grid,
    pub landcover: LandCoverGrid,
    pub landcover_scenario: Option<LandCoverGrid>,
    pub classes: ClassTable,
}

/// Load rasters and the class table, asserting grid alignment and that
/// the table covers every mapped class.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let read = |path: &Path| {
        read_ascii_grid_file(path).with_context(|| format!("reading {}", path.display()))
    };
    let dem = read(&cfg.dem)?;
    let r_factor = read(&cfg.r_factor)?;
    let k_factor = read(&cfg.k_factor)?;
    let landcover = LandCoverGrid::from_grid(read(&cfg.landcover)?)
        .with_context(|| format!("land cover {}", cfg.landcover.display()))?;
    let landcover_scenario = match &cfg.landcover_scenario {
        Some(path) => Some(
            LandCoverGrid::from_grid(read(path)?)
                .with_context(|| format!("land cover {}", path.display()))?,
        ),
        None => None,
    };
    for (name, grid) in [
        ("r_factor", &r_factor),
        ("k_factor", &k_factor),
        ("landcover", landcover.grid()),
    ] {
        natcap_core::grid::assert_aligned(&dem, grid)
            .with_context(|| format!("{name} is not aligned with the DEM"))?;
    }
    for (name, grid) in [("r_factor", &r_factor), ("k_factor", &k_factor)] {
        if let Some((r, c, v)) = grid.iter_valid().find(|&(_, _, v)| v < 0.0) {
            bail!("{name}: negative value {v} at ({r}, {c})");
        }
    }
    if let Some(lc) = &landcover_scenario {
        natcap_core::grid::assert_aligned(&dem, lc.grid())
            .context("landcover_scenario is not aligned with the DEM")?;
    }

    let classes = ClassTable::from_csv_file(&cfg.class_table)
        .with_context(|| format!("class table {}", cfg.class_table.display()))?;
    classes
        .covers(landcover.classes())
        .context("class table does not cover the land cover")?;
    if let Some(lc) = &landcover_scenario {
        classes
            .covers(lc.classes())
            .context("class table does not cover the scenario land cover")?;
    }
    for id in &cfg.asset_classes {
        classes
            .require(*id)
            .with_context(|| format!("asset class {id} has no parameter row"))?;
    }
    Ok(Inputs {
        dem,
        r_factor,
        k_factor,
        landcover,
        landcover_scenario,
        classes,
    })
}

/// Model results shared by the account builders.
pub struct ModelOutputs {
    pub extent: ExtentAccount,
    pub sediment: PhysicalFlowAccount,
    pub carbon: PhysicalFlowAccount,
    pub monetary: MonetaryAccount,
    pub statements: StatementSet,
}

/// Run the physical models and assemble every account and statement.
pub fn run_models(cfg: &RunConfig, inputs: &Inputs) -> Result<ModelOutputs> {
    let filled = fill_pits(&inputs.dem)?;
    let dirs = flow_direction_d8(&filled)?;
    let accum = flow_accumulation(&dirs)?;
    let ls = compute_ls(&filled, &accum, &LsParams::default())?;

    let baseline_table = &inputs.classes;
    let scenario_table = optimal_scenario_params(baseline_table)?;
    let mask = inputs.landcover.retain_classes(&cfg.asset_classes);
    let names: BTreeMap<u32, String> = baseline_table
        .names()
        .into_iter()
        .filter(|(id, _)| cfg.asset_classes.contains(id))
        .collect();

    // Sediment: soil loss and routing under each parameter table.
    let mut service_maps = Vec::new();
    for table in [baseline_table, &scenario_table] {
        let rusle = RusleInputs {
            r_factor: &inputs.r_factor,
            k_factor: &inputs.k_factor,
            ls: &ls,
            classes: table,
        };
        let loss = soil_loss(&rusle, &inputs.landcover)?;
        let routed = route_sediment(&loss, &dirs, table, &inputs.landcover)?;
        service_maps.push(filtration_service(&routed, &mask)?);
    }
    let (sediment_base, sediment_opt) = (&service_maps[0], &service_maps[1]);
    let tonnes = |m: &BTreeMap<u32, natcap_core::erosion::ServiceQuantity>| -> BTreeMap<u32, f64> {
        m.iter().map(|(&id, q)| (id, q.tonnes)).collect()
    };
    let areas: BTreeMap<u32, f64> = sediment_base
        .iter()
        .map(|(&id, q)| (id, q.area_ha))
        .collect();
    let sediment = build_physical_flow_account(
        SERVICE_SEDIMENT,
        "t/yr",
        &tonnes(sediment_base),
        &tonnes(sediment_opt),
        &areas,
        &names,
        &cfg.periods,
        cfg.per_ha_totals,
        1,
    )?;

    // Carbon: class-level stocks under each table.
    let carbon_base = carbon_storage(&mask, baseline_table)?;
    let carbon_opt = carbon_storage(&mask, &scenario_table)?;
    let carbon = build_physical_flow_account(
        SERVICE_CARBON,
        "t C",
        &carbon_base.tonnes_by_class(),
        &carbon_opt.tonnes_by_class(),
        &carbon_base.areas_by_class(),
        &names,
        &cfg.periods,
        cfg.per_ha_totals,
        0,
    )?;

    // Extent: opening vs closing cover inside the reporting boundary.
    let mask_scenario = inputs
        .landcover_scenario
        .as_ref()
        .map(|lc| lc.retain_classes(&cfg.asset_classes));
    let extent = build_extent_account(
        &mask,
        mask_scenario.as_ref().unwrap_or(&mask),
        &names,
        &cfg.periods,
    )?;

    let monetary = build_monetary_account(&[&sediment, &carbon], &cfg.valuation)?;
    let statements = build_statement_set(
        &[&sediment, &carbon],
        &monetary,
        &cfg.valuation,
        &ServiceClassification::default(),
    )?;

    Ok(ModelOutputs {
        extent,
        sediment,
        carbon,
        monetary,
        statements,
    })
}

/// Render the artifacts a command asks for. Accounts always serialize to
/// CSV and JSON; `formats` selects the statement and note encodings.
pub fn render_command(
    cfg: &RunConfig,
    cmd: Command,
    outputs: &ModelOutputs,
    formats: &[OutputFormat],
) -> Vec<RenderedFile> {
    let mut files = Vec::new();
    let mut account = |name: &str, csv: String, json: String| {
        files.push(RenderedFile {
            name: format!("{name}.csv"),
            contents: csv,
        });
        files.push(RenderedFile {
            name: format!("{name}.json"),
            contents: json,
        });
    };
    if matches!(cmd, Command::Extent | Command::All) {
        account(
            "extent_account",
            outputs.extent.to_csv(),
            outputs.extent.to_json(),
        );
    }
    if matches!(cmd, Command::Physical | Command::All) {
        account(
            "sediment_physical_account",
            outputs.sediment.to_csv(),
            outputs.sediment.to_json(),
        );
        account(
            "carbon_physical_account",
            outputs.carbon.to_csv(),
            outputs.carbon.to_json(),
        );
    }
    if matches!(cmd, Command::Monetary | Command::All) {
        account(
            "monetary_account",
            outputs.monetary.to_csv(),
            outputs.monetary.to_json(),
        );
    }
    if matches!(cmd, Command::Statements | Command::All) {
        files.extend(select_disclosure(
            cfg.alternative,
            &outputs.statements,
            formats,
        ));
    }
    files
}

/// Execute a command end to end and commit its files.
pub fn run(cfg: &RunConfig, cmd: Command, formats: &[OutputFormat]) -> Result<Vec<RenderedFile>> {
    let inputs = load_inputs(cfg)?;
    let outputs = run_models(cfg, &inputs)?;
    let files = render_command(cfg, cmd, &outputs, formats);
    commit_outputs(&cfg.out_dir, &files)?;
    Ok(files)
}

/// Write files atomically: stage everything in a temporary sibling
/// directory, then rename into the output directory only once every
/// write has succeeded.
pub fn commit_outputs(out_dir: &Path, files: &[RenderedFile]) -> Result<()> {
    let parent = out_dir.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let staging_name = format!(
        ".{}.staging-{}",
        out_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string()),
        std::process::id()
    );
    let staging = match parent {
        Some(p) => p.join(&staging_name),
        None => Path::new(&staging_name).to_path_buf(),
    };
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir_all(&staging)?;
    let stage_all = || -> Result<()> {
        for file in files {
            if file.name.contains('/') || file.name.contains("..") {
                bail!(
                    "refusing to write outside the output directory: {}",
                    file.name
                );
            }
            fs::write(staging.join(&file.name), &file.contents)?;
        }
        Ok(())
    };
    if let Err(e) = stage_all() {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for file in files {
        fs::rename(staging.join(&file.name), out_dir.join(&file.name))
            .with_context(|| format!("moving {} into place", file.name))?;
    }
    fs::remove_dir_all(&staging)?;
    Ok(())
}
