//! Financial-statement style disclosures: the environmental profit and
//! loss statement, the natural capital balance sheet, and their
//! supporting notes, under three disclosure alternatives (balance-sheet
//! line item, notes only, or full voluntary statements).
//!
//! Statements split every value into "value to business" (cost savings
//! accruing to the entity — sediment filtration) and "value to society"
//! (public benefit — carbon). Carbon appears in the P&L as sequestration
//! over the period and on the balance sheet as the standing stock.
//!
//! A cell whose underlying input does not exist renders as an explicit
//! `n/a`, never as zero: the baseline P&L has no sequestration figure
//! because no earlier stock exists to difference against.
//!
//! Statements render to aligned plain text, long-format CSV, and JSON.
//! Periods are presented latest first. Rendering is deterministic, so
//! fixed inputs give byte-identical files.

use serde::Serialize;

use crate::accounts::{to_json_pretty, PhysicalFlowAccount, SERVICE_CARBON, SERVICE_SEDIMENT};
use crate::render::{csv_field, format_money, format_qty, money_csv, text_table};
use crate::valuation::{npv_asset_value, MonetaryAccount, ValuationParams};
use crate::{Error, Result};

/// A physical quantity shown beside monetary values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure {
    pub quantity: f64,
    pub unit: String,
    /// Decimal places when rendered.
    pub decimals: u8,
}

/// One period's cells on a statement line. `None` means the input for the
/// cell is absent (rendered `n/a`), which is distinct from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PeriodCell {
    pub measure: Option<Measure>,
    pub value_to_business: Option<f64>,
    pub value_to_society: Option<f64>,
}

impl PeriodCell {
    /// Business plus society, absent only when both components are.
    pub fn total(&self) -> Option<f64> {
        match (self.value_to_business, self.value_to_society) {
            (None, None) => None,
            (b, s) => Some(b.unwrap_or(0.0) + s.unwrap_or(0.0)),
        }
    }
}

/// Statement line: a label and one cell per period, in the statement's
/// period order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementLine {
    pub label: String,
    pub cells: Vec<PeriodCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    pub title: String,
    /// Optional section heading printed above the lines.
    pub heading: Option<String>,
    /// Period labels in presentation order (latest first).
    pub period_labels: Vec<String>,
    pub lines: Vec<StatementLine>,
    pub total: StatementLine,
}

/// Column content of a note table.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ColumnKind {
    Quantity { decimals: u8 },
    Money,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteColumn {
    pub header: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteRow {
    pub label: String,
    pub values: Vec<f64>,
}

/// A note to the statements: methodology paragraphs plus a per-class
/// table with a totals row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteDoc {
    pub id: u8,
    pub title: String,
    pub paragraphs: Vec<String>,
    pub columns: Vec<NoteColumn>,
    pub rows: Vec<NoteRow>,
    pub totals: Vec<f64>,
}

/// Both statements and their notes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementSet {
    pub env_pnl: Statement,
    pub balance_sheet: Statement,
    pub notes: Vec<NoteDoc>,
}

/// Which column a service's value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueColumn {
    Business,
    Society,
}

impl ValueColumn {
    fn place(self, value: f64) -> (Option<f64>, Option<f64>) {
        match self {
            ValueColumn::Business => (Some(value), None),
            ValueColumn::Society => (None, Some(value)),
        }
    }
}

/// Column classification per service. Sediment filtration is a cost
/// saving accruing to the business; carbon benefits accrue to society.
/// Both placements are parameters rather than fixed rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ServiceClassification {
    pub sediment: ValueColumn,
    pub carbon: ValueColumn,
}

impl Default for ServiceClassification {
    fn default() -> Self {
        ServiceClassification {
            sediment: ValueColumn::Business,
            carbon: ValueColumn::Society,
        }
    }
}

// ── Builders ─────────────────────────────────────────────────────────────

fn find_service<'a>(
    physical: &'a [&'a PhysicalFlowAccount],
    service: &str,
) -> Result<&'a PhysicalFlowAccount> {
    physical
        .iter()
        .find(|a| a.service == service)
        .copied()
        .ok_or_else(|| Error::MissingService(service.to_string()))
}

fn check_periods(account: &PhysicalFlowAccount, monetary: &MonetaryAccount) -> Result<()> {
    if account.periods != monetary.periods {
        return Err(Error::MissingPeriod(format!(
            "{} / {}",
            monetary.periods.baseline, monetary.periods.scenario
        )));
    }
    Ok(())
}

/// Column-wise totals over lines; a column stays absent when no line
/// contributes to it.
fn total_line(label: &str, lines: &[StatementLine], periods: usize) -> StatementLine {
    let mut cells = Vec::with_capacity(periods);
    for idx in 0..periods {
        let sum = |pick: &dyn Fn(&PeriodCell) -> Option<f64>| {
            let present: Vec<f64> = lines.iter().filter_map(|l| pick(&l.cells[idx])).collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>())
        };
        cells.push(PeriodCell {
            measure: None,
            value_to_business: sum(&|c| c.value_to_business),
            value_to_society: sum(&|c| c.value_to_society),
        });
    }
    StatementLine {
        label: label.to_string(),
        cells,
    }
}

/// Environmental profit and loss statement.
///
/// Sediment filtration carries the annual tonnage and its avoided-cost
/// value to business; carbon sequestration carries the stock change over
/// the period and its value to society. The baseline period has no
/// sequestration cell because no earlier stock exists.
pub fn build_env_pnl(
    physical: &[&PhysicalFlowAccount],
    monetary: &MonetaryAccount,
    params: &ValuationParams,
    classification: &ServiceClassification,
) -> Result<Statement> {
    let sediment = find_service(physical, SERVICE_SEDIMENT)?;
    let carbon = find_service(physical, SERVICE_CARBON)?;
    check_periods(sediment, monetary)?;
    check_periods(carbon, monetary)?;

    let tonnes = |q: f64| Measure {
        quantity: q,
        unit: "t".to_string(),
        decimals: 0,
    };
    let cell = |column: ValueColumn, measure: Measure, value: f64| {
        let (value_to_business, value_to_society) = column.place(value);
        PeriodCell {
            measure: Some(measure),
            value_to_business,
            value_to_society,
        }
    };
    let sediment_line = StatementLine {
        label: "Sediment filtration (tonnes) (Note 1)".to_string(),
        cells: vec![
            cell(
                classification.sediment,
                tonnes(sediment.totals.scenario_qty),
                monetary.totals.sediment.scenario,
            ),
            cell(
                classification.sediment,
                tonnes(sediment.totals.baseline_qty),
                monetary.totals.sediment.baseline,
            ),
        ],
    };
    let sequestered = carbon.totals.change_qty;
    let carbon_line = StatementLine {
        label: "Carbon sequestration (tonnes) (Note 2)".to_string(),
        cells: vec![
            cell(
                classification.carbon,
                tonnes(sequestered),
                sequestered * params.c_to_co2 * params.carbon_price,
            ),
            // No stock precedes the baseline, so sequestration is absent.
            PeriodCell::default(),
        ],
    };
    let lines = vec![sediment_line, carbon_line];
    let total = total_line("Total environmental income/(loss)", &lines, 2);
    Ok(Statement {
        title: "Environmental profit and loss statement".to_string(),
        heading: Some("Environmental income/(loss)".to_string()),
        period_labels: vec![
            monetary.periods.scenario.clone(),
            monetary.periods.baseline.clone(),
        ],
        lines,
        total,
    })
}

/// Natural capital balance sheet.
///
/// The sediment-filtration asset is the net present value of the annual
/// avoided cost; the carbon-storage asset is the standing stock at the
/// market price, measured in t CO₂-e.
pub fn build_balance_sheet(
    monetary: &MonetaryAccount,
    physical: &[&PhysicalFlowAccount],
    params: &ValuationParams,
    classification: &ServiceClassification,
) -> Result<Statement> {
    params.validate()?;
    let sediment = find_service(physical, SERVICE_SEDIMENT)?;
    let carbon = find_service(physical, SERVICE_CARBON)?;
    check_periods(sediment, monetary)?;
    check_periods(carbon, monetary)?;

    let cell = |column: ValueColumn, measure: Measure, value: f64| {
        let (value_to_business, value_to_society) = column.place(value);
        PeriodCell {
            measure: Some(measure),
            value_to_business,
            value_to_society,
        }
    };
    let annual = |q: f64| Measure {
        quantity: q,
        unit: "t/yr".to_string(),
        decimals: 1,
    };
    let sediment_line = StatementLine {
        label: "Sediment filtration (tonnes), Note 1".to_string(),
        cells: vec![
            cell(
                classification.sediment,
                annual(sediment.totals.scenario_qty),
                npv_asset_value(monetary.totals.sediment.scenario, params)?,
            ),
            cell(
                classification.sediment,
                annual(sediment.totals.baseline_qty),
                npv_asset_value(monetary.totals.sediment.baseline, params)?,
            ),
        ],
    };
    let co2 = |stock: f64| Measure {
        quantity: stock * params.c_to_co2,
        unit: "t CO2-e".to_string(),
        decimals: 0,
    };
    let carbon_line = StatementLine {
        label: "Carbon storage (tonnes CO2-e), Note 2".to_string(),
        cells: vec![
            cell(
                classification.carbon,
                co2(carbon.totals.scenario_qty),
                monetary.totals.carbon.scenario,
            ),
            cell(
                classification.carbon,
                co2(carbon.totals.baseline_qty),
                monetary.totals.carbon.baseline,
            ),
        ],
    };
    let lines = vec![sediment_line, carbon_line];
    let total = total_line("Total natural capital assets", &lines, 2);
    Ok(Statement {
        title: "Natural capital balance sheet".to_string(),
        heading: None,
        period_labels: vec![
            monetary.periods.scenario.clone(),
            monetary.periods.baseline.clone(),
        ],
        lines,
        total,
    })
}

/// Notes supporting the statements: a per-class sediment table with its
/// avoided-cost values, and a per-class carbon table with CO₂-e and
/// market values, each preceded by methodology paragraphs that echo the
/// active parameter values.
pub fn build_notes(
    physical: &[&PhysicalFlowAccount],
    monetary: &MonetaryAccount,
    params: &ValuationParams,
) -> Result<Vec<NoteDoc>> {
    let sediment = find_service(physical, SERVICE_SEDIMENT)?;
    let carbon = find_service(physical, SERVICE_CARBON)?;
    check_periods(sediment, monetary)?;
    check_periods(carbon, monetary)?;
    let baseline = &monetary.periods.baseline;

    let note1 = NoteDoc {
        id: 1,
        title: "Note 1 - Sediment filtration".to_string(),
        paragraphs: vec![
            "The riparian land assets are managed to reduce the sediment load carried by \
             overland stormwater flows before they enter channels and streams. Annual sediment \
             retention is modelled on a grid: hillslope soil loss is estimated per cell from \
             rainfall erosivity, soil erodibility, slope length and steepness, cover, and \
             support practice, then routed downslope with each cell retaining a class-specific \
             share of the load passing through it."
                .to_string(),
            format!(
                "Environmental income from sediment filtration is the avoided cost of removing \
                 the retained sediment from stormwater infrastructure, valued at AU${}/tonne.",
                format_qty(params.sediment_unit_cost, 0)
            ),
            format!(
                "The table shows the quantity of sediment retained in {baseline} and the \
                 associated value per asset class."
            ),
        ],
        columns: vec![
            NoteColumn {
                header: "Asset".to_string(),
                kind: ColumnKind::Quantity { decimals: 0 },
            },
            NoteColumn {
                header: "Tonnes of sediment".to_string(),
                kind: ColumnKind::Quantity { decimals: 0 },
            },
            NoteColumn {
                header: "AU$".to_string(),
                kind: ColumnKind::Money,
            },
        ],
        rows: sediment
            .rows
            .iter()
            .zip(&monetary.rows)
            .map(|(p, m)| NoteRow {
                label: p.name.clone(),
                values: vec![p.baseline_qty, m.sediment.baseline],
            })
            .collect(),
        totals: vec![
            sediment.totals.baseline_qty,
            monetary.totals.sediment.baseline,
        ],
    };

    let timing = match params.annuity_timing {
        crate::valuation::AnnuityTiming::Ordinary => "in arrears",
        crate::valuation::AnnuityTiming::Due => "in advance",
    };
    let note2 = NoteDoc {
        id: 2,
        title: "Note 2 - Carbon storage".to_string(),
        paragraphs: vec![
            "Vegetation regulates the global climate by storing carbon as living and dead \
             biomass. The stock per asset class combines three pools - above-ground, \
             below-ground, and dead biomass - at a class-level density over the mapped area. \
             Litter and soil carbon are excluded, so the stock is an underestimate of the \
             carbon present on site."
                .to_string(),
            format!(
                "Stocks convert to carbon dioxide equivalent at {} t CO2-e per tonne of carbon \
                 and are measured at fair value using a market price of AU${}/t CO2-e.",
                params.c_to_co2,
                format_qty(params.carbon_price, 0)
            ),
            format!(
                "Asset values for sediment filtration discount the annual avoided cost at \
                 {}% over {} years, flows timed {}.",
                format_qty(params.discount_rate * 100.0, 1),
                params.horizon_years,
                timing
            ),
        ],
        columns: vec![
            NoteColumn {
                header: "Asset".to_string(),
                kind: ColumnKind::Quantity { decimals: 0 },
            },
            NoteColumn {
                header: "Tonnes biomass carbon".to_string(),
                kind: ColumnKind::Quantity { decimals: 0 },
            },
            NoteColumn {
                header: "Tonnes CO2-e".to_string(),
                kind: ColumnKind::Quantity { decimals: 0 },
            },
            NoteColumn {
                header: "AU$".to_string(),
                kind: ColumnKind::Money,
            },
        ],
        rows: carbon
            .rows
            .iter()
            .zip(&monetary.rows)
            .map(|(p, m)| NoteRow {
                label: p.name.clone(),
                values: vec![
                    p.baseline_qty,
                    p.baseline_qty * params.c_to_co2,
                    m.carbon.baseline,
                ],
            })
            .collect(),
        totals: vec![
            carbon.totals.baseline_qty,
            carbon.totals.baseline_qty * params.c_to_co2,
            monetary.totals.carbon.baseline,
        ],
    };

    Ok(vec![note1, note2])
}

/// Build both statements and the notes in one call.
pub fn build_statement_set(
    physical: &[&PhysicalFlowAccount],
    monetary: &MonetaryAccount,
    params: &ValuationParams,
    classification: &ServiceClassification,
) -> Result<StatementSet> {
    Ok(StatementSet {
        env_pnl: build_env_pnl(physical, monetary, params, classification)?,
        balance_sheet: build_balance_sheet(monetary, physical, params, classification)?,
        notes: build_notes(physical, monetary, params)?,
    })
}

// ── Disclosure selection and rendering ───────────────────────────────────

/// The three disclosure alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisclosureAlternative {
    /// Asset line items under a "Natural capital" heading, plus notes.
    BalanceSheetItem,
    /// Notes to the financial statements alone.
    NotesOnly,
    /// Environmental P&L and natural capital balance sheet, plus notes.
    Voluntary,
}

impl DisclosureAlternative {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "balance_sheet_item" => Some(Self::BalanceSheetItem),
            "notes_only" => Some(Self::NotesOnly),
            "voluntary" => Some(Self::Voluntary),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BalanceSheetItem => "balance_sheet_item",
            Self::NotesOnly => "notes_only",
            Self::Voluntary => "voluntary",
        }
    }
}

/// Output encodings for statements and notes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Txt,
    Csv,
    Json,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::Txt, OutputFormat::Csv, OutputFormat::Json];

    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Txt => "txt",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "txt" => Some(Self::Txt),
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

/// A named file body ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFile {
    pub name: String,
    pub contents: String,
}

/// Render the statement set under a disclosure alternative.
///
/// `voluntary` emits both statements and the notes; `notes_only` emits the
/// notes alone; `balance_sheet_item` recasts the balance sheet as a
/// line-item extract under a "Natural capital" heading, plus the notes.
pub fn select_disclosure(
    alternative: DisclosureAlternative,
    set: &StatementSet,
    formats: &[OutputFormat],
) -> Vec<RenderedFile> {
    let mut files = Vec::new();
    let mut push_statement = |name: &str, statement: &Statement| {
        for fmt in formats {
            files.push(RenderedFile {
                name: format!("{name}.{}", fmt.extension()),
                contents: render_statement(statement, *fmt),
            });
        }
    };
    match alternative {
        DisclosureAlternative::Voluntary => {
            push_statement("env_pnl", &set.env_pnl);
            push_statement("balance_sheet", &set.balance_sheet);
        }
        DisclosureAlternative::BalanceSheetItem => {
            let extract = Statement {
                title: "Balance sheet extract (non-current assets)".to_string(),
                heading: Some("Natural capital".to_string()),
                total: StatementLine {
                    label: "Total natural capital".to_string(),
                    ..set.balance_sheet.total.clone()
                },
                ..set.balance_sheet.clone()
            };
            push_statement("balance_sheet", &extract);
        }
        DisclosureAlternative::NotesOnly => {}
    }
    for note in &set.notes {
        for fmt in formats {
            files.push(RenderedFile {
                name: format!("note{}.{}", note.id, fmt.extension()),
                contents: render_note(note, *fmt),
            });
        }
    }
    files
}

pub fn render_statement(s: &Statement, format: OutputFormat) -> String {
    match format {
        OutputFormat::Txt => statement_txt(s),
        OutputFormat::Csv => statement_csv(s),
        OutputFormat::Json => to_json_pretty(s),
    }
}

pub fn render_note(n: &NoteDoc, format: OutputFormat) -> String {
    match format {
        OutputFormat::Txt => note_txt(n),
        OutputFormat::Csv => note_csv(n),
        OutputFormat::Json => to_json_pretty(n),
    }
}

const NA: &str = "n/a";

fn measure_text(m: &Option<Measure>) -> String {
    m.as_ref()
        .map(|m| format_qty(m.quantity, m.decimals))
        .unwrap_or_else(|| NA.to_string())
}

fn money_text(v: Option<f64>) -> String {
    v.map(format_money).unwrap_or_else(|| NA.to_string())
}

fn statement_txt(s: &Statement) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut period_header = vec![String::new()];
    let mut column_header = vec![String::new()];
    for label in &s.period_labels {
        period_header.extend([label.clone(), String::new(), String::new(), String::new()]);
        column_header.extend([
            "Measure".to_string(),
            "Value to business".to_string(),
            "Value to society".to_string(),
            "Total".to_string(),
        ]);
    }
    rows.push(period_header);
    rows.push(column_header);
    if let Some(heading) = &s.heading {
        rows.push(vec![heading.clone()]);
    }
    let line_row = |line: &StatementLine| {
        let mut row = vec![line.label.clone()];
        for cell in &line.cells {
            row.push(measure_text(&cell.measure));
            row.push(money_text(cell.value_to_business));
            row.push(money_text(cell.value_to_society));
            row.push(money_text(cell.total()));
        }
        row
    };
    for line in &s.lines {
        rows.push(line_row(line));
    }
    rows.push(line_row(&s.total));

    let ncols = 1 + 4 * s.period_labels.len();
    let mut aligns = vec![false];
    aligns.extend(std::iter::repeat_n(true, ncols - 1));
    let mut out = format!("{}\n{}\n\n", s.title, "=".repeat(s.title.chars().count()));
    out.push_str(&text_table(&rows, &aligns));
    out
}

fn statement_csv(s: &Statement) -> String {
    let mut out =
        String::from("label,period,measure,unit,value_to_business,value_to_society,total\n");
    let mut write_line = |line: &StatementLine| {
        for (label, cell) in s.period_labels.iter().zip(&line.cells) {
            let (measure, unit) = cell
                .measure
                .as_ref()
                .map(|m| {
                    (
                        format_qty(m.quantity, m.decimals).replace(',', ""),
                        m.unit.clone(),
                    )
                })
                .unwrap_or_default();
            let money = |v: Option<f64>| v.map(money_csv).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&line.label),
                csv_field(label),
                measure,
                csv_field(&unit),
                money(cell.value_to_business),
                money(cell.value_to_society),
                money(cell.total()),
            ));
        }
    };
    for line in &s.lines {
        write_line(line);
    }
    write_line(&s.total);
    out
}

fn note_txt(n: &NoteDoc) -> String {
    let mut out = format!("{}\n{}\n", n.title, "=".repeat(n.title.chars().count()));
    for p in &n.paragraphs {
        out.push('\n');
        out.push_str(p);
        out.push('\n');
    }
    out.push('\n');
    let mut rows: Vec<Vec<String>> = Vec::new();
    rows.push(n.columns.iter().map(|c| c.header.clone()).collect());
    let format_value = |kind: &ColumnKind, v: f64| match kind {
        ColumnKind::Quantity { decimals } => format_qty(v, *decimals),
        ColumnKind::Money => format_money(v),
    };
    for row in &n.rows {
        let mut cells = vec![row.label.clone()];
        for (col, v) in n.columns[1..].iter().zip(&row.values) {
            cells.push(format_value(&col.kind, *v));
        }
        rows.push(cells);
    }
    let mut total_row = vec!["Total".to_string()];
    for (col, v) in n.columns[1..].iter().zip(&n.totals) {
        total_row.push(format_value(&col.kind, *v));
    }
    rows.push(total_row);
    let mut aligns = vec![false];
    aligns.extend(std::iter::repeat_n(true, n.columns.len().saturating_sub(1)));
    out.push_str(&text_table(&rows, &aligns));
    out
}

fn note_csv(n: &NoteDoc) -> String {
    let mut out = n
        .columns
        .iter()
        .map(|c| csv_field(&c.header))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    let format_value = |kind: &ColumnKind, v: f64| match kind {
        ColumnKind::Quantity { decimals } => format_qty(v, *decimals).replace(',', ""),
        ColumnKind::Money => money_csv(v),
    };
    for row in &n.rows {
        let mut cells = vec![csv_field(&row.label)];
        for (col, v) in n.columns[1..].iter().zip(&row.values) {
            cells.push(format_value(&col.kind, *v));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut total = vec!["Total".to_string()];
    for (col, v) in n.columns[1..].iter().zip(&n.totals) {
        total.push(format_value(&col.kind, *v));
    }
    out.push_str(&total.join(","));
    out.push('\n');
    out
}
