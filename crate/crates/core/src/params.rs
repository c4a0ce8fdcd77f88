//! Per-land-cover-class parameters: RUSLE cover and practice factors,
//! sediment trap efficiency, the three carbon-pool densities, and the
//! native flag that drives the optimal-scenario substitution.
//!
//! The table round-trips through a plain CSV whose header names the row
//! fields exactly, so it can be maintained in a spreadsheet:
//!
//! ```text
//! class_id,name,native,c_factor,p_factor,trap_eff,carbon_above,carbon_below,carbon_dead
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Carbon densities for one class, t C/ha per pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarbonPools {
    pub above_ground: f64,
    pub below_ground: f64,
    pub dead: f64,
}

impl CarbonPools {
    pub fn zero() -> Self {
        CarbonPools {
            above_ground: 0.0,
            below_ground: 0.0,
            dead: 0.0,
        }
    }

    /// Combined density across the three pools, t C/ha.
    pub fn total(&self) -> f64 {
        self.above_ground + self.below_ground + self.dead
    }
}

/// Parameters for one land-cover class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub name: String,
    pub native: bool,
    /// RUSLE cover-management factor, 0–1.
    pub c_factor: f64,
    /// RUSLE support-practice factor, 0–1.
    pub p_factor: f64,
    /// Fraction of through-flowing sediment retained by a cell, 0–1.
    pub trap_eff: f64,
    pub pools: CarbonPools,
}

/// Parameter table keyed by class identifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassTable {
    entries: BTreeMap<u32, ClassParams>,
}

const CSV_HEADER: &str =
    "class_id,name,native,c_factor,p_factor,trap_eff,carbon_above,carbon_below,carbon_dead";

impl ClassTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: u32, params: ClassParams) {
        self.entries.insert(class, params);
    }

    pub fn get(&self, class: u32) -> Option<&ClassParams> {
        self.entries.get(&class)
    }

    /// Entry for a class, or the error naming the missing id.
    pub fn require(&self, class: u32) -> Result<&ClassParams> {
        self.entries
            .get(&class)
            .ok_or(Error::MissingClass { class })
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &ClassParams)> {
        self.entries.iter().map(|(&id, p)| (id, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Display names keyed by class id.
    pub fn names(&self) -> BTreeMap<u32, String> {
        self.entries
            .iter()
            .map(|(&id, p)| (id, p.name.clone()))
            .collect()
    }

    /// Check every fraction is in [0, 1] and carbon densities are ≥ 0.
    pub fn validate(&self) -> Result<()> {
        for (&class, p) in &self.entries {
            let fractions = [
                ("c_factor", p.c_factor),
                ("p_factor", p.p_factor),
                ("trap_eff", p.trap_eff),
            ];
            for (name, value) in fractions {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::ParamRange {
                        name,
                        class,
                        value,
                        range: "[0, 1]",
                    });
                }
            }
            let pools = [
                ("carbon_above", p.pools.above_ground),
                ("carbon_below", p.pools.below_ground),
                ("carbon_dead", p.pools.dead),
            ];
            for (name, value) in pools {
                if value.is_nan() || value < 0.0 {
                    return Err(Error::ParamRange {
                        name,
                        class,
                        value,
                        range: "[0, inf)",
                    });
                }
            }
        }
        Ok(())
    }

    /// Check that every class in `present` has an entry.
    pub fn covers(&self, present: &[u32]) -> Result<()> {
        for &class in present {
            self.require(class)?;
        }
        Ok(())
    }

    /// Parse from CSV text. The header row must match the canonical
    /// column names; fields are validated on load.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty class table".into(),
        })?;
        if header.trim() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {CSV_HEADER:?}, got {:?}", header.trim()),
            });
        }
        let mut table = ClassTable::new();
        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields = split_csv_line(line);
            if fields.len() != 9 {
                return Err(Error::Parse {
                    line: line_no + 1,
                    message: format!("expected 9 fields, got {}", fields.len()),
                });
            }
            let parse_num = |idx: usize, name: &str| -> Result<f64> {
                fields[idx].trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no + 1,
                    message: format!("non-numeric {name} {:?}", fields[idx]),
                })
            };
            let class = fields[0].trim().parse::<u32>().map_err(|_| Error::Parse {
                line: line_no + 1,
                message: format!("non-integer class_id {:?}", fields[0]),
            })?;
            let native = match fields[2].trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::Parse {
                        line: line_no + 1,
                        message: format!("native must be true or false, got {other:?}"),
                    })
                }
            };
            let params = ClassParams {
                name: fields[1].trim().to_string(),
                native,
                c_factor: parse_num(3, "c_factor")?,
                p_factor: parse_num(4, "p_factor")?,
                trap_eff: parse_num(5, "trap_eff")?,
                pools: CarbonPools {
                    above_ground: parse_num(6, "carbon_above")?,
                    below_ground: parse_num(7, "carbon_below")?,
                    dead: parse_num(8, "carbon_dead")?,
                },
            };
            if table.entries.insert(class, params).is_some() {
                return Err(Error::Parse {
                    line: line_no + 1,
                    message: format!("duplicate class_id {class}"),
                });
            }
        }
        table.validate()?;
        Ok(table)
    }

    /// Serialize to CSV in class-id order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (id, p) in self.iter() {
            let name = if p.name.contains(',') || p.name.contains('"') {
                format!("\"{}\"", p.name.replace('"', "\"\""))
            } else {
                p.name.clone()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                id,
                name,
                p.native,
                p.c_factor,
                p.p_factor,
                p.trap_eff,
                p.pools.above_ground,
                p.pools.below_ground,
                p.pools.dead
            );
        }
        out
    }

    pub fn from_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

/// Split one CSV line honouring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if field.is_empty() => quoted = true,
            ',' if !quoted => {
                fields.push(std::mem::take(&mut field));
            }
            _ => field.push(ch),
        }
    }
    fields.push(field);
    fields
}
