//! Presentation formatting shared by the account and statement renderers.
//!
//! Everything upstream works in unrounded `f64`; these helpers apply the
//! report conventions at the last moment: currency to whole dollars with
//! thousands separators and accounting-style parentheses for losses,
//! quantities to a per-column decimal count.

/// Insert thousands separators into a non-negative integer string.
fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let offset = digits.len() % 3;
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (i + 3 - offset).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Quantity rounded to `decimals` places with separators: `48,795`, `1.2`.
pub fn format_qty(value: f64, decimals: u8) -> String {
    let s = format!("{:.*}", decimals as usize, value.abs());
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s.as_str(), None),
    };
    let mut out = group_thousands(int_part);
    if let Some(f) = frac_part {
        out.push('.');
        out.push_str(f);
    }
    // Sign dropped when the rounded magnitude is zero.
    let negative = value < 0.0
        && !out
            .trim_matches(|c| c == '0' || c == ',' || c == '.')
            .is_empty();
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

/// Currency to whole dollars: `$110,456`, negatives as `($53,057)`.
pub fn format_money(value: f64) -> String {
    let rounded = value.round();
    let body = format!(
        "${}",
        group_thousands(&format!("{}", rounded.abs() as i128))
    );
    if rounded < 0.0 {
        format!("({body})")
    } else {
        body
    }
}

/// Whole-dollar integer for CSV cells: `110456`, `-53057`.
pub fn money_csv(value: f64) -> String {
    format!("{}", value.round() as i128)
}

/// Fixed decimals, then trailing zeros (and a bare point) trimmed:
/// `58`, `0.0625`, `1.5`.
pub fn format_trim(value: f64, max_decimals: u8) -> String {
    let s = format!("{:.*}", max_decimals as usize, value);
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.to_string()
        }
    } else {
        s
    }
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
pub fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Render a column-aligned text table. `aligns` holds `true` for
/// right-aligned (numeric) columns; rows shorter than the widest row are
/// padded with empty cells.
pub fn text_table(rows: &[Vec<String>], aligns: &[bool]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; ncols];
    for row in rows {
        for (width, cell) in widths.iter_mut().zip(row) {
            *width = (*width).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, &width) in widths.iter().enumerate() {
            let cell = row.get(i).map(String::as_str).unwrap_or("");
            let pad = width.saturating_sub(cell.chars().count());
            if i > 0 {
                line.push_str("  ");
            }
            if aligns.get(i).copied().unwrap_or(false) {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            } else {
                line.push_str(cell);
                if i + 1 < ncols {
                    line.push_str(&" ".repeat(pad));
                }
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn money_formatting() {
        assert_eq!(format_money(110_455.775), "$110,456");
        assert_eq!(format_money(0.2), "$0");
        assert_eq!(format_money(-53_057.4), "($53,057)");
        assert_eq!(format_money(1_686_207.0), "$1,686,207");
    }

    #[test]
    fn quantity_formatting() {
        assert_eq!(format_qty(441.8231, 0), "442");
        assert_eq!(format_qty(48_795.32, 0), "48,795");
        assert_eq!(format_qty(1.1974, 1), "1.2");
        assert_eq!(format_qty(-12.04, 1), "-12.0");
        assert_eq!(format_qty(-0.004, 1), "0.0");
    }

    #[test]
    fn trimmed_formatting() {
        assert_eq!(format_trim(58.0, 2), "58");
        assert_eq!(format_trim(0.0625, 4), "0.0625");
        assert_eq!(format_trim(1.50, 2), "1.5");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("Grass"), "Grass");
        assert_eq!(csv_field("Grass, mown"), "\"Grass, mown\"");
    }

    #[test]
    fn tables_align_columns() {
        let rows = vec![
            vec!["Asset".to_string(), "t".to_string()],
            vec!["Grass".to_string(), "103".to_string()],
            vec!["Watercourse".to_string(), "26".to_string()],
        ];
        let table = text_table(&rows, &[false, true]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[1], "Grass        103");
        assert_eq!(lines[2], "Watercourse   26");
    }
}
