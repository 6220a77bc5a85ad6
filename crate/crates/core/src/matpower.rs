//! Parser for the numeric tables of a MATPOWER `.m` case file.
//!
//! Only the subset the frequency model needs is read: the `mpc.bus`,
//! `mpc.branch` and `mpc.gen` bracketed matrices. Branch susceptance is
//! taken as 1/x from the reactance column (lossless lines), out-of-service
//! rows are dropped, and everything else (shunts, taps, limits, AC data)
//! is ignored. Inertia and damping are not in the format and stay at
//! their placeholder value 1.0 until machine parameters are applied.

use std::collections::HashMap;

use crate::grid::{Branch, Generator, GridCase, GridError};

// 0-based column positions in the standard case format.
const BUS_I: usize = 0;
const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_X: usize = 3;
const BR_STATUS: usize = 10;
const GEN_BUS: usize = 0;
const PG: usize = 1;
const GEN_STATUS: usize = 7;

/// Parse case text into a validated [`GridCase`].
pub fn parse_matpower_case(text: &str) -> Result<GridCase, GridError> {
    let bus_rows = matrix_block(text, "bus")?;
    let gen_rows = matrix_block(text, "gen")?;
    let branch_rows = matrix_block(text, "branch")?;

    if branch_rows.is_empty() {
        return Err(GridError::Schema("mpc.branch matrix is empty (no network)".into()));
    }
    if bus_rows.is_empty() {
        return Err(GridError::Schema("mpc.bus matrix is empty".into()));
    }

    let mut buses = Vec::with_capacity(bus_rows.len());
    for (line, row) in &bus_rows {
        let id = int_col(row, BUS_I, *line, "bus", "bus_i")?;
        buses.push(id);
    }

    let mut branches = Vec::new();
    for (line, row) in &branch_rows {
        let in_service = match row.get(BR_STATUS) {
            Some(&s) => s != 0.0,
            None => true, // short rows carry no status column
        };
        if !in_service {
            continue;
        }
        let from = int_col(row, F_BUS, *line, "branch", "fbus")?;
        let to = int_col(row, T_BUS, *line, "branch", "tbus")?;
        let x = *row.get(BR_X).ok_or_else(|| {
            GridError::Schema(format!("branch row at line {line} is missing the reactance column"))
        })?;
        if !(x > 0.0) {
            return Err(GridError::Validation(format!(
                "branch {from}-{to} at line {line} has non-positive reactance {x}"
            )));
        }
        branches.push(Branch { from, to, susceptance: 1.0 / x });
    }
    if branches.is_empty() {
        return Err(GridError::Schema("every branch is out of service (no network)".into()));
    }

    let mut generators = Vec::new();
    for (line, row) in &gen_rows {
        let in_service = match row.get(GEN_STATUS) {
            Some(&s) => s != 0.0,
            None => true,
        };
        if !in_service {
            continue;
        }
        let bus = int_col(row, GEN_BUS, *line, "gen", "bus")?;
        let p_nom_mw = *row.get(PG).ok_or_else(|| {
            GridError::Schema(format!("gen row at line {line} is missing the Pg column"))
        })?;
        generators.push(Generator { bus, p_nom_mw, inertia: 1.0, damping: 1.0 });
    }

    let case = GridCase { buses, branches, generators };
    case.validate()?;
    Ok(case)
}

fn int_col(row: &[f64], col: usize, line: usize, table: &str, name: &str) -> Result<u32, GridError> {
    let v = *row.get(col).ok_or_else(|| {
        GridError::Schema(format!("{table} row at line {line} is missing the {name} column"))
    })?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(GridError::Parse {
            line,
            msg: format!("{name} must be a nonnegative integer, got {v}"),
        });
    }
    Ok(v as u32)
}

/// Extract the numeric matrix assigned to `mpc.<name>`. Returns one
/// (line number, values) entry per row; rows may span the `[ ... ]`
/// block freely but must all have the same width.
fn matrix_block(text: &str, name: &str) -> Result<Vec<(usize, Vec<f64>)>, GridError> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut in_block = false;
    let mut found = false;
    let mut pending: Vec<f64> = Vec::new();
    let mut pending_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('%').next().unwrap_or("");
        let mut rest: &str = line;

        if !in_block {
            let Some(pos) = assignment_start(line, name) else { continue };
            found = true;
            in_block = true;
            rest = &line[pos..];
        }

        let (content, closed) = match rest.find(']') {
            Some(p) => (&rest[..p], true),
            None => (rest, false),
        };

        let pieces: Vec<&str> = content.split(';').collect();
        for (k, piece) in pieces.iter().enumerate() {
            for tok in piece.split_whitespace() {
                // Tolerate comma-separated rows as well.
                for tok in tok.split(',').filter(|t| !t.is_empty()) {
                    if pending.is_empty() {
                        pending_line = line_no;
                    }
                    let v: f64 = tok.parse().map_err(|_| GridError::Parse {
                        line: line_no,
                        msg: format!("invalid number `{tok}` in mpc.{name}"),
                    })?;
                    pending.push(v);
                }
            }
            // Every piece except the last was terminated by a `;`.
            let terminated = k + 1 < pieces.len();
            if terminated && !pending.is_empty() {
                rows.push((pending_line, std::mem::take(&mut pending)));
            }
        }
        // Rows may wrap physical lines: flush only on `;` or `]`.
        if closed {
            if !pending.is_empty() {
                rows.push((pending_line, std::mem::take(&mut pending)));
            }
            in_block = false;
        }
    }

    if !found {
        return Err(GridError::Schema(format!("missing mpc.{name} matrix block")));
    }
    if in_block {
        return Err(GridError::Parse {
            line: text.lines().count(),
            msg: format!("mpc.{name} block is not closed by `]`"),
        });
    }

    // All rows of a table must have the same width.
    let mut widths: HashMap<usize, usize> = HashMap::new();
    for (line, row) in &rows {
        widths.entry(row.len()).or_insert(*line);
    }
    if widths.len() > 1 {
        let (line, _) = rows
            .iter()
            .find(|(_, r)| r.len() != rows[0].1.len())
            .expect("mismatching row exists");
        return Err(GridError::Parse {
            line: *line,
            msg: format!("ragged mpc.{name} matrix (rows differ in column count)"),
        });
    }
    Ok(rows)
}

/// Locate `mpc.<name> = [` on a line, returning the offset just past `[`.
fn assignment_start(line: &str, name: &str) -> Option<usize> {
    let key = format!("mpc.{name}");
    let pos = line.find(&key)?;
    let after = &line[pos + key.len()..];
    // Reject prefixes of longer field names (e.g. mpc.gencost).
    let mut chars = after.chars();
    match chars.next() {
        Some(c) if c == '=' || c.is_whitespace() => {}
        _ => return None,
    }
    let eq = after.find('=')?;
    let bracket_rel = after[eq..].find('[')?;
    Some(pos + key.len() + eq + bracket_rel + 1)
}
