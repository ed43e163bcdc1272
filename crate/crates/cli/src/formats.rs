//! Text formats read and written by the command line tool.
//!
//! * Matrix file: a line holding `N`, then `N` lines of `N` space-separated
//!   entries from {-1, 0, 1}. Written with single spaces and a trailing newline.
//! * Arms file: one line of `N` space-separated indicators, 1 = treatment.
//! * Data CSV: header row with `id`, `arm` (1/0), one column per measure named
//!   after it, and optional `<name>_censored` (0/1) columns. Empty or `NA`
//!   cells are missing.
//! * Hierarchy: a JSON array of measure objects in priority order.

use std::fs;
use std::path::Path;

use exact_wins::{Arm, ArmAssignment, Hierarchy, MeasureSpec, Observation, OutcomeMatrix, PatientRecord};

use crate::error::{CliError, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Canonical matrix file contents.
pub fn format_matrix(u: &OutcomeMatrix) -> String {
    format!("{}\n{u}", u.n_patients())
}

/// Parses matrix file contents; `path` only labels errors. The result is
/// validated, so a non-skew matrix is rejected with its first bad cell.
pub fn parse_matrix(text: &str, path: &Path) -> Result<OutcomeMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((first, header)) = lines.next() else {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "empty matrix file".into(),
        });
    };
    let n: usize = header.trim().parse().map_err(|_| {
        parse_err(
            path,
            first + 1,
            1,
            format!("expected the matrix size, found '{}'", header.trim()),
        )
    })?;
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (idx, line) in lines {
        if rows == n {
            return Err(parse_err(path, idx + 1, 1, format!("more than {n} matrix rows")));
        }
        let before = entries.len();
        for (col, tok) in line.split_whitespace().enumerate() {
            let v = match tok {
                "1" => 1,
                "0" => 0,
                "-1" => -1,
                _ => {
                    return Err(parse_err(
                        path,
                        idx + 1,
                        col + 1,
                        format!("entry '{tok}' is not one of -1, 0, 1"),
                    ))
                }
            };
            entries.push(v);
        }
        let got = entries.len() - before;
        if got != n {
            return Err(parse_err(
                path,
                idx + 1,
                got.min(n) + 1,
                format!("row has {got} entries, expected {n}"),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: format!("found {rows} matrix rows, expected {n}"),
        });
    }
    Ok(OutcomeMatrix::from_entries(n, entries)?)
}

pub fn read_matrix(path: &Path) -> Result<OutcomeMatrix> {
    parse_matrix(&read_text(path)?, path)
}

pub fn write_matrix(path: &Path, u: &OutcomeMatrix) -> Result<()> {
    write_text(path, &format_matrix(u))
}

pub fn format_arms(arms: &ArmAssignment) -> String {
    let tokens: Vec<String> = arms.indicators().iter().map(|d| d.to_string()).collect();
    format!("{}\n", tokens.join(" "))
}

pub fn parse_arms(text: &str, path: &Path) -> Result<ArmAssignment> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((idx, line)) = lines.next() else {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "empty arms file".into(),
        });
    };
    if let Some((extra, _)) = lines.next() {
        return Err(parse_err(path, extra + 1, 1, "arms file must hold a single line"));
    }
    let mut ind = Vec::new();
    for (col, tok) in line.split_whitespace().enumerate() {
        match tok {
            "1" => ind.push(1),
            "0" => ind.push(0),
            _ => {
                return Err(parse_err(
                    path,
                    idx + 1,
                    col + 1,
                    format!("arm indicator '{tok}' is not 1 or 0"),
                ))
            }
        }
    }
    Ok(ArmAssignment::from_indicators(&ind)?)
}

pub fn read_arms(path: &Path) -> Result<ArmAssignment> {
    parse_arms(&read_text(path)?, path)
}

pub fn write_arms(path: &Path, arms: &ArmAssignment) -> Result<()> {
    write_text(path, &format_arms(arms))
}

pub fn parse_hierarchy(text: &str, path: &Path) -> Result<Hierarchy> {
    let specs: Vec<MeasureSpec> =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.column(), e.to_string()))?;
    Ok(Hierarchy::new(specs)?)
}

pub fn read_hierarchy(path: &Path) -> Result<Hierarchy> {
    parse_hierarchy(&read_text(path)?, path)
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

/// Parses the data CSV against `hierarchy`. Columns not named by the
/// hierarchy are ignored.
pub fn parse_data(text: &str, path: &Path, hierarchy: &Hierarchy) -> Result<Vec<PatientRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        parse_err(path, line, 0, e.to_string())
    };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "empty data file".into(),
        });
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        column(name).ok_or_else(|| CliError::Format {
            path: path.to_path_buf(),
            message: format!("missing column '{name}'"),
        })
    };
    let id_col = require("id")?;
    let arm_col = require("arm")?;
    let measure_cols: Vec<(usize, Option<usize>)> = hierarchy
        .measures()
        .iter()
        .map(|m| Ok((require(&m.name)?, column(&format!("{}_censored", m.name)))))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell = |c: usize| row.get(c).unwrap_or("");
        let id = cell(id_col);
        if id.is_empty() {
            return Err(parse_err(path, line, id_col + 1, "empty patient id"));
        }
        let arm = match cell(arm_col) {
            "1" => Arm::Treatment,
            "0" => Arm::Control,
            other => {
                return Err(parse_err(
                    path,
                    line,
                    arm_col + 1,
                    format!("arm '{other}' is not 1 (treatment) or 0 (control)"),
                ))
            }
        };
        let mut values = Vec::with_capacity(measure_cols.len());
        for (spec, &(vc, cc)) in hierarchy.measures().iter().zip(&measure_cols) {
            let raw = cell(vc);
            let value = if is_missing(raw) {
                None
            } else {
                let v: f64 = raw.parse().map_err(|_| {
                    parse_err(
                        path,
                        line,
                        vc + 1,
                        format!("'{raw}' is not a number for measure '{}'", spec.name),
                    )
                })?;
                Some(v)
            };
            let censored = match cc.map(cell) {
                None | Some("0") => false,
                Some(c) if is_missing(c) => false,
                Some("1") => true,
                Some(other) => {
                    return Err(parse_err(
                        path,
                        line,
                        cc.unwrap_or(0) + 1,
                        format!("censoring flag '{other}' is not 0 or 1"),
                    ))
                }
            };
            values.push(Observation { value, censored });
        }
        let record = PatientRecord::new(id, arm, values);
        record
            .check(hierarchy)
            .map_err(|e| parse_err(path, line, 0, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "data file has no patient rows".into(),
        });
    }
    Ok(records)
}

pub fn read_data(path: &Path, hierarchy: &Hierarchy) -> Result<Vec<PatientRecord>> {
    parse_data(&read_text(path)?, path, hierarchy)
}
