//! Numeric matrix CSV reading and result writing.
//!
//! Input files are comma separated with `.` decimals. A first column is taken
//! as row names when the first cell of the last record is not a number. The
//! first record is a header when any of its value cells is not a number
//! (column names) or, in files with row names, when its values are strictly
//! increasing (grid abscissae, which switch on functional mode).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use projgate_core::{Grid, Label, ObservationSet};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HeaderMode {
    #[default]
    Auto,
    None,
    Grid,
    Names,
}

impl fmt::Display for HeaderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::None => "none",
            Self::Grid => "grid",
            Self::Names => "names",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub data: ObservationSet,
    pub row_names: Option<Vec<String>>,
    pub column_names: Option<Vec<String>>,
}

impl Table {
    pub fn row_name(&self, i: usize) -> Option<&str> {
        self.row_names.as_ref().map(|names| names[i].as_str())
    }
}

struct Record {
    line: u64,
    cells: Vec<String>,
}

fn is_number(cell: &str) -> bool {
    f64::from_str(cell).is_ok()
}

fn records(bytes: &[u8]) -> CliResult<Vec<Record>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(Record {
            line,
            cells: rec.iter().map(str::to_string).collect(),
        });
    }
    Ok(out)
}

fn parse_cell(cell: &str, line: u64, column: usize) -> CliResult<f64> {
    match f64::from_str(cell) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(CliError::data(format!(
            "line {line}, column {column}: non-finite value '{cell}'"
        ))),
        Err(_) => Err(CliError::data(format!(
            "line {line}, column {column}: cannot parse '{cell}' as a number"
        ))),
    }
}

pub fn read_table(path: &Path, mode: HeaderMode) -> CliResult<Table> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    parse_table(&bytes, mode).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_table(bytes: &[u8], mode: HeaderMode) -> CliResult<Table> {
    let recs = records(bytes)?;
    let last = recs.last().ok_or_else(|| CliError::data("no rows"))?;
    let named = last.cells.first().is_some_and(|c| !is_number(c));
    let skip = usize::from(named);

    let first_values = &recs[0].cells[skip.min(recs[0].cells.len())..];
    let first_numeric = first_values.iter().all(|c| is_number(c));
    let increasing = first_numeric
        && first_values
            .iter()
            .map(|c| f64::from_str(c).unwrap())
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] < w[1]);
    let header = match mode {
        HeaderMode::None => None,
        HeaderMode::Grid => Some(HeaderMode::Grid),
        HeaderMode::Names => Some(HeaderMode::Names),
        HeaderMode::Auto if !first_numeric => Some(HeaderMode::Names),
        HeaderMode::Auto if named && increasing && recs.len() > 1 => Some(HeaderMode::Grid),
        HeaderMode::Auto => None,
    };

    let body = if header.is_some() {
        &recs[1..]
    } else {
        &recs[..]
    };
    if body.is_empty() {
        return Err(CliError::data("no data rows"));
    }
    let width = header.map_or(body[0].cells.len(), |_| recs[0].cells.len());
    if width <= skip {
        return Err(CliError::data(format!(
            "line {}: no value columns",
            recs[0].line
        )));
    }
    let d = width - skip;
    let mut values = Array2::<f64>::zeros((body.len(), d));
    let mut names = Vec::new();
    for (i, rec) in body.iter().enumerate() {
        if rec.cells.len() != width {
            return Err(CliError::data(format!(
                "line {}: expected {width} fields, found {}",
                rec.line,
                rec.cells.len()
            )));
        }
        if named {
            names.push(rec.cells[0].clone());
        }
        for j in 0..d {
            values[[i, j]] = parse_cell(&rec.cells[j + skip], rec.line, j + skip + 1)?;
        }
    }

    let mut data = ObservationSet::new(values)?;
    let mut column_names = None;
    match header {
        Some(HeaderMode::Grid) => {
            let head = &recs[0];
            let points = (skip..width)
                .map(|j| parse_cell(&head.cells[j], head.line, j + 1))
                .collect::<CliResult<Vec<f64>>>()?;
            data = data.with_grid(Grid::new(points)?)?;
        }
        Some(_) => column_names = Some(recs[0].cells[skip..].to_vec()),
        None => {}
    }
    Ok(Table {
        data,
        row_names: named.then_some(names),
        column_names,
    })
}

/// Reads 0/1 weights from the last column; a non-numeric first record is a header.
pub fn read_weights(path: &Path) -> CliResult<Vec<u8>> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let recs = records(&bytes)?;
    let start = usize::from(
        recs.first()
            .and_then(|r| r.cells.last())
            .is_some_and(|c| !is_number(c)),
    );
    recs[start..]
        .iter()
        .map(|rec| {
            let cell = rec.cells.last().map(String::as_str).unwrap_or("");
            match cell {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(CliError::data(format!(
                    "{}: line {}, column {}: weight must be 0 or 1, found '{other}'",
                    path.display(),
                    rec.line,
                    rec.cells.len()
                ))),
            }
        })
        .collect()
}

pub fn write_weights(path: &Path, weights: &[u8], names: Option<&[String]>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    match names {
        Some(names) => {
            w.write_record(["row", "name", "weight"])?;
            for (i, (wt, name)) in weights.iter().zip(names).enumerate() {
                w.write_record([(i + 1).to_string(), name.clone(), wt.to_string()])?;
            }
        }
        None => {
            w.write_record(["row", "weight"])?;
            for (i, wt) in weights.iter().enumerate() {
                w.write_record([(i + 1).to_string(), wt.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a sample with an `id` column; functional samples get a grid header.
pub fn write_sample(path: &Path, data: &ObservationSet) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["id".to_string()];
    match data.grid() {
        Some(g) => head.extend(g.points().iter().map(f64::to_string)),
        None => head.extend((1..=data.d()).map(|j| format!("x{j}"))),
    }
    w.write_record(&head)?;
    for i in 0..data.n() {
        let mut rec = vec![row_id(i)];
        rec.extend(data.row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels(path: &Path, labels: &[Label]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        let label = match l {
            Label::Core => "core",
            Label::Outlier => "outlier",
        };
        w.write_record([row_id(i).as_str(), label])?;
    }
    w.flush()?;
    Ok(())
}

fn row_id(i: usize) -> String {
    format!("obs{:03}", i + 1)
}
