//! CSV reading and writing of functional samples and factor tables.
//!
//! Functions: header `id,<t_1>,...,<t_K>` where each grid value is a column
//! header (an optional `t_` prefix is accepted), one row per function.
//!
//! Factors: header `id,<name_1>,...`, one row per function. A column whose
//! every cell parses as a number becomes a continuous factor, any other
//! column a categorical factor with levels in first-appearance order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Factor, FactorKind, FunctionalSample};

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn parse_grid_header(cell: &str) -> Result<f64> {
    let stripped = cell.strip_prefix("t_").unwrap_or(cell);
    stripped.parse::<f64>().map_err(|_| Error::Parse {
        line: 1,
        message: format!("grid header `{cell}` is not a number"),
    })
}

pub fn read_functions<R: Read>(input: R) -> Result<FunctionalSample> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header needs an id column and at least one grid column".into(),
        });
    }
    let grid = header.iter().skip(1).map(parse_grid_header).collect::<Result<Vec<_>>>()?;
    let k = grid.len();
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != k + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", k + 1, record.len()),
            });
        }
        ids.push(record[0].to_string());
        for cell in record.iter().skip(1) {
            let v = cell.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("`{cell}` is not a number"),
            })?;
            data.push(v);
        }
    }
    let values = DMatrix::from_row_slice(ids.len(), k, &data);
    FunctionalSample::new(grid, values, ids)
}

pub fn load_functions(path: impl AsRef<Path>) -> Result<FunctionalSample> {
    read_functions(File::open(path)?)
}

/// Writes shortest round-trip representations, so reading back is exact.
pub fn write_functions<W: Write>(sample: &FunctionalSample, output: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["id".to_string()];
    header.extend(sample.grid().iter().map(|t| t.to_string()));
    wtr.write_record(&header)?;
    for (i, id) in sample.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(sample.values().row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_functions(sample: &FunctionalSample, path: impl AsRef<Path>) -> Result<()> {
    write_functions(sample, File::create(path)?)
}

/// Reads a factor table and reorders its rows to match `ids`.
pub fn read_factors<R: Read>(input: R, ids: &[String]) -> Result<Vec<Factor>> {
    read_factors_with(input, ids, &[])
}

/// As [`read_factors`], with the columns named in `categorical` always
/// treated as categorical, even when every label is numeric.
pub fn read_factors_with<R: Read>(input: R, ids: &[String], categorical: &[String]) -> Result<Vec<Factor>> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty header".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows: HashMap<String, Vec<String>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != names.len() + 1 {
            return Err(Error::Parse {
                line: line_of(&record),
                message: format!("expected {} fields, found {}", names.len() + 1, record.len()),
            });
        }
        let id = record[0].to_string();
        let cells = record.iter().skip(1).map(str::to_string).collect();
        if rows.insert(id.clone(), cells).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }
    if let Some(missing) = ids.iter().find(|id| !rows.contains_key(*id)) {
        return Err(Error::IdMismatch(format!("function `{missing}` has no factor row")));
    }
    if rows.len() != ids.len() {
        let known: std::collections::HashSet<&String> = ids.iter().collect();
        let extra = rows.keys().find(|id| !known.contains(id)).cloned().unwrap_or_default();
        return Err(Error::IdMismatch(format!("factor row `{extra}` matches no function")));
    }
    if let Some(unknown) = categorical.iter().find(|c| !names.contains(c)) {
        return Err(Error::UnknownFactor(unknown.clone()));
    }
    names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let column: Vec<&str> = ids.iter().map(|id| rows[id][c].as_str()).collect();
            if categorical.contains(name) {
                Factor::from_labels(name.as_str(), &column)
            } else {
                column_to_factor(name, &column)
            }
        })
        .collect()
}

fn column_to_factor(name: &str, column: &[&str]) -> Result<Factor> {
    let parsed: Vec<Option<f64>> = column.iter().map(|c| c.parse::<f64>().ok()).collect();
    let numeric = parsed.iter().filter(|v| v.is_some()).count();
    if numeric == column.len() {
        let values: Vec<f64> = parsed.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("factor values"));
        }
        Ok(Factor::continuous(name, values))
    } else if numeric == 0 {
        Factor::from_labels(name, column)
    } else {
        Err(Error::MixedColumn(name.to_string()))
    }
}

pub fn load_factors(path: impl AsRef<Path>, ids: &[String]) -> Result<Vec<Factor>> {
    read_factors(File::open(path)?, ids)
}

pub fn load_factors_with(path: impl AsRef<Path>, ids: &[String], categorical: &[String]) -> Result<Vec<Factor>> {
    read_factors_with(File::open(path)?, ids, categorical)
}

/// Writes the continuous and categorical factors; interactions are derived and skipped.
pub fn write_factors<W: Write>(factors: &[Factor], ids: &[String], output: W) -> Result<()> {
    let stored: Vec<&Factor> = factors
        .iter()
        .filter(|f| !matches!(f.kind, FactorKind::Interaction { .. }))
        .collect();
    for f in &stored {
        let len = match &f.kind {
            FactorKind::Continuous { values } => values.len(),
            FactorKind::Categorical { codes, .. } => codes.len(),
            FactorKind::Interaction { .. } => unreachable!(),
        };
        if len != ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "factor `{}` has {len} values for {} ids",
                f.name,
                ids.len()
            )));
        }
    }
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["id".to_string()];
    header.extend(stored.iter().map(|f| f.name.clone()));
    wtr.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        for f in &stored {
            row.push(match &f.kind {
                FactorKind::Continuous { values } => values[i].to_string(),
                FactorKind::Categorical { levels, codes } => levels[codes[i]].clone(),
                FactorKind::Interaction { .. } => unreachable!(),
            });
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_factors(factors: &[Factor], ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    write_factors(factors, ids, File::create(path)?)
}
