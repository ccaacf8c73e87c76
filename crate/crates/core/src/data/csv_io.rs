use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{ColumnRole, Dataset, FeatureRecord, Peptide, Schema, NUM_FEATURES};
use crate::error::{NeoError, Result};

/// Read a dataset CSV from disk.
pub fn parse_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| NeoError::io(path, e))?;
    read_dataset(file, schema)
}

pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
    let expected = schema.names();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(NeoError::Parse {
            line: 1,
            message: format!(
                "header mismatch: expected '{}', found '{}'",
                expected.join(","),
                found.join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(0, e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != schema.columns.len() {
            return Err(NeoError::Parse {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    schema.columns.len(),
                    row.len()
                ),
            });
        }
        records.push(parse_row(&row, schema, line)?);
    }
    Dataset::new(records, schema.clone())
}

fn csv_error(line: usize, e: csv::Error) -> NeoError {
    let line = e.position().map_or(line, |p| p.line() as usize);
    NeoError::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_row(row: &csv::StringRecord, schema: &Schema, line: usize) -> Result<FeatureRecord> {
    let at = |e: NeoError| NeoError::Parse {
        line,
        message: e.to_string(),
    };
    let mut id = String::new();
    let mut mut_pep = None;
    let mut wt_pep = None;
    let mut hla = String::new();
    let mut numeric = [None; NUM_FEATURES];
    let mut slot = 0;
    let mut label = 0u8;

    for (col, cell) in schema.columns.iter().zip(row.iter()) {
        let cell = cell.trim();
        match col.role {
            ColumnRole::Id => id = cell.to_string(),
            ColumnRole::PeptideMut => mut_pep = Some(Peptide::parse(cell).map_err(at)?),
            ColumnRole::PeptideWt => wt_pep = Some(Peptide::parse(cell).map_err(at)?),
            ColumnRole::Hla => hla = cell.to_string(),
            ColumnRole::Numeric => {
                numeric[slot] = if cell.is_empty() {
                    None
                } else {
                    let v: f64 = cell.parse().map_err(|_| NeoError::Parse {
                        line,
                        message: format!("column '{}': '{cell}' is not a number", col.name),
                    })?;
                    if !v.is_finite() {
                        return Err(NeoError::Parse {
                            line,
                            message: format!("column '{}': non-finite value", col.name),
                        });
                    }
                    Some(v)
                };
                slot += 1;
            }
            ColumnRole::Label => {
                label = match cell.parse::<f64>() {
                    Ok(0.0) => 0,
                    Ok(1.0) => 1,
                    _ => {
                        return Err(NeoError::Parse {
                            line,
                            message: format!("label '{cell}' is not 0.0 or 1.0"),
                        })
                    }
                }
            }
            ColumnRole::Dropped => {}
        }
    }

    Ok(FeatureRecord {
        id,
        peptide_mut: mut_pep.expect("schema validated"),
        peptide_wt: wt_pep.expect("schema validated"),
        hla,
        numeric,
        label,
    })
}

/// Render a dataset in its schema's CSV layout. Missing cells are empty and
/// labels are written as `0.0` / `1.0`.
pub fn serialize_dataset(d: &Dataset) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    wtr.write_record(d.schema.names()).expect("in-memory write");
    for r in &d.records {
        let mut slot = 0;
        let cells: Vec<String> = d
            .schema
            .columns
            .iter()
            .map(|c| match c.role {
                ColumnRole::Id => r.id.clone(),
                ColumnRole::PeptideMut => r.peptide_mut.to_string(),
                ColumnRole::PeptideWt => r.peptide_wt.to_string(),
                ColumnRole::Hla => r.hla.clone(),
                ColumnRole::Numeric => {
                    let v = r.numeric[slot];
                    slot += 1;
                    v.map(|x| format!("{x:?}")).unwrap_or_default()
                }
                ColumnRole::Label => format!("{:.1}", r.label as f64),
                ColumnRole::Dropped => String::new(),
            })
            .collect();
        wtr.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn write_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_dataset(d)).map_err(|e| NeoError::io(path, e))
}
