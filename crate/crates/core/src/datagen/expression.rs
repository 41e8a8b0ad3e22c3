use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real-valued expression table: rows are samples, columns are genes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    pub values: DMatrix<f64>,
    pub row_ids: Vec<String>,
    pub column_ids: Vec<String>,
}

impl ExpressionMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

pub fn load_expression_matrix(path: impl AsRef<Path>) -> Result<ExpressionMatrix> {
    let file = File::open(path)?;
    parse_expression_matrix(BufReader::new(file))
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "null" | "NULL" | "?")
}

/// Parses the CSV layout: header row of column ids (its first cell labels the
/// id column and is ignored), then one row per sample with the row id first.
///
/// Lines and columns in errors are 1-based and count the header and id column.
pub fn parse_expression_matrix<R: Read>(reader: R) -> Result<ExpressionMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.byte_records();

    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty input".into(),
            })
        }
    };
    if header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            column: header.len().max(1),
            message: "header needs an id column and at least one data column".into(),
        });
    }
    let column_ids = header
        .iter()
        .skip(1)
        .enumerate()
        .map(|(i, f)| {
            std::str::from_utf8(f).map(|s| s.trim().to_string()).map_err(|_| Error::Parse {
                line: 1,
                column: i + 2,
                message: "column id is not valid UTF-8".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let width = column_ids.len();

    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for (r, rec) in records.enumerate() {
        let line = r + 2;
        let rec = rec?;
        if rec.len() != width + 1 {
            return Err(Error::Parse {
                line,
                column: rec.len().min(width + 1).max(1),
                message: format!("expected {} fields, found {}", width + 1, rec.len()),
            });
        }
        let id = std::str::from_utf8(&rec[0]).map_err(|_| Error::Parse {
            line,
            column: 1,
            message: "row id is not valid UTF-8".into(),
        })?;
        row_ids.push(id.trim().to_string());
        for (c, field) in rec.iter().skip(1).enumerate() {
            let column = c + 2;
            let cell = std::str::from_utf8(field)
                .map_err(|_| Error::Parse {
                    line,
                    column,
                    message: "cell is not valid UTF-8".into(),
                })?
                .trim();
            if is_missing(cell) {
                return Err(Error::MissingValue { line, column });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::MissingValue { line, column });
            }
            data.push(v);
        }
    }
    if row_ids.is_empty() {
        return Err(Error::Parse {
            line: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Ok(ExpressionMatrix {
        values: DMatrix::from_row_slice(row_ids.len(), width, &data),
        row_ids,
        column_ids,
    })
}
