use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{IoError, Result};

/// A rectangular numeric table, optionally with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub names: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl RawMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Splits off the last column as labels.
    pub fn split_labels(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = self.rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect();
        let y = self.rows.iter().map(|r| r[r.len() - 1]).collect();
        (x, y)
    }
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// Reads numeric CSV. With `has_header = None` the first record is taken as
/// a header when any of its fields is not a number.
pub fn read_csv<R: Read>(reader: R, has_header: Option<bool>) -> Result<RawMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::Parse {
                line,
                column: 0,
                msg: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if i == 0 {
            let header = has_header.unwrap_or_else(|| rec.iter().any(|f| parse_field(f).is_none()));
            if header {
                names = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
                width = Some(rec.len());
                continue;
            }
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(IoError::RaggedRows {
                line,
                expected: w,
                got: rec.len(),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, f)| {
                parse_field(f).filter(|v| v.is_finite()).ok_or_else(|| IoError::Parse {
                    line,
                    column: j + 1,
                    msg: format!("{f:?} is not a finite number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IoError::Parse {
            line: 1,
            column: 0,
            msg: "no data rows".into(),
        });
    }
    log::debug!("read {} rows x {} columns", rows.len(), rows[0].len());
    Ok(RawMatrix { names, rows })
}

pub fn load_csv(path: &Path, has_header: Option<bool>) -> Result<RawMatrix> {
    read_csv(File::open(path)?, has_header)
}

/// Writes rows with full-precision decimals.
pub fn write_csv<W: Write>(out: W, header: Option<&[String]>, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| IoError::Io(std::io::Error::other(e));
    if let Some(h) = header {
        w.write_record(h).map_err(err)?;
    }
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}
