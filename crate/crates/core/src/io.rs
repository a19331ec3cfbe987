//! Plain CSV helpers: ASCII, `.` decimal separator, mandatory header row,
//! reals written with 17 significant digits.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::Scalar;

/// Formats a real with 17 significant digits, which round-trips `f64`.
pub fn fmt_real<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Reads a CSV with the given header; returns the data rows split on commas.
pub fn read_rows<R: BufRead>(reader: R, header: &str) -> Result<Vec<Vec<String>>> {
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.ok_or_else(|| Error::Format("empty CSV, header missing".into()))?;
    if first.trim() != header {
        return Err(Error::Format(format!("expected header `{header}`, got `{}`", first.trim())));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::Format(format!("row {}: expected {width} fields, got {}", i + 2, fields.len())));
        }
        rows.push(fields);
    }
    Ok(rows)
}

pub fn parse_real<T: Scalar>(s: &str) -> Result<T> {
    s.parse::<f64>().map(T::of).map_err(|_| Error::Format(format!("not a real number: '{s}'")))
}

pub fn parse_index(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::Format(format!("not a non-negative integer: '{s}'")))
}
