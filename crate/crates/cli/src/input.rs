//! CSV sample input.

use std::io::Read;

use renyi_core::PointSet;

use crate::CliError;

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

/// Parses comma-separated samples, one per row. A first row with any
/// non-numeric field is taken as a header.
pub fn read_points(reader: impl Read) -> Result<PointSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut data = Vec::new();
    let mut dim = None;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::data(format!("line {line}: {e}")))?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if i == 0 && record.iter().any(|f| !is_numeric(f)) {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(CliError::data(format!("line {line}: expected {d} columns, found {}", record.len())));
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| CliError::data(format!("line {line}: cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(CliError::data(format!("line {line}: non-finite value {field:?}")));
            }
            data.push(v);
        }
    }
    let Some(dim) = dim else {
        return Err(CliError::data("no data".into()));
    };
    PointSet::from_flat(data, dim).map_err(CliError::from)
}
