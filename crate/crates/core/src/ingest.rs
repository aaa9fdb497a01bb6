//! Multivariate time series CSV to tensor.
//!
//! Rows are time steps, columns are variates. With a period hierarchy such as
//! `[24, 60]` the result has shape `features × days × 24 × 60`. Steps missing
//! from an incomplete final period are filled with the mean of the same
//! within-period position over the complete periods.

use std::io::Read;

use crate::error::{invalid, Error, Result};
use crate::tensor::DenseTensor;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IngestOptions {
    /// Sizes of the within-period time modes, most significant first.
    pub reshape: Vec<usize>,
    /// Skip the first line.
    pub has_header: bool,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub tensor: DenseTensor<f64>,
    /// Number of time steps present in the file.
    pub observed_steps: usize,
    /// Number of imputed entries (per feature × imputed steps).
    pub imputed: usize,
}

/// Reads all numeric rows; every row must have the same number of cells.
pub fn read_matrix<R: Read>(reader: R, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("non-numeric cell `{cell}` at row {line}, column {col}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Format(format!(
                    "row {line} has {} cells, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(invalid("CSV contains no data"));
    }
    Ok(rows)
}

/// Tensorizes a `steps × features` series into `features × periods × reshape…`.
pub fn tensorize(rows: &[Vec<f64>], reshape: &[usize]) -> Result<Ingested> {
    if rows.is_empty() {
        return Err(invalid("no time steps"));
    }
    if reshape.is_empty() || reshape.contains(&0) {
        return Err(invalid(format!("invalid period shape {reshape:?}")));
    }
    let nf = rows[0].len();
    let period: usize = reshape.iter().product();
    let steps = rows.len();
    let n_periods = steps.div_ceil(period);
    let complete = steps / period;
    let missing = n_periods * period - steps;
    if missing > 0 && complete == 0 {
        return Err(invalid("no complete period to impute the incomplete one from"));
    }
    let mut shape = vec![nf, n_periods];
    shape.extend_from_slice(reshape);
    let t2 = n_periods * period;
    let mut data = vec![0.0; nf * t2];
    for f in 0..nf {
        let base = f * t2;
        for (t, row) in rows.iter().enumerate() {
            data[base + t] = row[f];
        }
        for t in steps..t2 {
            let pos = t % period;
            let sum: f64 = (0..complete).map(|p| rows[p * period + pos][f]).sum();
            data[base + t] = sum / complete as f64;
        }
    }
    Ok(Ingested {
        tensor: DenseTensor::new(shape, data)?,
        observed_steps: steps,
        imputed: missing * nf,
    })
}

pub fn ingest_csv<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let rows = read_matrix(reader, opts.has_header)?;
    tensorize(&rows, &opts.reshape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_of(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> String {
        let mut s = String::new();
        for r in 0..rows {
            let line: Vec<String> = (0..cols).map(|c| f(r, c).to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    fn opts(reshape: Vec<usize>) -> IngestOptions {
        IngestOptions {
            reshape,
            has_header: false,
        }
    }

    #[test]
    fn full_days_reshape() {
        let s = csv_of(2880, 38, |r, c| (r * 100 + c) as f64);
        let out = ingest_csv(s.as_bytes(), &opts(vec![24, 60])).unwrap();
        assert_eq!(out.tensor.shape(), &[38, 2, 24, 60]);
        assert_eq!(out.imputed, 0);
        // day 1, hour 3, minute 7 of feature 5
        let r = 1440 + 3 * 60 + 7;
        assert_eq!(out.tensor.get(&[5, 1, 3, 7]), (r * 100 + 5) as f64);
    }

    #[test]
    fn incomplete_day_is_mean_imputed() {
        // day 0 constant per feature, day 1 partially present
        let s = csv_of(1500, 38, |r, c| if r < 1440 { c as f64 * 2.0 } else { -1.0 });
        let out = ingest_csv(s.as_bytes(), &opts(vec![24, 60])).unwrap();
        assert_eq!(out.tensor.shape(), &[38, 2, 24, 60]);
        assert_eq!(out.imputed, 38 * (2880 - 1500));
        for f in 0..38 {
            for t in 0..1440usize {
                let v = out.tensor.get(&[f, 1, t / 60, t % 60]);
                if t < 60 {
                    assert_eq!(v, -1.0);
                } else {
                    assert_eq!(v, f as f64 * 2.0);
                }
            }
        }
    }

    #[test]
    fn imputation_averages_all_complete_days() {
        let s = csv_of(7, 1, |r, _| if r < 6 { (r % 3) as f64 + (r / 3) as f64 * 10.0 } else { 99.0 });
        let out = ingest_csv(s.as_bytes(), &opts(vec![3])).unwrap();
        assert_eq!(out.tensor.shape(), &[1, 3, 3]);
        assert_eq!(out.tensor.as_slice(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 99.0, 6.0, 7.0]);
    }

    #[test]
    fn single_column() {
        let s = csv_of(120, 1, |r, _| r as f64);
        let out = ingest_csv(s.as_bytes(), &opts(vec![2, 60])).unwrap();
        assert_eq!(out.tensor.shape(), &[1, 1, 2, 60]);
    }

    #[test]
    fn errors() {
        assert!(ingest_csv("".as_bytes(), &opts(vec![2])).is_err());
        assert!(ingest_csv("1,2\n3,x\n".as_bytes(), &opts(vec![2])).is_err());
        assert!(ingest_csv("1,2\n3\n".as_bytes(), &opts(vec![2])).is_err());
        assert!(ingest_csv("1\n2\n".as_bytes(), &opts(vec![0])).is_err());
        assert!(ingest_csv("1\n".as_bytes(), &opts(vec![2])).is_err());
        let with_header = IngestOptions {
            reshape: vec![2],
            has_header: true,
        };
        let out = ingest_csv("a,b\n1,2\n3,4\n".as_bytes(), &with_header).unwrap();
        assert_eq!(out.tensor.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
    }
}
