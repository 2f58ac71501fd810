//! Labeled data matrices: rows are sampling units, columns are the items to
//! cluster.

use crate::error::{Error, Result};
use std::io::Read;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl DatasetMatrix {
    pub fn new(
        values: Vec<f64>,
        n_rows: usize,
        n_cols: usize,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<DatasetMatrix> {
        if n_rows < 1 || n_cols < 3 {
            return Err(Error::domain(format!(
                "dataset needs at least 1 row and 3 columns, got {n_rows}x{n_cols}"
            )));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::domain(format!(
                "value buffer has {} entries, expected {}",
                values.len(),
                n_rows * n_cols
            )));
        }
        if row_labels.len() != n_rows || col_labels.len() != n_cols {
            return Err(Error::domain("label lengths do not match matrix shape"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("dataset contains non-finite values"));
        }
        Ok(DatasetMatrix {
            values,
            n_rows,
            n_cols,
            row_labels,
            col_labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Row indices ordered by row label (stable), so resampling does not
    /// depend on the on-disk row order.
    pub fn label_sorted_rows(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_rows).collect();
        order.sort_by(|&a, &b| self.row_labels[a].cmp(&self.row_labels[b]));
        order
    }

    /// Parse a delimited file: header row holds column labels (first cell is
    /// the corner label), each data row starts with its row label.
    pub fn from_delimited(reader: impl Read, delimiter: u8, source: &str) -> Result<DatasetMatrix> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(Error::from)?.clone();
        if headers.len() < 2 {
            return Err(err(1, "header must list at least one column".to_string()));
        }
        let col_labels: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();

        let mut values = Vec::new();
        let mut row_labels = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let lineno = i + 2;
            let record = record.map_err(Error::from)?;
            if record.len() != headers.len() {
                return Err(err(
                    lineno,
                    format!("expected {} fields, got {}", headers.len(), record.len()),
                ));
            }
            row_labels.push(record[0].to_string());
            for (j, field) in record.iter().enumerate().skip(1) {
                let v: f64 = field.parse().map_err(|e| {
                    err(
                        lineno,
                        format!("bad value {field:?} in column {:?}: {e}", &headers[j]),
                    )
                })?;
                values.push(v);
            }
        }
        let n_rows = row_labels.len();
        let n_cols = col_labels.len();
        DatasetMatrix::new(values, n_rows, n_cols, row_labels, col_labels)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<DatasetMatrix> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_delimited(file, b',', &path.display().to_string())
    }
}
