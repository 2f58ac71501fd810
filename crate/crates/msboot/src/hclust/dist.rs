//! Pairwise distances between the columns of a data matrix.

use crate::dataset::DatasetMatrix;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean squared coordinate difference `(1/n)·Σ_t (x_ti − x_tj)²`.
    EuclidSqMean,
    /// `1 − cor(x_i, x_j)` with the sample correlation.
    Correlation,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "euclid" | "euclid-sq-mean" | "euclidean" => Ok(Metric::EuclidSqMean),
            "cor" | "correlation" => Ok(Metric::Correlation),
            other => Err(Error::domain(format!("unknown distance metric `{other}`"))),
        }
    }
}

/// Symmetric nonnegative distances over `p` items, lower triangle stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    p: usize,
    metric: Metric,
    tri: Vec<f64>,
}

impl DistanceMatrix {
    /// `tri[i(i−1)/2 + j]` is the distance between items `i > j`.
    pub fn from_lower_triangle(p: usize, metric: Metric, tri: Vec<f64>) -> Result<DistanceMatrix> {
        if p < 2 {
            return Err(Error::domain(format!("need at least 2 items, got {p}")));
        }
        if tri.len() != p * (p - 1) / 2 {
            return Err(Error::domain(format!(
                "lower triangle for {p} items needs {} entries, got {}",
                p * (p - 1) / 2,
                tri.len()
            )));
        }
        if let Some(bad) = tri.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::domain(format!(
                "distances must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(DistanceMatrix { p, metric, tri })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            self.tri[hi * (hi - 1) / 2 + lo]
        }
    }
}

/// Distances between all column pairs of `data`.
pub fn distance(data: &DatasetMatrix, metric: Metric) -> Result<DistanceMatrix> {
    let p = data.n_cols();
    let n = data.n_rows();
    let tri = match metric {
        Metric::EuclidSqMean => {
            let mut tri = Vec::with_capacity(p * (p - 1) / 2);
            for i in 1..p {
                for j in 0..i {
                    let mut sum = 0.0;
                    for t in 0..n {
                        let d = data.value(t, i) - data.value(t, j);
                        sum += d * d;
                    }
                    tri.push(sum / n as f64);
                }
            }
            tri
        }
        Metric::Correlation => {
            let moments = column_moments(data);
            let degenerate: Vec<String> = (0..p)
                .filter(|&i| moments[i].2 <= 0.0)
                .map(|i| data.col_labels()[i].clone())
                .collect();
            if !degenerate.is_empty() {
                return Err(Error::ZeroVarianceColumns {
                    columns: degenerate,
                });
            }
            let mut tri = Vec::with_capacity(p * (p - 1) / 2);
            for i in 1..p {
                for j in 0..i {
                    let mut cross = 0.0;
                    for t in 0..n {
                        cross += data.value(t, i) * data.value(t, j);
                    }
                    let cov = cross / n as f64 - moments[i].0 * moments[j].0;
                    let cor = cov / (moments[i].2 * moments[j].2).sqrt();
                    tri.push((1.0 - cor).max(0.0));
                }
            }
            tri
        }
    };
    DistanceMatrix::from_lower_triangle(p, metric, tri)
}

/// Per-column (mean, mean square, variance).
fn column_moments(data: &DatasetMatrix) -> Vec<(f64, f64, f64)> {
    let n = data.n_rows() as f64;
    (0..data.n_cols())
        .map(|i| {
            let mut s = 0.0;
            let mut s2 = 0.0;
            for t in 0..data.n_rows() {
                let v = data.value(t, i);
                s += v;
                s2 += v * v;
            }
            let mean = s / n;
            let msq = s2 / n;
            (mean, msq, msq - mean * mean)
        })
        .collect()
}
