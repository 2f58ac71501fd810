//! Multiscale grid of bootstrap sample sizes and variance scales.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One scale: the bootstrap sample size (when resampling rows) and the
/// realized variance scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    pub n_prime: Option<u64>,
    pub sigma2: f64,
}

/// Ordered set of scales, smallest variance first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub entries: Vec<ScaleEntry>,
    /// Original sample size; absent for purely parametric grids.
    pub n: Option<u64>,
}

/// Number of scales in the default grid.
pub const DEFAULT_SCALES: usize = 13;

/// The default 13-scale grid: target variance scales log-evenly spaced on
/// `[1/9, 9]`, each realized through an integer bootstrap sample size
/// `n' = floor(n / target)` with the stored scale recomputed as `n / n'`.
pub fn default_scale_grid(n: u64) -> Result<ScaleGrid> {
    if n < 13 {
        return Err(Error::domain(format!(
            "default grid needs n >= 13, got {n}"
        )));
    }
    let mut entries = Vec::with_capacity(DEFAULT_SCALES);
    for i in 0..DEFAULT_SCALES {
        let target = 9.0_f64.powf((i as f64 - 6.0) / 6.0);
        let q = n as f64 / target;
        // Exact divisions land a hair off a whole number in floating point;
        // snap before flooring so they are not pushed down a full integer.
        let q_round = q.round();
        let n_prime = if (q - q_round).abs() < 1e-6 * q_round.max(1.0) {
            q_round as u64
        } else {
            q.floor() as u64
        };
        entries.push(ScaleEntry {
            n_prime: Some(n_prime),
            sigma2: n as f64 / n_prime as f64,
        });
    }

    let mut collisions: Vec<u64> = Vec::new();
    for pair in entries.windows(2) {
        if pair[0].n_prime == pair[1].n_prime {
            let v = pair[0].n_prime.unwrap();
            if collisions.last() != Some(&v) {
                collisions.push(v);
            }
        }
    }
    if !collisions.is_empty() {
        return Err(Error::GridCollision { n, collisions });
    }

    entries.sort_by(|a, b| a.sigma2.total_cmp(&b.sigma2));
    Ok(ScaleGrid {
        entries,
        n: Some(n),
    })
}

impl ScaleGrid {
    /// Purely parametric grid from explicit variance scales.
    pub fn from_sigma2(scales: &[f64]) -> Result<ScaleGrid> {
        if scales.is_empty() {
            return Err(Error::domain("scale grid must not be empty"));
        }
        let mut entries: Vec<ScaleEntry> = scales
            .iter()
            .map(|&s| {
                if !(s > 0.0) {
                    return Err(Error::domain(format!("scales must be > 0, got {s}")));
                }
                Ok(ScaleEntry {
                    n_prime: None,
                    sigma2: s,
                })
            })
            .collect::<Result<_>>()?;
        entries.sort_by(|a, b| a.sigma2.total_cmp(&b.sigma2));
        if entries.windows(2).any(|p| p[0].sigma2 == p[1].sigma2) {
            return Err(Error::domain("scale grid has duplicate entries"));
        }
        Ok(ScaleGrid { entries, n: None })
    }

    /// Grid from explicit bootstrap sample sizes.
    pub fn from_n_primes(n: u64, n_primes: &[u64]) -> Result<ScaleGrid> {
        if n_primes.is_empty() {
            return Err(Error::domain("scale grid must not be empty"));
        }
        let mut entries: Vec<ScaleEntry> = n_primes
            .iter()
            .map(|&np| {
                if np == 0 {
                    return Err(Error::domain("bootstrap sample sizes must be >= 1"));
                }
                Ok(ScaleEntry {
                    n_prime: Some(np),
                    sigma2: n as f64 / np as f64,
                })
            })
            .collect::<Result<_>>()?;
        entries.sort_by(|a, b| a.sigma2.total_cmp(&b.sigma2));
        if entries.windows(2).any(|p| p[0].n_prime == p[1].n_prime) {
            return Err(Error::domain("scale grid has duplicate sample sizes"));
        }
        Ok(ScaleGrid { entries, n: Some(n) })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
