//! Bootstrap replicate generation and region-membership counting.
//!
//! Replicates are drawn from per-(scale, replicate) RNG substreams and are
//! never materialized beyond the one being examined, so counts are bit-exact
//! under any parallel schedule.

use crate::counts::{CountRow, CountTable};
use crate::dataset::DatasetMatrix;
use crate::error::{Error, Result};
use crate::grid::ScaleGrid;
use crate::par::pmap_range;
use crate::rng::{replicate_rng, StreamDomain};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

const CHUNK: u64 = 1024;

/// Gaussian bootstrap: draw `B` replicates `Y* ~ N(y, sigma2 I)` per scale
/// and count how many fall in the region.
pub fn parametric_counts<F>(
    y: &[f64],
    membership: F,
    grid: &ScaleGrid,
    b: u64,
    seed: u64,
) -> Result<CountTable>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    if b == 0 {
        return Err(Error::domain("need at least one replicate"));
    }
    if y.is_empty() {
        return Err(Error::domain("point must have at least one coordinate"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (scale_index, entry) in grid.entries.iter().enumerate() {
        let sigma = entry.sigma2.sqrt();
        let n_chunks = b.div_ceil(CHUNK) as usize;
        let counts = pmap_range(n_chunks, |chunk| {
            let lo = chunk as u64 * CHUNK;
            let hi = (lo + CHUNK).min(b);
            let mut hits = 0u64;
            let mut point = vec![0.0; y.len()];
            for r in lo..hi {
                let mut rng = replicate_rng(seed, StreamDomain::ParametricBootstrap, scale_index, r);
                for (p, &c) in point.iter_mut().zip(y) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = c + sigma * z;
                }
                if membership(&point) {
                    hits += 1;
                }
            }
            hits
        });
        rows.push(CountRow {
            sigma2: entry.sigma2,
            n_prime: entry.n_prime,
            b,
            c: counts.iter().sum(),
        });
    }
    CountTable::new(rows)
}

/// What to do when the replicate statistic fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Abort the run on the first failing replicate.
    #[default]
    Error,
    /// Drop failing replicates (shrinking that row's `B`) and record them.
    SkipAndRecord,
}

/// One skipped replicate under [`FailurePolicy::SkipAndRecord`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedReplicate {
    pub scale_index: usize,
    pub replicate: u64,
    pub message: String,
}

/// Row-resampling bootstrap: per scale, draw `B` replicates of `n'` rows with
/// replacement and count how many satisfy the statistic.
///
/// Rows are addressed through the label-sorted order, so shuffling the input
/// rows does not change the counts.
pub fn nonparametric_counts<F>(
    data: &DatasetMatrix,
    statistic: F,
    grid: &ScaleGrid,
    b: u64,
    seed: u64,
    policy: FailurePolicy,
) -> Result<(CountTable, Vec<SkippedReplicate>)>
where
    F: Fn(&DatasetMatrix, &[usize]) -> std::result::Result<bool, String> + Sync,
{
    if b == 0 {
        return Err(Error::domain("need at least one replicate"));
    }
    let order = data.label_sorted_rows();
    let n = data.n_rows();
    let mut rows = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    for (scale_index, entry) in grid.entries.iter().enumerate() {
        let n_prime = entry.n_prime.ok_or_else(|| {
            Error::domain(format!(
                "row resampling needs a sample size for every scale; scale {} has none",
                entry.sigma2
            ))
        })? as usize;
        let n_chunks = b.div_ceil(CHUNK) as usize;
        let outcomes = pmap_range(n_chunks, |chunk| {
            let lo = chunk as u64 * CHUNK;
            let hi = (lo + CHUNK).min(b);
            let mut hits = 0u64;
            let mut failures: Vec<(u64, String)> = Vec::new();
            let mut idx = vec![0usize; n_prime];
            for r in lo..hi {
                let mut rng =
                    replicate_rng(seed, StreamDomain::NonparametricBootstrap, scale_index, r);
                for slot in idx.iter_mut() {
                    *slot = order[rng.random_range(0..n)];
                }
                match statistic(data, &idx) {
                    Ok(true) => hits += 1,
                    Ok(false) => {}
                    Err(message) => failures.push((r, message)),
                }
            }
            (hits, failures)
        });
        let mut hits = 0u64;
        let mut failed = 0u64;
        for (h, failures) in outcomes {
            hits += h;
            for (replicate, message) in failures {
                match policy {
                    FailurePolicy::Error => {
                        return Err(Error::ReplicateStatistic {
                            scale_index,
                            replicate,
                            message,
                        })
                    }
                    FailurePolicy::SkipAndRecord => {
                        failed += 1;
                        skipped.push(SkippedReplicate {
                            scale_index,
                            replicate,
                            message,
                        });
                    }
                }
            }
        }
        let effective_b = b - failed;
        if effective_b == 0 {
            return Err(Error::domain(format!(
                "every replicate failed at scale {}",
                entry.sigma2
            )));
        }
        rows.push(CountRow {
            sigma2: entry.sigma2,
            n_prime: entry.n_prime,
            b: effective_b,
            c: hits,
        });
    }
    Ok((CountTable::new(rows)?, skipped))
}
