//! Cluster-frequency counting: re-cluster row resamples at every scale and
//! count how often each target's exact leaf set reappears.

use super::dist::{DistanceMatrix, Metric};
use super::tree::{upgma_core, ClusterId};
use crate::counts::{CountRow, CountTable};
use crate::dataset::DatasetMatrix;
use crate::engine::{FailurePolicy, SkippedReplicate};
use crate::error::{Error, Result};
use crate::grid::ScaleGrid;
use crate::par::pmap_range;
use crate::rng::{replicate_rng, StreamDomain};
use rand::Rng;

const CHUNK: u64 = 1024;

/// Per-row sufficient statistics: summing them over a resample with
/// multiplicities reproduces the resample's distance matrix exactly.
struct PairFeatures {
    p: usize,
    metric: Metric,
    width: usize,
    rows: Vec<f64>,
    col_labels: Vec<String>,
}

fn pair_count(p: usize) -> usize {
    p * (p - 1) / 2
}

fn build_features(data: &DatasetMatrix, metric: Metric) -> PairFeatures {
    let p = data.n_cols();
    let n = data.n_rows();
    let m = pair_count(p);
    let width = match metric {
        Metric::EuclidSqMean => m,
        Metric::Correlation => 2 * p + m,
    };
    let mut rows = Vec::with_capacity(n * width);
    for t in 0..n {
        match metric {
            Metric::EuclidSqMean => {
                for i in 1..p {
                    for j in 0..i {
                        let d = data.value(t, i) - data.value(t, j);
                        rows.push(d * d);
                    }
                }
            }
            Metric::Correlation => {
                for i in 0..p {
                    rows.push(data.value(t, i));
                }
                for i in 0..p {
                    let v = data.value(t, i);
                    rows.push(v * v);
                }
                for i in 1..p {
                    for j in 0..i {
                        rows.push(data.value(t, i) * data.value(t, j));
                    }
                }
            }
        }
    }
    PairFeatures {
        p,
        metric,
        width,
        rows,
        col_labels: data.col_labels().to_vec(),
    }
}

impl PairFeatures {
    /// Distance matrix of the resample described by row multiplicities `w`.
    fn distance(
        &self,
        w: &[u32],
        n_prime: usize,
    ) -> std::result::Result<DistanceMatrix, String> {
        let mut acc = vec![0.0f64; self.width];
        for (t, &wt) in w.iter().enumerate() {
            if wt == 0 {
                continue;
            }
            let wt = wt as f64;
            let base = t * self.width;
            for (a, f) in acc.iter_mut().zip(&self.rows[base..base + self.width]) {
                *a += wt * f;
            }
        }
        let n = n_prime as f64;
        let p = self.p;
        let tri = match self.metric {
            Metric::EuclidSqMean => acc.iter().map(|s| s / n).collect::<Vec<f64>>(),
            Metric::Correlation => {
                let means: Vec<f64> = (0..p).map(|i| acc[i] / n).collect();
                let vars: Vec<f64> = (0..p)
                    .map(|i| acc[p + i] / n - means[i] * means[i])
                    .collect();
                if let Some(i) = vars.iter().position(|v| *v <= 0.0) {
                    return Err(format!(
                        "column {:?} has zero variance in the resample",
                        self.col_labels[i]
                    ));
                }
                let mut tri = Vec::with_capacity(pair_count(p));
                let mut k = 2 * p;
                for i in 1..p {
                    for j in 0..i {
                        let cov = acc[k] / n - means[i] * means[j];
                        k += 1;
                        tri.push((1.0 - cov / (vars[i] * vars[j]).sqrt()).max(0.0));
                    }
                }
                tri
            }
        };
        DistanceMatrix::from_lower_triangle(p, self.metric, tri).map_err(|e| e.to_string())
    }
}

/// For each target cluster, a count table of how often its exact leaf set
/// appears when the rows are resampled at each scale and re-clustered.
pub fn multiscale_cluster_counts(
    data: &DatasetMatrix,
    metric: Metric,
    targets: &[ClusterId],
    grid: &ScaleGrid,
    b: u64,
    seed: u64,
    policy: FailurePolicy,
) -> Result<(Vec<CountTable>, Vec<SkippedReplicate>)> {
    if b == 0 {
        return Err(Error::domain("need at least one replicate"));
    }
    let p = data.n_cols();
    for target in targets {
        let too_big = target.len() > p - 1;
        let out_of_range = target.leaves().last().map(|&l| l >= p).unwrap_or(false);
        if too_big || out_of_range {
            return Err(Error::domain(format!(
                "target cluster {target} does not fit a {p}-column dataset"
            )));
        }
    }
    let features = build_features(data, metric);
    let order = data.label_sorted_rows();
    let n = data.n_rows();
    let n_targets = targets.len();
    let mut tables: Vec<Vec<CountRow>> = vec![Vec::with_capacity(grid.len()); n_targets];
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
            let mut hits = vec![0u64; n_targets];
            let mut failures: Vec<(u64, String)> = Vec::new();
            let mut weights = vec![0u32; n];
            for r in lo..hi {
                let mut rng =
                    replicate_rng(seed, StreamDomain::NonparametricBootstrap, scale_index, r);
                weights.fill(0);
                for _ in 0..n_prime {
                    weights[order[rng.random_range(0..n)]] += 1;
                }
                let sets = features
                    .distance(&weights, n_prime)
                    .and_then(|d| upgma_core(&d).map(|(_, sets, _)| sets).map_err(|e| e.to_string()));
                match sets {
                    Ok(sets) => {
                        for (hit, target) in hits.iter_mut().zip(targets) {
                            if sets.iter().any(|s| s.as_slice() == target.leaves()) {
                                *hit += 1;
                            }
                        }
                    }
                    Err(message) => failures.push((r, message)),
                }
            }
            (hits, failures)
        });
        let mut hits = vec![0u64; n_targets];
        let mut failed = 0u64;
        for (h, failures) in outcomes {
            for (total, part) in hits.iter_mut().zip(h) {
                *total += part;
            }
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
        for (rows, &count) in tables.iter_mut().zip(&hits) {
            rows.push(CountRow {
                sigma2: entry.sigma2,
                n_prime: entry.n_prime,
                b: effective_b,
                c: count,
            });
        }
    }
    let tables = tables
        .into_iter()
        .map(CountTable::new)
        .collect::<Result<Vec<CountTable>>>()?;
    Ok((tables, skipped))
}

#[cfg(test)]
mod tests {
    use super::super::tree::{average_linkage, clusters_of};
    use super::super::dist::distance;
    use super::*;
    use crate::engine::nonparametric_counts;

    /// Rows drawn around three column centers, first two close together.
    fn separated_data(n: usize) -> DatasetMatrix {
        let mut values = Vec::with_capacity(3 * n);
        for t in 0..n {
            let wobble = ((t * 2654435761) % 17) as f64 / 17.0 - 0.5;
            values.push(wobble);
            values.push(0.3 + 0.9 * wobble);
            values.push(40.0 - wobble);
        }
        let rows = (0..n).map(|i| format!("r{i:04}")).collect();
        let cols = vec!["a".into(), "b".into(), "c".into()];
        DatasetMatrix::new(values, n, 3, rows, cols).unwrap()
    }

    #[test]
    fn well_separated_pair_is_found_in_nearly_every_replicate() {
        let data = separated_data(60);
        let grid = ScaleGrid::from_n_primes(60, &[60, 30]).unwrap();
        let target = ClusterId::new(vec![0, 1]).unwrap();
        let (tables, skipped) = multiscale_cluster_counts(
            &data,
            Metric::EuclidSqMean,
            &[target],
            &grid,
            400,
            7,
            FailurePolicy::Error,
        )
        .unwrap();
        assert!(skipped.is_empty());
        for row in &tables[0].rows {
            assert_eq!(row.c, row.b, "pair missed at sigma2 {}", row.sigma2);
        }
    }

    #[test]
    fn matches_the_generic_engine_on_a_single_target() {
        let data = separated_data(40);
        let grid = ScaleGrid::from_n_primes(40, &[40, 20, 80]).unwrap();
        let target = ClusterId::new(vec![0, 1]).unwrap();
        let (tables, _) = multiscale_cluster_counts(
            &data,
            Metric::EuclidSqMean,
            std::slice::from_ref(&target),
            &grid,
            256,
            99,
            FailurePolicy::Error,
        )
        .unwrap();
        let statistic = |full: &DatasetMatrix, idx: &[usize]| {
            let mut values = Vec::with_capacity(idx.len() * full.n_cols());
            for &t in idx {
                values.extend_from_slice(full.row(t));
            }
            let rows = (0..idx.len()).map(|i| format!("s{i}")).collect();
            let sub = DatasetMatrix::new(
                values,
                idx.len(),
                full.n_cols(),
                rows,
                full.col_labels().to_vec(),
            )
            .map_err(|e| e.to_string())?;
            let d = distance(&sub, Metric::EuclidSqMean).map_err(|e| e.to_string())?;
            let dend = average_linkage(&d).map_err(|e| e.to_string())?;
            let clusters = clusters_of(&dend).map_err(|e| e.to_string())?;
            Ok(clusters.contains(&target))
        };
        let (engine_table, _) =
            nonparametric_counts(&data, statistic, &grid, 256, 99, FailurePolicy::Error).unwrap();
        assert_eq!(tables[0], engine_table);
    }

    #[test]
    fn permuting_rows_leaves_counts_unchanged() {
        let data = separated_data(30);
        let mut shuffled_values = Vec::new();
        let mut shuffled_rows = Vec::new();
        for t in (0..30).rev() {
            shuffled_values.extend_from_slice(data.row(t));
            shuffled_rows.push(data.row_labels()[t].clone());
        }
        let shuffled = DatasetMatrix::new(
            shuffled_values,
            30,
            3,
            shuffled_rows,
            data.col_labels().to_vec(),
        )
        .unwrap();
        let grid = ScaleGrid::from_n_primes(30, &[30, 15]).unwrap();
        let target = ClusterId::new(vec![1, 2]).unwrap();
        let run = |d: &DatasetMatrix| {
            multiscale_cluster_counts(
                d,
                Metric::EuclidSqMean,
                std::slice::from_ref(&target),
                &grid,
                300,
                11,
                FailurePolicy::Error,
            )
            .unwrap()
            .0
        };
        assert_eq!(run(&data), run(&shuffled));
    }

    #[test]
    fn oversized_targets_are_rejected() {
        let data = separated_data(10);
        let grid = ScaleGrid::from_n_primes(10, &[10]).unwrap();
        let err = multiscale_cluster_counts(
            &data,
            Metric::EuclidSqMean,
            &[ClusterId::new(vec![0, 1, 2]).unwrap()],
            &grid,
            10,
            1,
            FailurePolicy::Error,
        )
        .unwrap_err();
        assert!(err.to_string().contains("does not fit"));
        let err = multiscale_cluster_counts(
            &data,
            Metric::EuclidSqMean,
            &[ClusterId::new(vec![0, 7]).unwrap()],
            &grid,
            10,
            1,
            FailurePolicy::Error,
        )
        .unwrap_err();
        assert!(err.to_string().contains("does not fit"));
    }
}
