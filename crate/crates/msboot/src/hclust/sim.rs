//! Synthetic three-column dataset drawn from an equal mixture of two normal
//! components, useful for exercising the clustering pipeline end to end.

use crate::dataset::DatasetMatrix;
use crate::error::{Error, Result};
use crate::rng::{replicate_rng, StreamDomain};
use rand::Rng;
use rand_distr::StandardNormal;

/// `n` rows of three columns: each row comes with equal probability from
/// `N((a, a, 0), I)` or `N((a, 0, a), I)`.  Larger `a` separates the first
/// column's pairing partner more clearly.
pub fn mixture_sim(a: f64, n: usize, seed: u64) -> Result<DatasetMatrix> {
    if n == 0 {
        return Err(Error::domain("need at least one row"));
    }
    if !a.is_finite() {
        return Err(Error::domain("mixture offset must be finite"));
    }
    let mut rng = replicate_rng(seed, StreamDomain::MixtureSim, 0, 0);
    let width = n.to_string().len();
    let mut values = Vec::with_capacity(3 * n);
    let mut row_labels = Vec::with_capacity(n);
    for t in 0..n {
        let second_component = rng.random_bool(0.5);
        let mu = if second_component {
            [a, 0.0, a]
        } else {
            [a, a, 0.0]
        };
        for m in mu {
            let z: f64 = rng.sample(StandardNormal);
            values.push(m + z);
        }
        row_labels.push(format!("r{:0width$}", t + 1));
    }
    let col_labels = vec!["v1".to_string(), "v2".to_string(), "v3".to_string()];
    DatasetMatrix::new(values, n, 3, row_labels, col_labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_the_mixture() {
        let n = 20_000;
        let data = mixture_sim(2.0, n, 5).unwrap();
        let mut mean = [0.0f64; 3];
        for t in 0..n {
            for j in 0..3 {
                mean[j] += data.value(t, j);
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let se = 3.0 * (2.25f64 / n as f64).sqrt();
        assert!((mean[0] - 2.0).abs() < se, "col 1 mean {}", mean[0]);
        assert!((mean[1] - 1.0).abs() < se, "col 2 mean {}", mean[1]);
        assert!((mean[2] - 1.0).abs() < se, "col 3 mean {}", mean[2]);
        let mut cross = 0.0;
        for t in 0..n {
            cross += (data.value(t, 1) - mean[1]) * (data.value(t, 2) - mean[2]);
        }
        cross /= n as f64;
        assert!(
            (cross + 1.0) < 0.2 && (cross + 1.0) > -0.2,
            "columns 2 and 3 should be anticorrelated by the component split, got cov {cross}"
        );
    }

    #[test]
    fn same_seed_reproduces_and_labels_sort_in_row_order() {
        let a = mixture_sim(1.0, 12, 9).unwrap();
        let b = mixture_sim(1.0, 12, 9).unwrap();
        assert_eq!(a.row(3), b.row(3));
        assert_eq!(a.label_sorted_rows(), (0..12).collect::<Vec<_>>());
        let c = mixture_sim(1.0, 12, 10).unwrap();
        assert_ne!(a.row(0), c.row(0));
    }

    #[test]
    fn rejects_empty_requests() {
        assert!(mixture_sim(1.0, 0, 1).is_err());
        assert!(mixture_sim(f64::NAN, 5, 1).is_err());
    }
}
