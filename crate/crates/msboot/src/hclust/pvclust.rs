//! End-to-end cluster assessment: build the tree, count every cluster across
//! scales, and attach corrected p-values to each internal node.

use std::collections::HashMap;

use super::counts::multiscale_cluster_counts;
use super::dist::{distance, Metric};
use super::tree::{average_linkage_labeled, clusters_of, newick_annotated, ClusterId, Dendrogram};
use crate::counts::CountTable;
use crate::dataset::DatasetMatrix;
use crate::engine::{FailurePolicy, SkippedReplicate};
use crate::error::Result;
use crate::grid::ScaleGrid;
use crate::models::{default_candidates, select_model, ModelSpec};
use crate::pvalues::{p_bp, p_values_b, PValueReport};
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct PvclustConfig {
    pub metric: Metric,
    /// Candidate scaling-curve models, tried in order and ranked by AIC.
    pub candidates: Vec<ModelSpec>,
    /// Taylor terms used for the two extrapolations.
    pub taylor_k: usize,
    pub policy: FailurePolicy,
}

impl Default for PvclustConfig {
    fn default() -> Self {
        PvclustConfig {
            metric: Metric::EuclidSqMean,
            candidates: default_candidates(),
            taylor_k: 3,
            policy: FailurePolicy::SkipAndRecord,
        }
    }
}

/// Everything known about one internal node of the tree.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterAssessment {
    /// 1-based position in merge order (lowest join first).
    pub index: usize,
    pub id: ClusterId,
    /// Column labels of the cluster's members.
    pub members: Vec<String>,
    /// How often the cluster reappeared, per scale.
    pub counts: CountTable,
    /// Probability that the resampled tree does *not* contain the cluster,
    /// at unit scale.
    pub p_bp: f64,
    pub model: Option<ModelSpec>,
    pub report: Option<PValueReport>,
    /// Why the corrected p-values are missing, when they are.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PvclustOutcome {
    pub dendrogram: Dendrogram,
    pub assessments: Vec<ClusterAssessment>,
    pub skipped: Vec<SkippedReplicate>,
}

pub fn pvclust_run(
    data: &DatasetMatrix,
    grid: &ScaleGrid,
    b: u64,
    seed: u64,
    cfg: &PvclustConfig,
) -> Result<PvclustOutcome> {
    let d = distance(data, cfg.metric)?;
    let dendrogram = average_linkage_labeled(&d, data.col_labels())?;
    let targets = clusters_of(&dendrogram)?;
    let (tables, skipped) =
        multiscale_cluster_counts(data, cfg.metric, &targets, grid, b, seed, cfg.policy)?;
    let assessments = targets
        .into_iter()
        .zip(tables)
        .enumerate()
        .map(|(i, (id, counts))| {
            let members = id
                .leaves()
                .iter()
                .map(|&l| dendrogram.leaf_labels[l].clone())
                .collect();
            assess(i + 1, id, members, counts, cfg)
        })
        .collect::<Result<Vec<ClusterAssessment>>>()?;
    Ok(PvclustOutcome {
        dendrogram,
        assessments,
        skipped,
    })
}

/// Fit the hypothesis-side scaling curve for one cluster.  Any fitting or
/// extrapolation failure downgrades the node to a plain bootstrap proportion
/// instead of aborting the run.
fn assess(
    index: usize,
    id: ClusterId,
    members: Vec<String>,
    counts: CountTable,
    cfg: &PvclustConfig,
) -> Result<ClusterAssessment> {
    let counts_h = counts.complement();
    let bp = p_bp(&counts_h)?;
    let fitted = select_model(&counts_h, &cfg.candidates).and_then(|(best, _)| {
        let fit_s = best.negated();
        let mut report = p_values_b(&best, &fit_s, cfg.taylor_k, 1.0, 1.0)?;
        report.p_bp = Some(bp);
        Ok((best.spec, report))
    });
    let (model, report, note) = match fitted {
        Ok((spec, report)) => (Some(spec), Some(report), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(ClusterAssessment {
        index,
        id,
        members,
        counts,
        p_bp: bp,
        model,
        report,
        note,
    })
}

/// One row per internal node, p-values in [0, 1].
pub fn assessments_to_tsv(items: &[ClusterAssessment]) -> String {
    let mut out = String::from("cluster\tmembers\tbp\tau\tsi\tt\tgamma\tmodel\tflags\n");
    for a in items {
        let members = a.members.join(",");
        let (au, si, t, gamma) = match &a.report {
            Some(r) => (
                format!("{:.4}", r.p_au),
                format!("{:.4}", r.p_si),
                format!("{:.4}", r.t_hat),
                format!("{:.4}", r.gamma_hat),
            ),
            None => ("-".into(), "-".into(), "-".into(), "-".into()),
        };
        let model = a
            .model
            .map(|m| m.to_string())
            .unwrap_or_else(|| "-".into());
        let mut flags = Vec::new();
        if let Some(r) = &a.report {
            if r.flags.clamped_si {
                flags.push("clamped-si");
            }
            if r.flags.degenerate_fit {
                flags.push("degenerate-ratio");
            }
            if r.flags.negative_signed_distance {
                flags.push("inside");
            }
        } else {
            flags.push("bp-only");
        }
        out.push_str(&format!(
            "{}\t{}\t{:.4}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            a.index,
            members,
            a.p_bp,
            au,
            si,
            t,
            gamma,
            model,
            flags.join(",")
        ));
    }
    out
}

/// Newick text with per-node support percentages (100 × (1 − p)); nodes
/// without a fitted curve carry the bootstrap support alone.
pub fn annotated_newick(outcome: &PvclustOutcome) -> String {
    let mut annotations = HashMap::new();
    for a in &outcome.assessments {
        let mut parts = Vec::new();
        if let Some(r) = &a.report {
            parts.push(format!("si={:.1}", 100.0 * (1.0 - r.p_si)));
            parts.push(format!("au={:.1}", 100.0 * (1.0 - r.p_au)));
        }
        parts.push(format!("bp={:.1}", 100.0 * (1.0 - a.p_bp)));
        annotations.insert(a.id.clone(), parts.join(","));
    }
    newick_annotated(&outcome.dendrogram, &annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{replicate_rng, StreamDomain};
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Three exchangeable columns (so the lowest pair is a toss-up) plus one
    /// far column.
    fn contested_data(n: usize, seed: u64) -> DatasetMatrix {
        let mut rng = replicate_rng(seed, StreamDomain::MixtureSim, 1, 0);
        let mut values = Vec::with_capacity(4 * n);
        for _ in 0..n {
            let base: f64 = rng.sample(StandardNormal);
            for _ in 0..3 {
                values.push(base + rng.sample::<f64, _>(StandardNormal));
            }
            values.push(-3.0 * base + rng.sample::<f64, _>(StandardNormal));
        }
        let rows = (0..n).map(|i| format!("r{i:03}")).collect();
        let cols = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        DatasetMatrix::new(values, n, 4, rows, cols).unwrap()
    }

    #[test]
    fn contested_pairs_get_full_reports_and_formatted_output() {
        let data = contested_data(80, 3);
        let grid = ScaleGrid::from_n_primes(80, &[40, 57, 80, 113, 160]).unwrap();
        let cfg = PvclustConfig::default();
        let outcome = pvclust_run(&data, &grid, 800, 17, &cfg).unwrap();
        assert_eq!(outcome.assessments.len(), 2);
        let pair = &outcome.assessments[0];
        assert_eq!(pair.index, 1);
        assert_eq!(pair.id.len(), 2);
        assert!(
            pair.members.iter().all(|m| m != "d"),
            "the far column joined the lowest pair: {:?}",
            pair.members
        );
        assert!(
            pair.p_bp > 0.2 && pair.p_bp < 0.95,
            "contested pair should be uncertain, bp p-value {}",
            pair.p_bp
        );
        let report = pair.report.as_ref().expect("contested pair should fit");
        assert!(pair.model.is_some());
        assert!(report.p_si > 0.0 && report.p_si <= 1.0);
        assert!(report.p_au > 0.0 && report.p_au < 1.0);
        assert_eq!(report.p_bp, Some(pair.p_bp));
        for a in &outcome.assessments {
            assert_eq!(a.counts.rows.len(), 5);
        }
        let tsv = assessments_to_tsv(&outcome.assessments);
        assert!(tsv.starts_with("cluster\tmembers\tbp\tau\tsi\tt\tgamma\tmodel\tflags\n"));
        assert_eq!(tsv.lines().count(), 3);
        let newick = annotated_newick(&outcome);
        assert!(newick.ends_with(";"));
        assert!(newick.contains("bp="));
    }

    #[test]
    fn nodes_present_in_every_replicate_fall_back_to_bp_only() {
        let n = 40;
        let mut values = Vec::with_capacity(4 * n);
        let mut rng = replicate_rng(11, StreamDomain::MixtureSim, 2, 0);
        for _ in 0..n {
            let base: f64 = rng.sample(StandardNormal);
            values.push(base);
            values.push(base + 1e-6 * rng.sample::<f64, _>(StandardNormal));
            values.push(500.0 + rng.sample::<f64, _>(StandardNormal));
            values.push(-500.0 + rng.sample::<f64, _>(StandardNormal));
        }
        let rows = (0..n).map(|i| format!("r{i:03}")).collect();
        let cols = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let data = DatasetMatrix::new(values, n, 4, rows, cols).unwrap();
        let grid = ScaleGrid::from_n_primes(40, &[20, 40, 80]).unwrap();
        let outcome = pvclust_run(&data, &grid, 200, 5, &PvclustConfig::default()).unwrap();
        let pair = outcome
            .assessments
            .iter()
            .find(|a| a.members == ["a", "b"])
            .unwrap();
        assert_eq!(pair.p_bp, 0.0);
        assert!(pair.report.is_none());
        assert!(pair.note.as_deref().unwrap_or("").contains("BP-only"));
        let tsv = assessments_to_tsv(&outcome.assessments);
        assert!(tsv.contains("bp-only"));
        let newick = annotated_newick(&outcome);
        assert!(newick.contains("bp=100.0"));
    }
}
