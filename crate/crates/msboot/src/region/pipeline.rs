//! Full p-value pipeline against an exact oracle: bootstrap probabilities on
//! a scale grid, curve fitting over the candidates, then extrapolation.

use super::RegionOracle;
use crate::error::Result;
use crate::grid::ScaleGrid;
use crate::models::{default_candidates, select_wls_oracle, ModelSpec, OracleRow};
use crate::pvalues::{p_values_a, p_values_b, PValueReport};

/// How to carry the fitted curve to the extrapolation targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Procedure {
    /// Evaluate the fitted curve directly at σ² = −1 and σ² = 0
    /// (polynomial fits only).
    DirectEval,
    /// Taylor-expand with `k` terms around the anchor scales.
    Taylor {
        k: usize,
        sigma2_minus1: f64,
        sigma2_zero: f64,
    },
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub procedure: Procedure,
    pub candidates: Vec<ModelSpec>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            procedure: Procedure::Taylor {
                k: 3,
                sigma2_minus1: 1.0,
                sigma2_zero: 1.0,
            },
            candidates: default_candidates(),
        }
    }
}

/// Exact-probability analogue of the counts-based workflow: instead of
/// bootstrap counts, probe the oracle at each grid scale, fit the best
/// candidate curve, and extrapolate to the p-values.
pub fn pipeline_report(
    oracle: &RegionOracle,
    y: &[f64],
    grid: &ScaleGrid,
    opts: &PipelineOptions,
) -> Result<PValueReport> {
    let rows = grid
        .entries
        .iter()
        .map(|e| {
            Ok(OracleRow {
                sigma2: e.sigma2,
                alpha: oracle.bootstrap_prob(y, e.sigma2)?,
            })
        })
        .collect::<Result<Vec<OracleRow>>>()?;
    let fit_h = select_wls_oracle(&rows, &opts.candidates)?;
    let fit_s = fit_h.negated();
    let mut report = match opts.procedure {
        Procedure::DirectEval => p_values_a(&fit_h, &fit_s)?,
        Procedure::Taylor {
            k,
            sigma2_minus1,
            sigma2_zero,
        } => p_values_b(&fit_h, &fit_s, k, sigma2_minus1, sigma2_zero)?,
    };
    report.p_bp = Some(oracle.bootstrap_prob(y, 1.0)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{OracleConfig, RegionOracle, RegionSpec, SphereOrientation};
    use super::*;
    use crate::stats::std_normal_upper;

    fn geometric_grid() -> ScaleGrid {
        let scales: Vec<f64> = (0..13).map(|i| 9f64.powf((i as f64 - 6.0) / 6.0)).collect();
        ScaleGrid::from_sigma2(&scales).unwrap()
    }

    #[test]
    fn halfspace_pipeline_reproduces_the_closed_forms() {
        let oracle = RegionOracle::new(RegionSpec::Halfspace, OracleConfig::default()).unwrap();
        let y = [0.0, 1.2816];
        let report =
            pipeline_report(&oracle, &y, &geometric_grid(), &PipelineOptions::default()).unwrap();
        let want = std_normal_upper(1.2816);
        assert!((report.p_au - want).abs() < 1e-4, "{}", report.p_au);
        assert!((report.p_si - 2.0 * want).abs() < 2e-4, "{}", report.p_si);
        assert!((report.p_bp.unwrap() - want).abs() < 1e-9);
        assert!((report.gamma_hat - (report.z_h + report.z_s)).abs() < 1e-9);
    }

    #[test]
    fn far_along_a_smooth_boundary_si_approaches_twice_au() {
        let spec = RegionSpec::concave_smooth();
        let oracle = RegionOracle::new(spec, OracleConfig::default()).unwrap();
        let geom = oracle.plane_geom();
        let u = 10.0;
        let y = [u, geom.boundary(u) + 1.5];
        let report =
            pipeline_report(&oracle, &y, &geometric_grid(), &PipelineOptions::default()).unwrap();
        let ratio = report.p_si / (2.0 * report.p_au);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn sphere_pipeline_matches_the_curved_halfspace_limit() {
        let oracle = RegionOracle::new(
            RegionSpec::SphereShell {
                theta: 9.0,
                dim: 10,
                orientation: SphereOrientation::HOutside,
            },
            OracleConfig::default(),
        )
        .unwrap();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 8.0 } else { 0.0 }).collect();
        let report =
            pipeline_report(&oracle, &y, &geometric_grid(), &PipelineOptions::default()).unwrap();
        // Signed distance 1, curvature m/(2θ) = 0.5: in the large-sphere
        // limit z_H → 1.5 and z_H + z_S → 0.5.
        let want = std_normal_upper(1.5) / std_normal_upper(0.5);
        assert!((report.p_si - want).abs() < 0.01, "{} vs {want}", report.p_si);
        assert!(report.gamma_hat > 0.3 && report.gamma_hat < 0.7, "{}", report.gamma_hat);
    }
}
