//! Selective rejection probabilities by exact integration: bisect each
//! p-value's rejection threshold along the direction orthogonal to the
//! boundary, cache the threshold curve, and integrate the normal mass beyond
//! it for every boundary point.

use super::{OracleConfig, RegionOracle, RegionSpec, RejectionMethod, SphereOrientation, SplitSpline};
use crate::error::{Error, Result};
use crate::par;
use crate::stats::{noncentral_chisq_cdf, noncentral_chisq_sf, normal_pdf, std_normal_upper};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

const CURVE_LO: f64 = -8.75;
const CURVE_HI: f64 = 12.25;
const CURVE_STEP: f64 = 0.05;
/// The double bootstrap is costly per point; a coarser grid is ample for its
/// smooth threshold curve.
const SDBP_STEP: f64 = 0.1;
const SDBP_LO: f64 = -8.8;
const SDBP_HI: f64 = 12.3;
/// Boundary grid for the bias average: 0.05·j for j = 0..=70.
const BIAS_STEPS: usize = 70;

impl RegionOracle {
    /// The curve v = r(u) on which the method's p equals `level`, cached.
    pub(crate) fn threshold_curve(
        &self,
        method: RejectionMethod,
        level: f64,
    ) -> Result<Arc<SplitSpline>> {
        let key = (method, level.to_bits());
        if let Some(c) = self.curve_cache().lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        self.check_p_monotone(method)?;
        let geom = self.plane_geom();
        let (lo, hi, step) = if method == RejectionMethod::Sdbp {
            (SDBP_LO, SDBP_HI, SDBP_STEP)
        } else {
            (CURVE_LO, CURVE_HI, CURVE_STEP)
        };
        let n = ((hi - lo) / step).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
        let ys = par::pmap_slice(&xs, |&u| -> Result<f64> {
            let base = geom.boundary(u);
            bisect_decreasing_p(
                |v| self.p_value_plane(method, u, v),
                base - 0.25,
                base + 14.0,
                level,
                self.cfg().bisect_tol,
            )
            .map_err(|e| {
                Error::domain(format!("threshold search for {} at u = {u}: {e}", method.label()))
            })
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let spline = Arc::new(SplitSpline::fit(
            &xs,
            &ys,
            if geom.kinked() { Some(0.0) } else { None },
        )?);
        self.curve_cache()
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| spline.clone());
        Ok(spline)
    }

    /// Verify on a coarse grid that the p-value does not increase while
    /// moving away from the region, which the bisection relies on.
    fn check_p_monotone(&self, method: RejectionMethod) -> Result<()> {
        let geom = self.plane_geom();
        let mut details = String::new();
        let mut ok = true;
        for u in [-3.0, 0.0, 0.7, 1.8, 3.5] {
            let base = geom.boundary(u);
            let mut prev: Option<f64> = None;
            for i in 0..13 {
                let v = base - 0.5 + i as f64 * (11.5 / 12.0);
                let p = self.p_value_plane(method, u, v)?;
                if let Some(prev) = prev {
                    if p > prev + 1e-9 {
                        ok = false;
                        let _ = writeln!(
                            details,
                            "p({u:+.2}, {v:+.3}) = {p:.6e} rose above {prev:.6e}"
                        );
                    }
                }
                prev = Some(p);
            }
        }
        if ok {
            Ok(())
        } else {
            Err(Error::NotMonotone {
                details: format!("{} p-value along the normal direction:\n{details}", method.label()),
            })
        }
    }

    /// P(reject at `level` | selected, μ) for a boundary point μ.
    pub fn selective_rejection_probability(
        &self,
        method: RejectionMethod,
        level: f64,
        mu: &[f64],
    ) -> Result<f64> {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::domain(format!("level must be in (0,1), got {level}")));
        }
        match self.spec() {
            RegionSpec::Halfspace | RegionSpec::CurveBoundary { .. } => {
                let [mu_u, mu_v] = super::plane_point(mu)?;
                self.check_boundary_public(mu)?;
                let curve = self.threshold_curve(method, level)?;
                let geom = self.plane_geom();
                let w = self.cfg().window;
                let g = |t: f64| normal_pdf(t - mu_u) * std_normal_upper(curve.eval(t) - mu_v);
                let (lo, hi) = (mu_u - w, mu_u + w);
                let num = if geom.kinked() && lo < 0.0 && hi > 0.0 {
                    self.gl_integral(lo, 0.0, g) + self.gl_integral(0.0, hi, g)
                } else {
                    self.gl_integral(lo, hi, g)
                };
                let den = 1.0 - self.alpha_plane(mu_u, mu_v, 1.0);
                Ok(num / den)
            }
            &RegionSpec::SphereShell {
                theta,
                dim,
                orientation,
            } => {
                self.check_boundary_public(mu)?;
                self.sphere_rejection(method, level, theta, dim, orientation)
            }
        }
    }

    fn check_boundary_public(&self, mu: &[f64]) -> Result<()> {
        // selection_probability performs the boundary check; reuse it.
        self.selection_probability(mu).map(|_| ())
    }

    fn sphere_rejection(
        &self,
        method: RejectionMethod,
        level: f64,
        theta: f64,
        dim: u32,
        orientation: SphereOrientation,
    ) -> Result<f64> {
        // All quantities depend on the radius only; the rejection set is a
        // radial interval on the selection side of the shell.
        let (near, far, away_is_inward) = match orientation {
            SphereOrientation::HOutside => ((theta - 12.0).max(1e-9), theta, true),
            SphereOrientation::HInside => (theta, theta + 12.0, false),
        };
        let mut details = String::new();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=12 {
            let r = near + (far - near) * i as f64 / 12.0;
            let p = self.p_value_sphere(method, r)?;
            if let Some((pr, pp)) = prev {
                let slack = 1e-9f64.max(1e-6 * pp.abs());
                let violated = if away_is_inward {
                    // p should grow toward the boundary (outward).
                    p < pp - slack
                } else {
                    p > pp + slack
                };
                if violated {
                    let _ = writeln!(details, "p({pr:.4}) = {pp:.6e}, p({r:.4}) = {p:.6e}");
                }
            }
            prev = Some((r, p));
        }
        if !details.is_empty() {
            return Err(Error::NotMonotone {
                details: format!("{} p-value along the radius:\n{details}", method.label()),
            });
        }
        let f = |r: f64| self.p_value_sphere(method, r);
        let (p_near, p_far) = (f(near)?, f(far)?);
        let (p_boundary, p_deep) = if away_is_inward {
            (p_far, p_near)
        } else {
            (p_near, p_far)
        };
        if p_boundary < level {
            // The whole selection side rejects less often than the level.
            return Ok(0.0);
        }
        if p_deep > level {
            return Err(Error::domain(format!(
                "{} stays above {level} across the radial window",
                method.label()
            )));
        }
        let (mut lo, mut hi) = (near, far);
        // Invariant: p at the boundary side ≥ level, deep side < level.
        while hi - lo > self.cfg().bisect_tol {
            let mid = 0.5 * (lo + hi);
            let above = f(mid)? >= level;
            if above == away_is_inward {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r_star = 0.5 * (lo + hi);
        let lambda = theta * theta;
        let (num, den) = match orientation {
            SphereOrientation::HOutside => (
                noncentral_chisq_cdf(r_star * r_star, dim, lambda)?,
                noncentral_chisq_cdf(theta * theta, dim, lambda)?,
            ),
            SphereOrientation::HInside => (
                noncentral_chisq_sf(r_star * r_star, dim, lambda)?,
                noncentral_chisq_sf(theta * theta, dim, lambda)?,
            ),
        };
        Ok(num / den)
    }

    /// Mean absolute deviation, in percentage points, of the selective
    /// rejection probability from its nominal level over the boundary grid
    /// θ = 0, 0.05, …, 3.5.
    pub fn average_absolute_bias(&self, method: RejectionMethod, level: f64) -> Result<f64> {
        let geom = match self.spec() {
            RegionSpec::SphereShell { .. } => {
                return Err(Error::domain(
                    "bias averages apply to planar regions; sphere curves report per-dimension values",
                ))
            }
            _ => self.plane_geom(),
        };
        self.threshold_curve(method, level)?;
        let rejections = par::pmap_range(BIAS_STEPS + 1, |j| {
            let theta = 0.05 * j as f64;
            self.selective_rejection_probability(method, level, &[theta, geom.boundary(theta)])
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let total: f64 = rejections.iter().map(|r| (r - level).abs()).sum();
        Ok(100.0 * total / (BIAS_STEPS + 1) as f64)
    }
}

/// Bisect `p(v) = level` for a p nonincreasing in v.
fn bisect_decreasing_p(
    p: impl Fn(f64) -> Result<f64>,
    lo0: f64,
    hi0: f64,
    level: f64,
    tol: f64,
) -> Result<f64> {
    let p_lo = p(lo0)?;
    let p_hi = p(hi0)?;
    if p_lo < level || p_hi > level {
        return Err(Error::domain(format!(
            "no crossing of {level} in [{lo0}, {hi0}]: p spans [{p_hi:.3e}, {p_lo:.3e}]"
        )));
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid)? >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One method row of a rejection table: percentages per boundary point, and
/// the grid-averaged bias for method rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub percents: Vec<f64>,
    pub bias: Option<f64>,
}

/// Selective rejection probabilities (in percent) for several methods over a
/// grid of boundary points, plus the selection-probability row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RejectionTable {
    pub region: RegionSpec,
    pub alpha: f64,
    pub thetas: Vec<f64>,
    pub rows: Vec<TableRow>,
}

impl RejectionTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method");
        for t in &self.thetas {
            let _ = write!(out, "\ttheta={t:.2}");
        }
        out.push_str("\tbias\n");
        for row in &self.rows {
            out.push_str(&row.label);
            for p in &row.percents {
                let _ = write!(out, "\t{p:.2}");
            }
            match row.bias {
                Some(b) => {
                    let _ = writeln!(out, "\t{b:.2}");
                }
                None => out.push_str("\t-\n"),
            }
        }
        out
    }
}

/// Compute a full table of selective rejection percentages at `level` for
/// boundary points `thetas`, one row per method, plus the selection row.
pub fn simulate_table(
    oracle: &RegionOracle,
    methods: &[RejectionMethod],
    level: f64,
    thetas: &[f64],
) -> Result<RejectionTable> {
    let geom = match oracle.spec() {
        RegionSpec::SphereShell { .. } => {
            return Err(Error::domain("tables are defined for planar regions"))
        }
        _ => oracle.plane_geom(),
    };
    let mut rows = Vec::new();
    for &method in methods {
        // Build (and cache) the curve up front so the per-θ loop is cheap.
        oracle.threshold_curve(method, level)?;
        let percents = thetas
            .iter()
            .map(|&t| {
                let mu = [t, geom.boundary(t)];
                Ok(100.0 * oracle.selective_rejection_probability(method, level, &mu)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(TableRow {
            label: method.label(),
            percents,
            bias: Some(oracle.average_absolute_bias(method, level)?),
        });
    }
    let selection = thetas
        .iter()
        .map(|&t| Ok(100.0 * oracle.selection_probability(&[t, geom.boundary(t)])?))
        .collect::<Result<Vec<f64>>>()?;
    rows.push(TableRow {
        label: "P(S)".into(),
        percents: selection,
        bias: None,
    });
    Ok(RejectionTable {
        region: *oracle.spec(),
        alpha: level,
        thetas: thetas.to_vec(),
        rows,
    })
}

/// Selective rejection percentages across sphere dimensions for boundary
/// curvature −γ fixed via θ = m/(2·γ_abs).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereCurve {
    pub gamma_abs: f64,
    pub alpha: f64,
    pub dims: Vec<u32>,
    pub rows: Vec<TableRow>,
}

impl SphereCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method");
        for d in &self.dims {
            let _ = write!(out, "\tdim={d}");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.label);
            for p in &row.percents {
                let _ = write!(out, "\t{p:.2}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn sphere_curve(
    gamma_abs: f64,
    dims: &[u32],
    methods: &[RejectionMethod],
    level: f64,
    cfg: &OracleConfig,
) -> Result<SphereCurve> {
    if !(gamma_abs > 0.0) {
        return Err(Error::domain(format!(
            "curvature magnitude must be > 0, got {gamma_abs}"
        )));
    }
    if dims.iter().any(|&d| !(10..=1000).contains(&d)) {
        return Err(Error::domain("sphere dimensions must lie in [10, 1000]"));
    }
    let mut rows: Vec<TableRow> = methods
        .iter()
        .map(|m| TableRow {
            label: m.label(),
            percents: Vec::new(),
            bias: None,
        })
        .collect();
    for &dim in dims {
        let m = (dim - 1) as f64;
        let theta = m / (2.0 * gamma_abs);
        let oracle = RegionOracle::new(
            RegionSpec::SphereShell {
                theta,
                dim,
                orientation: SphereOrientation::HOutside,
            },
            *cfg,
        )?;
        for (row, &method) in rows.iter_mut().zip(methods) {
            let r = oracle.selective_rejection_probability(method, level, &[theta])?;
            row.percents.push(100.0 * r);
        }
    }
    Ok(SphereCurve {
        gamma_abs,
        alpha: level,
        dims: dims.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{OracleConfig, RegionOracle, RegionSpec, RejectionMethod};
    use super::*;
    use crate::stats::std_normal_upper_inv;

    fn halfspace() -> RegionOracle {
        RegionOracle::new(RegionSpec::Halfspace, OracleConfig::default()).unwrap()
    }

    #[test]
    fn halfspace_thresholds_sit_at_the_exact_quantile() {
        let o = halfspace();
        let si = o
            .threshold_curve(RejectionMethod::Si { k: 3 }, 0.1)
            .unwrap();
        let want = std_normal_upper_inv(0.05).unwrap();
        for u in [-5.0, 0.0, 3.3, 10.0] {
            assert!((si.eval(u) - want).abs() < 1e-6, "u={u}: {}", si.eval(u));
        }
        let bp = o.threshold_curve(RejectionMethod::Bp, 0.1).unwrap();
        let want = std_normal_upper_inv(0.1).unwrap();
        assert!((bp.eval(1.0) - want).abs() < 1e-6);
    }

    #[test]
    fn halfspace_selective_rejection_is_nominal() {
        let o = halfspace();
        for method in [
            RejectionMethod::Si { k: 2 },
            RejectionMethod::Si { k: 3 },
            RejectionMethod::Sdbp,
            RejectionMethod::EtSi,
        ] {
            for mu_u in [0.0, 2.0] {
                let r = o
                    .selective_rejection_probability(method, 0.1, &[mu_u, 0.0])
                    .unwrap();
                assert!((r - 0.1).abs() < 1e-6, "{}: {r}", method.label());
            }
        }
        let bias = o
            .average_absolute_bias(RejectionMethod::Si { k: 3 }, 0.1)
            .unwrap();
        assert!(bias < 1e-4, "bias {bias}");
    }

    #[test]
    fn doubled_bp_on_halfspace_rejects_half_as_often() {
        let o = halfspace();
        let r2 = o
            .selective_rejection_probability(RejectionMethod::DoubledBp, 0.1, &[0.0, 0.0])
            .unwrap();
        // Rejects when Φ̄(v) < 0.05 given v > 0: probability 0.05 / 0.5.
        assert!((r2 - 0.1).abs() < 1e-6, "{r2}");
    }

    #[test]
    fn table_emits_all_rows_and_percentages() {
        let o = halfspace();
        let table = simulate_table(
            &o,
            &[RejectionMethod::Bp, RejectionMethod::Si { k: 3 }],
            0.1,
            &[0.0, 1.0],
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[2].label, "P(S)");
        assert!((table.rows[2].percents[0] - 50.0).abs() < 1e-6);
        let tsv = table.to_tsv();
        assert!(tsv.starts_with("method\ttheta=0.00\ttheta=1.00\tbias"));
        assert!(tsv.contains("SI(k=3)\t10.00\t10.00\t0.00"));
        assert!(tsv.contains("P(S)\t50.00\t50.00\t-"));
    }

    #[test]
    fn sphere_dimensions_are_validated() {
        let err = sphere_curve(
            1.0,
            &[5],
            &[RejectionMethod::Bp],
            0.1,
            &OracleConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("[10, 1000]"));
        assert!(sphere_curve(0.0, &[10], &[RejectionMethod::Bp], 0.1, &OracleConfig::default())
            .is_err());
    }

    #[test]
    fn small_sphere_rejection_is_a_probability_and_nearly_nominal_for_si() {
        let curve = sphere_curve(
            0.5,
            &[10],
            &[RejectionMethod::Si { k: 3 }, RejectionMethod::DoubledBp],
            0.1,
            &OracleConfig::default(),
        )
        .unwrap();
        let si = curve.rows[0].percents[0];
        assert!((0.0..=100.0).contains(&si));
        assert!((si - 10.0).abs() < 3.0, "SI at dim 10: {si}");
    }
}
