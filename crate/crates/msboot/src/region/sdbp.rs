//! Selective double bootstrap: the bootstrap probability adjusted by the
//! selection probability at the projected boundary point, then iterated once
//! by integrating over the level curve of the first-level p.

use super::{RegionOracle, SplitSpline};
use crate::error::{Error, Result};
use crate::stats::{normal_pdf, std_normal_upper};
use std::sync::Arc;

/// Selection-probability cache along the boundary: wide enough to cover every
/// projection reachable from the integration windows.
const RHO_LO: f64 = -22.0;
const RHO_HI: f64 = 26.0;
const RHO_STEP: f64 = 0.1;

impl RegionOracle {
    pub(crate) fn rho_spline(&self) -> Result<Arc<SplitSpline>> {
        if let Some(s) = self.rho_cache().lock().unwrap().as_ref() {
            return Ok(s.clone());
        }
        let built = Arc::new(self.build_rho()?);
        let mut guard = self.rho_cache().lock().unwrap();
        if guard.is_none() {
            *guard = Some(built);
        }
        Ok(guard.as_ref().unwrap().clone())
    }

    fn build_rho(&self) -> Result<SplitSpline> {
        let geom = self.plane_geom();
        let n = ((RHO_HI - RHO_LO) / RHO_STEP).round() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| RHO_LO + RHO_STEP * i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&w| 1.0 - self.alpha_plane(w, geom.boundary(w), 1.0))
            .collect();
        SplitSpline::fit(&xs, &ys, if geom.kinked() { Some(0.0) } else { None })
    }

    fn pbp1_with(&self, rho: &SplitSpline, u: f64, v: f64) -> f64 {
        let w0 = self.project_u_plane(u, v);
        self.alpha_plane(u, v, 1.0) / rho.eval(w0)
    }

    /// First-level selection-adjusted bootstrap probability.
    pub fn sdbp_level1(&self, y: &[f64]) -> Result<f64> {
        let [u, v] = super::plane_point(y)?;
        let rho = self.rho_spline()?;
        Ok(self.pbp1_with(&rho, u, v))
    }

    /// Second-level (iterated) p: probability under the null at the projected
    /// boundary point that a replicate's first-level p falls below the
    /// observed one, again divided by the selection probability.
    pub(crate) fn sdbp_p(&self, u: f64, v: f64) -> Result<f64> {
        let geom = self.plane_geom();
        let rho = self.rho_spline()?;
        let w0 = self.project_u_plane(u, v);
        let rho0 = rho.eval(w0);
        let c = self.alpha_plane(u, v, 1.0) / rho0;
        if c >= 1.0 {
            return Ok(1.0);
        }
        let b0 = geom.boundary(w0);
        let zlo = w0 - self.cfg().window;
        let zhi = w0 + self.cfg().window;
        let mut nodes = Vec::new();
        if geom.kinked() && zlo < 0.0 && zhi > 0.0 {
            self.push_sdbp_nodes(&mut nodes, zlo, 0.0);
            self.push_sdbp_nodes(&mut nodes, 0.0, zhi);
        } else {
            self.push_sdbp_nodes(&mut nodes, zlo, zhi);
        }
        let mut total = 0.0;
        for (z, w) in nodes {
            let r1 = self.level1_threshold(&rho, z, c)?;
            total += w * normal_pdf(z - w0) * std_normal_upper(r1 - b0);
        }
        Ok((total / rho0).min(1.0))
    }

    fn push_sdbp_nodes(&self, out: &mut Vec<(f64, f64)>, a: f64, b: f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let rule = self.sdbp_rule();
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            out.push((mid + half * x, half * w));
        }
    }

    /// The v at which the first-level p crosses `c` on the vertical line
    /// through `z` (the p is decreasing in v).
    fn level1_threshold(&self, rho: &SplitSpline, z: f64, c: f64) -> Result<f64> {
        let geom = self.plane_geom();
        let base = geom.boundary(z);
        // The +24 reach covers levels down to the outer search's deepest
        // probes even where the boundary tilts toward its ±30° asymptote.
        let mut lo = base - 6.0;
        let mut hi = base + 24.0;
        if self.pbp1_with(rho, z, lo) < c || self.pbp1_with(rho, z, hi) > c {
            return Err(Error::domain(format!(
                "first-level p bracket failed at z = {z}, level {c}"
            )));
        }
        while hi - lo > self.cfg().bisect_tol {
            let mid = 0.5 * (lo + hi);
            if self.pbp1_with(rho, z, mid) >= c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
