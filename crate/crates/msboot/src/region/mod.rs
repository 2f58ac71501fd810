//! Quadrature-exact bootstrap probabilities, selection probabilities, and
//! corrected p-values for analytic regions, with no Monte-Carlo error.

mod pipeline;
mod reject;
mod sdbp;
mod spline;

pub use pipeline::{pipeline_report, PipelineOptions, Procedure};
pub use reject::{simulate_table, sphere_curve, RejectionTable, SphereCurve, TableRow};
pub use spline::{CubicSpline, SplitSpline};

use crate::error::{Error, Result};
use crate::stats::{
    make_quadrature, noncentral_chisq_cdf, noncentral_chisq_sf, normal_pdf, std_normal_upper,
    std_normal_upper_inv, QuadKind, QuadratureRule,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// An analytic hypothesis region. The selection region is always the
/// complement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// H = {(u, v) : v ≤ 0}.
    Halfspace,
    /// H = {(u, v) : v ≤ −sign·√(a + u²/3)}; `sign = −1` makes H concave,
    /// `+1` convex; `a = 0` puts a corner on the boundary.
    CurveBoundary { sign: i8, a: f64 },
    /// H is one side of the sphere ‖μ‖ = theta in `dim` dimensions.
    SphereShell {
        theta: f64,
        dim: u32,
        orientation: SphereOrientation,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereOrientation {
    /// H = {‖μ‖ ≥ θ}: the complement of a ball, concave.
    HOutside,
    /// H = {‖μ‖ ≤ θ}: a ball, convex.
    HInside,
}

impl RegionSpec {
    pub fn concave_smooth() -> RegionSpec {
        RegionSpec::CurveBoundary { sign: -1, a: 1.0 }
    }

    pub fn concave_cone() -> RegionSpec {
        RegionSpec::CurveBoundary { sign: -1, a: 0.0 }
    }

    pub fn convex_smooth() -> RegionSpec {
        RegionSpec::CurveBoundary { sign: 1, a: 1.0 }
    }

    pub fn convex_cone() -> RegionSpec {
        RegionSpec::CurveBoundary { sign: 1, a: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RegionSpec::Halfspace => Ok(()),
            RegionSpec::CurveBoundary { sign, a } => {
                if sign != 1 && sign != -1 {
                    return Err(Error::domain(format!("boundary sign must be ±1, got {sign}")));
                }
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::domain(format!(
                        "boundary flatness parameter must be finite and >= 0, got {a}"
                    )));
                }
                Ok(())
            }
            RegionSpec::SphereShell { theta, dim, .. } => {
                if !(theta > 0.0) || !theta.is_finite() {
                    return Err(Error::domain(format!("sphere radius must be > 0, got {theta}")));
                }
                if dim < 2 {
                    return Err(Error::domain(format!("sphere needs dim >= 2, got {dim}")));
                }
                Ok(())
            }
        }
    }

    fn plane(&self) -> Option<PlaneGeom> {
        match *self {
            RegionSpec::Halfspace => Some(PlaneGeom {
                s: 0.0,
                a: 0.0,
                flat: true,
            }),
            RegionSpec::CurveBoundary { sign, a } => Some(PlaneGeom {
                s: sign as f64,
                a,
                flat: false,
            }),
            RegionSpec::SphereShell { .. } => None,
        }
    }

    /// Membership test in the plane/sphere coordinates used throughout.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        match *self {
            RegionSpec::Halfspace | RegionSpec::CurveBoundary { .. } => {
                let geom = self.plane().unwrap();
                let [u, v] = plane_point(point)?;
                Ok(v <= geom.boundary(u))
            }
            RegionSpec::SphereShell {
                theta,
                dim,
                orientation,
            } => {
                let r = sphere_radius(point, dim)?;
                Ok(match orientation {
                    SphereOrientation::HOutside => r >= theta,
                    SphereOrientation::HInside => r <= theta,
                })
            }
        }
    }
}

/// Planar boundary v = b(u); `flat` marks the halfspace.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PlaneGeom {
    s: f64,
    a: f64,
    flat: bool,
}

impl PlaneGeom {
    pub(crate) fn boundary(&self, u: f64) -> f64 {
        if self.flat {
            0.0
        } else {
            -self.s * (self.a + u * u / 3.0).sqrt()
        }
    }

    /// True when the boundary has a corner at u = 0.
    pub(crate) fn kinked(&self) -> bool {
        !self.flat && self.a == 0.0
    }
}

fn plane_point(point: &[f64]) -> Result<[f64; 2]> {
    match point {
        [u, v] => Ok([*u, *v]),
        _ => Err(Error::domain(format!(
            "planar regions take 2-coordinate points, got {} coordinates",
            point.len()
        ))),
    }
}

/// A sphere point is either full coordinates or a bare radius.
fn sphere_radius(point: &[f64], dim: u32) -> Result<f64> {
    match point {
        [r] => Ok(r.abs()),
        coords if coords.len() == dim as usize => {
            Ok(coords.iter().map(|c| c * c).sum::<f64>().sqrt())
        }
        _ => Err(Error::domain(format!(
            "sphere points take 1 (radius) or {dim} coordinates, got {}",
            point.len()
        ))),
    }
}

/// Numerical settings for the exact computations.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Gauss–Hermite order for expectations under a normal.
    pub gh_order: usize,
    /// Gauss–Legendre order for finite-interval integrals.
    pub gl_order: usize,
    /// Bisection tolerance in the threshold coordinate.
    pub bisect_tol: f64,
    /// Half-width of all outer integration windows, in standard deviations.
    pub window: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            gh_order: 64,
            gl_order: 128,
            bisect_tol: 1e-10,
            window: 8.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gh_order < 16 || self.gl_order < 16 {
            return Err(Error::domain("quadrature orders must be >= 16"));
        }
        if !(self.bisect_tol > 0.0) || !(self.window > 0.0) {
            return Err(Error::domain("tolerances and window must be > 0"));
        }
        Ok(())
    }
}

/// P-value definitions whose selective rejection behavior the oracle can
/// integrate exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum RejectionMethod {
    /// Raw bootstrap probability at unit scale.
    Bp,
    /// Φ̄ of the k-term extrapolation to σ² = −1.
    Au { k: usize },
    /// BP doubled, the naive selective correction.
    DoubledBp,
    /// AU doubled.
    DoubledAu { k: usize },
    /// Selective inference ratio with k-term geometry.
    Si { k: usize },
    /// Selective double bootstrap.
    Sdbp,
    /// Expected-truncation selective inference (projection form).
    EtSi,
}

impl RejectionMethod {
    pub fn label(&self) -> String {
        match self {
            RejectionMethod::Bp => "BP".into(),
            RejectionMethod::Au { k } => format!("AU(k={k})"),
            RejectionMethod::DoubledBp => "2BP".into(),
            RejectionMethod::DoubledAu { k } => format!("2AU(k={k})"),
            RejectionMethod::Si { k } => format!("SI(k={k})"),
            RejectionMethod::Sdbp => "SDBP".into(),
            RejectionMethod::EtSi => "ET-SI".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RejectionMethod::Au { k } | RejectionMethod::DoubledAu { k } | RejectionMethod::Si { k } => {
                if !(1..=3).contains(k) {
                    return Err(Error::domain(format!(
                        "extrapolation depth k must be 1, 2, or 3, got {k}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for RejectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<RejectionMethod> {
        let norm = s.trim().to_ascii_lowercase().replace(['(', ')', '=', '-', '_'], "");
        let method = match norm.as_str() {
            "bp" => RejectionMethod::Bp,
            "2bp" => RejectionMethod::DoubledBp,
            "sdbp" => RejectionMethod::Sdbp,
            "etsi" => RejectionMethod::EtSi,
            _ => {
                let (name, k) = norm.split_at(norm.len().saturating_sub(1));
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::domain(format!("unknown p-value method `{s}`")))?;
                match name {
                    "au" | "auk" => RejectionMethod::Au { k },
                    "2au" | "2auk" => RejectionMethod::DoubledAu { k },
                    "si" | "sik" => RejectionMethod::Si { k },
                    _ => return Err(Error::domain(format!("unknown p-value method `{s}`"))),
                }
            }
        };
        method.validate()?;
        Ok(method)
    }
}

/// ψ at unit scale together with its first two derivatives in σ².
#[derive(Clone, Copy, Debug)]
pub(crate) struct LocalPsi {
    pub psi1: f64,
    pub d1: f64,
    pub d2: f64,
}

impl LocalPsi {
    /// Five-point central differences with step 0.1 in σ².
    pub(crate) fn from_fn(mut psi: impl FnMut(f64) -> f64) -> LocalPsi {
        let h = 0.1;
        let f0 = psi(1.0);
        if !f0.is_finite() {
            return LocalPsi {
                psi1: f0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        let (fp1, fp2, fm1, fm2) = (psi(1.0 + h), psi(1.0 + 2.0 * h), psi(1.0 - h), psi(1.0 - 2.0 * h));
        if ![fp1, fp2, fm1, fm2].iter().all(|v| v.is_finite()) {
            return LocalPsi {
                psi1: f0,
                d1: 0.0,
                d2: 0.0,
            };
        }
        LocalPsi {
            psi1: f0,
            d1: (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h),
            d2: (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h),
        }
    }

    /// k-term Taylor value at σ² = −1.
    pub(crate) fn z_h(&self, k: usize) -> f64 {
        match k {
            1 => self.psi1,
            2 => self.psi1 - 2.0 * self.d1,
            _ => self.psi1 - 2.0 * self.d1 + 2.0 * self.d2,
        }
    }

    /// k-term Taylor value at σ² = 0.
    pub(crate) fn t_hat(&self, k: usize) -> f64 {
        match k {
            1 => self.psi1,
            2 => self.psi1 - self.d1,
            _ => self.psi1 - self.d1 + 0.5 * self.d2,
        }
    }
}

type CurveKey = (RejectionMethod, u64);

/// Exact-probability engine for one region.
pub struct RegionOracle {
    spec: RegionSpec,
    cfg: OracleConfig,
    gh: QuadratureRule,
    gl: QuadratureRule,
    gl_sdbp: QuadratureRule,
    curves: Mutex<HashMap<CurveKey, Arc<SplitSpline>>>,
    rho: Mutex<Option<Arc<SplitSpline>>>,
}

impl RegionOracle {
    pub fn new(spec: RegionSpec, cfg: OracleConfig) -> Result<RegionOracle> {
        spec.validate()?;
        cfg.validate()?;
        Ok(RegionOracle {
            spec,
            cfg,
            gh: make_quadrature(QuadKind::GaussHermiteProbabilist, cfg.gh_order)?,
            gl: make_quadrature(QuadKind::GaussLegendre, cfg.gl_order)?,
            // The double bootstrap evaluates a threshold search per node, so
            // its outer integral uses a leaner rule.
            gl_sdbp: make_quadrature(QuadKind::GaussLegendre, 48)?,
            curves: Mutex::new(HashMap::new()),
            rho: Mutex::new(None),
        })
    }

    pub fn spec(&self) -> &RegionSpec {
        &self.spec
    }

    pub fn cfg(&self) -> &OracleConfig {
        &self.cfg
    }

    /// ∫_a^b f, by the cached Gauss–Legendre rule mapped inline.
    pub(crate) fn gl_integral(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut total = 0.0;
        for (&x, &w) in self.gl.nodes.iter().zip(&self.gl.weights) {
            total += w * f(mid + half * x);
        }
        half * total
    }

    /// Exact probability that a normal replicate at `sigma2` lands in H.
    pub fn bootstrap_prob(&self, y: &[f64], sigma2: f64) -> Result<f64> {
        if !(sigma2 > 0.0) {
            return Err(Error::domain(format!("scale must be > 0, got {sigma2}")));
        }
        match self.spec {
            RegionSpec::Halfspace | RegionSpec::CurveBoundary { .. } => {
                let [u, v] = plane_point(y)?;
                Ok(self.alpha_plane(u, v, sigma2))
            }
            RegionSpec::SphereShell {
                theta,
                dim,
                orientation,
            } => {
                let r = sphere_radius(y, dim)?;
                Ok(alpha_sphere(theta, dim, orientation, r, sigma2))
            }
        }
    }

    pub(crate) fn alpha_plane(&self, u: f64, v: f64, sigma2: f64) -> f64 {
        let geom = self.spec.plane().expect("planar region");
        let sigma = sigma2.sqrt();
        let value = if !geom.kinked() {
            // Smooth boundary: Gauss–Hermite over U* ~ N(u, σ²).
            self.gh
                .integrate(|x| std_normal_upper((v - geom.boundary(u + sigma * x)) / sigma))
        } else {
            // Corner at u = 0: integrate each smooth piece separately.
            let lo = u - self.cfg.window * sigma;
            let hi = u + self.cfg.window * sigma;
            let g = |t: f64| {
                normal_pdf((t - u) / sigma) / sigma * std_normal_upper((v - geom.boundary(t)) / sigma)
            };
            if lo < 0.0 && hi > 0.0 {
                self.gl_integral(lo, 0.0, g) + self.gl_integral(0.0, hi, g)
            } else {
                self.gl_integral(lo, hi, g)
            }
        };
        value.clamp(0.0, 1.0)
    }

    /// Normalized z-value σ·Φ̄⁻¹(α_σ²); ±∞ when α saturates.
    pub fn psi(&self, y: &[f64], sigma2: f64) -> Result<f64> {
        let alpha = self.bootstrap_prob(y, sigma2)?;
        Ok(psi_of_alpha(alpha, sigma2))
    }

    /// P(Y ∈ S | μ) at unit scale for a boundary point μ.
    pub fn selection_probability(&self, mu: &[f64]) -> Result<f64> {
        self.check_on_boundary(mu)?;
        Ok(1.0 - self.bootstrap_prob(mu, 1.0)?)
    }

    fn check_on_boundary(&self, mu: &[f64]) -> Result<()> {
        let distance = match self.spec {
            RegionSpec::Halfspace | RegionSpec::CurveBoundary { .. } => {
                let geom = self.spec.plane().unwrap();
                let [u, v] = plane_point(mu)?;
                (v - geom.boundary(u)).abs()
            }
            RegionSpec::SphereShell { theta, dim, .. } => {
                (sphere_radius(mu, dim)? - theta).abs() / theta.max(1.0)
            }
        };
        if distance > 1e-9 {
            return Err(Error::NotOnBoundary { distance });
        }
        Ok(())
    }

    /// The boundary point with horizontal coordinate `u` (planar regions).
    pub fn boundary_point(&self, u: f64) -> Result<Vec<f64>> {
        let geom = self
            .spec
            .plane()
            .ok_or_else(|| Error::domain("boundary_point applies to planar regions"))?;
        Ok(vec![u, geom.boundary(u)])
    }

    /// Horizontal coordinate of the closest boundary point (planar regions).
    pub fn project_u(&self, y: &[f64]) -> Result<f64> {
        if self.spec.plane().is_none() {
            return Err(Error::domain("planar projection needs a planar region"));
        }
        let [u0, v0] = plane_point(y)?;
        Ok(self.project_u_plane(u0, v0))
    }

    pub(crate) fn project_u_plane(&self, u0: f64, v0: f64) -> f64 {
        let geom = self.plane_geom();
        if geom.flat {
            return u0;
        }
        let d2 = |u: f64| {
            let du = u - u0;
            let dv = geom.boundary(u) - v0;
            du * du + dv * dv
        };
        let lo = u0.min(0.0) - 9.0;
        let hi = u0.max(0.0) + 9.0;
        let steps = ((hi - lo) / 0.25).ceil() as usize;
        let mut best = lo;
        let mut best_val = d2(lo);
        for i in 1..=steps {
            let u = lo + (hi - lo) * i as f64 / steps as f64;
            let val = d2(u);
            if val < best_val {
                best = u;
                best_val = val;
            }
        }
        let refined = golden_min(d2, best - 0.3, best + 0.3, 1e-9);
        let mut out = refined;
        let mut out_val = d2(refined);
        if geom.kinked() && d2(0.0) <= out_val {
            out = 0.0;
            out_val = d2(0.0);
        }
        if best_val < out_val {
            out = best;
        }
        out
    }

    pub(crate) fn local_psi_plane(&self, u: f64, v: f64) -> LocalPsi {
        LocalPsi::from_fn(|s2| psi_of_alpha(self.alpha_plane(u, v, s2), s2))
    }

    pub(crate) fn local_psi_sphere(&self, r: f64) -> LocalPsi {
        let (theta, dim, orientation) = match self.spec {
            RegionSpec::SphereShell {
                theta,
                dim,
                orientation,
            } => (theta, dim, orientation),
            _ => unreachable!("sphere geometry"),
        };
        LocalPsi::from_fn(|s2| psi_of_alpha(alpha_sphere(theta, dim, orientation, r, s2), s2))
    }

    /// The p-value a given method assigns to the observation.
    pub fn p_value(&self, method: RejectionMethod, y: &[f64]) -> Result<f64> {
        method.validate()?;
        match self.spec {
            RegionSpec::Halfspace | RegionSpec::CurveBoundary { .. } => {
                let [u, v] = plane_point(y)?;
                self.p_value_plane(method, u, v)
            }
            RegionSpec::SphereShell { dim, .. } => {
                let r = sphere_radius(y, dim)?;
                self.p_value_sphere(method, r)
            }
        }
    }

    pub(crate) fn p_value_plane(&self, method: RejectionMethod, u: f64, v: f64) -> Result<f64> {
        match method {
            RejectionMethod::Bp => Ok(self.alpha_plane(u, v, 1.0)),
            RejectionMethod::DoubledBp => Ok((2.0 * self.alpha_plane(u, v, 1.0)).min(1.0)),
            RejectionMethod::Au { k } => Ok(tail_p(self.local_psi_plane(u, v).z_h(k))),
            RejectionMethod::DoubledAu { k } => {
                Ok((2.0 * tail_p(self.local_psi_plane(u, v).z_h(k))).min(1.0))
            }
            RejectionMethod::Si { k } => {
                let lp = self.local_psi_plane(u, v);
                if !lp.psi1.is_finite() {
                    return Ok(if lp.psi1 > 0.0 { 0.0 } else { 1.0 });
                }
                let z = lp.z_h(k);
                Ok(crate::pvalues::clamped_selective_ratio(z, z - lp.t_hat(k)).0)
            }
            RejectionMethod::Sdbp => self.sdbp_p(u, v),
            RejectionMethod::EtSi => self.et_si_p(u, v),
        }
    }

    pub(crate) fn p_value_sphere(&self, method: RejectionMethod, r: f64) -> Result<f64> {
        match method {
            RejectionMethod::Bp | RejectionMethod::DoubledBp => {
                let (theta, dim, orientation) = match self.spec {
                    RegionSpec::SphereShell {
                        theta,
                        dim,
                        orientation,
                    } => (theta, dim, orientation),
                    _ => unreachable!(),
                };
                let a = alpha_sphere(theta, dim, orientation, r, 1.0);
                Ok(match method {
                    RejectionMethod::Bp => a,
                    _ => (2.0 * a).min(1.0),
                })
            }
            RejectionMethod::Au { k } => Ok(tail_p(self.local_psi_sphere(r).z_h(k))),
            RejectionMethod::DoubledAu { k } => {
                Ok((2.0 * tail_p(self.local_psi_sphere(r).z_h(k))).min(1.0))
            }
            RejectionMethod::Si { k } => {
                let lp = self.local_psi_sphere(r);
                if !lp.psi1.is_finite() {
                    return Ok(if lp.psi1 > 0.0 { 0.0 } else { 1.0 });
                }
                let z = lp.z_h(k);
                Ok(crate::pvalues::clamped_selective_ratio(z, z - lp.t_hat(k)).0)
            }
            RejectionMethod::Sdbp | RejectionMethod::EtSi => Err(Error::domain(format!(
                "{} requires a planar region",
                method.label()
            ))),
        }
    }

    /// Projection-form selective p-value.
    fn et_si_p(&self, u: f64, v: f64) -> Result<f64> {
        let geom = self.spec.plane().expect("planar region");
        let w0 = self.project_u(&[u, v])?;
        let psi1 = psi_of_alpha(self.alpha_plane(u, v, 1.0), 1.0);
        if !psi1.is_finite() {
            return Ok(if psi1 > 0.0 { 0.0 } else { 1.0 });
        }
        let z_proj = psi_of_alpha(self.alpha_plane(w0, geom.boundary(w0), 1.0), 1.0);
        Ok(crate::pvalues::clamped_selective_ratio(psi1 - 2.0 * z_proj, -z_proj).0)
    }

    pub(crate) fn curve_cache(&self) -> &Mutex<HashMap<CurveKey, Arc<SplitSpline>>> {
        &self.curves
    }

    pub(crate) fn rho_cache(&self) -> &Mutex<Option<Arc<SplitSpline>>> {
        &self.rho
    }

    pub(crate) fn sdbp_rule(&self) -> &QuadratureRule {
        &self.gl_sdbp
    }

    pub(crate) fn plane_geom(&self) -> PlaneGeom {
        self.spec.plane().expect("planar region")
    }
}

pub(crate) fn psi_of_alpha(alpha: f64, sigma2: f64) -> f64 {
    if alpha <= 0.0 {
        f64::INFINITY
    } else if alpha >= 1.0 {
        f64::NEG_INFINITY
    } else {
        sigma2.sqrt() * std_normal_upper_inv(alpha).expect("alpha strictly inside (0,1)")
    }
}

fn tail_p(z: f64) -> f64 {
    if z.is_nan() {
        f64::NAN
    } else {
        std_normal_upper(z)
    }
}

pub(crate) fn alpha_sphere(
    theta: f64,
    dim: u32,
    orientation: SphereOrientation,
    r: f64,
    sigma2: f64,
) -> f64 {
    let x = theta * theta / sigma2;
    let lambda = r * r / sigma2;
    let result = match orientation {
        SphereOrientation::HOutside => noncentral_chisq_sf(x, dim, lambda),
        SphereOrientation::HInside => noncentral_chisq_cdf(x, dim, lambda),
    };
    result.expect("sphere parameters validated at construction")
}

/// Derivative-free minimizer on a bracket (the boundary's center-of-curvature
/// points make derivative-based projection blow up).
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(spec: RegionSpec) -> RegionOracle {
        RegionOracle::new(spec, OracleConfig::default()).unwrap()
    }

    #[test]
    fn halfspace_probability_is_closed_form() {
        let o = oracle(RegionSpec::Halfspace);
        for (v, s2) in [(0.0, 1.0), (1.0, 1.0), (2.0, 4.0), (-1.5, 0.25)] {
            let got = o.bootstrap_prob(&[0.3, v], s2).unwrap();
            let want = std_normal_upper(v / s2.sqrt());
            assert!((got - want).abs() < 1e-12, "v={v} s2={s2}: {got} vs {want}");
        }
    }

    #[test]
    fn cone_vertex_probabilities_split_by_opening_angle() {
        let concave = oracle(RegionSpec::concave_cone());
        let s_prob = 1.0 - concave.bootstrap_prob(&[0.0, 0.0], 1.0).unwrap();
        assert!((s_prob - 1.0 / 3.0).abs() < 1e-9, "concave: {s_prob}");
        let convex = oracle(RegionSpec::convex_cone());
        let s_prob = 1.0 - convex.bootstrap_prob(&[0.0, 0.0], 1.0).unwrap();
        assert!((s_prob - 2.0 / 3.0).abs() < 1e-9, "convex: {s_prob}");
        assert!((concave.selection_probability(&[0.0, 0.0]).unwrap() - 1.0 / 3.0).abs() < 1e-9);
        assert!((convex.selection_probability(&[0.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn sphere_at_center_reduces_to_central_chi_square() {
        let dim = 10;
        let theta = 3.0;
        let o = oracle(RegionSpec::SphereShell {
            theta,
            dim,
            orientation: SphereOrientation::HOutside,
        });
        let got = o.bootstrap_prob(&[0.0], 1.0).unwrap();
        let want = noncentral_chisq_sf(theta * theta, dim, 0.0).unwrap();
        assert!((got - want).abs() < 1e-12);
        let coords = vec![0.0; dim as usize];
        assert_eq!(o.bootstrap_prob(&coords, 1.0).unwrap(), got);
    }

    #[test]
    fn off_boundary_points_are_rejected_for_selection() {
        let o = oracle(RegionSpec::concave_smooth());
        let err = o.selection_probability(&[0.0, 0.0]).unwrap_err();
        match err {
            Error::NotOnBoundary { distance } => assert!((distance - 1.0).abs() < 1e-12),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(o.selection_probability(&[0.5, (1.0f64 + 0.25 / 3.0).sqrt()]).is_ok());
    }

    #[test]
    fn refinement_leaves_probabilities_unchanged() {
        let fine = OracleConfig {
            gh_order: 128,
            gl_order: 256,
            ..OracleConfig::default()
        };
        for spec in [
            RegionSpec::concave_smooth(),
            RegionSpec::concave_cone(),
            RegionSpec::convex_smooth(),
            RegionSpec::convex_cone(),
        ] {
            let base = oracle(spec);
            let refined = RegionOracle::new(spec, fine).unwrap();
            for (u, v, s2) in [(0.4, 1.5, 1.0), (-1.2, 0.3, 0.5), (2.0, -0.5, 3.0)] {
                let a = base.bootstrap_prob(&[u, v], s2).unwrap();
                let b = refined.bootstrap_prob(&[u, v], s2).unwrap();
                assert!((a - b).abs() < 1e-9, "{spec:?} at ({u},{v},{s2}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn projection_lands_on_the_closest_boundary_point() {
        let o = oracle(RegionSpec::concave_smooth());
        // Point straight above the apex of v = √(1+u²/3): closest point is u=0.
        let u = o.project_u(&[0.0, 2.5]).unwrap();
        assert!(u.abs() < 1e-6, "{u}");
        // Far along the asymptote the projection tracks the point's u.
        let geom = o.plane_geom();
        let u = o.project_u(&[6.0, geom.boundary(6.0) + 0.5]).unwrap();
        assert!((u - 6.0).abs() < 0.5);
        // A point on the boundary projects to itself.
        let u = o.project_u(&[1.3, geom.boundary(1.3)]).unwrap();
        assert!((u - 1.3).abs() < 1e-5, "{u}");
    }

    #[test]
    fn projection_handles_center_of_curvature_points() {
        // For v = √(1+u²/3) the center of curvature above the apex is (0, 4):
        // equidistant minima on both sides, where a Newton projection divides
        // by zero. The scan+golden search must still return a valid minimum.
        let o = oracle(RegionSpec::concave_smooth());
        let u = o.project_u(&[0.0, 4.0]).unwrap();
        assert!(u.is_finite());
        let geom = o.plane_geom();
        let d = |uu: f64| {
            let dv = geom.boundary(uu) - 4.0;
            (uu * uu + dv * dv).sqrt()
        };
        let grid_best = (-40..=40)
            .map(|i| d(i as f64 * 0.1))
            .fold(f64::INFINITY, f64::min);
        assert!(d(u) <= grid_best + 1e-6);
    }

    #[test]
    fn vertex_projection_matches_corner_geometry() {
        // Above the ∧ boundary the corner is the nearest boundary point for
        // every direction within the normal cone.
        let o = oracle(RegionSpec::convex_cone());
        assert_eq!(o.project_u(&[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(o.project_u(&[0.2, 1.5]).unwrap(), 0.0);
        // For the ∨ boundary the corner attracts points straight below it,
        // while a point above it is closer to the arms (at u = ±√3/4 here).
        let o = oracle(RegionSpec::concave_cone());
        assert_eq!(o.project_u(&[0.0, -1.0]).unwrap(), 0.0);
        let u = o.project_u(&[0.0, 1.0]).unwrap();
        assert!((u.abs() - 3f64.sqrt() / 4.0).abs() < 1e-6, "{u}");
    }

    #[test]
    fn psi_matches_signed_distance_for_halfspace() {
        let o = oracle(RegionSpec::Halfspace);
        for v in [-1.0, 0.0, 0.7, 2.5] {
            for s2 in [0.5, 1.0, 2.0] {
                assert!((o.psi(&[0.0, v], s2).unwrap() - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn local_taylor_recovers_halfspace_flatness() {
        let o = oracle(RegionSpec::Halfspace);
        let lp = o.local_psi_plane(0.0, 1.3);
        assert!((lp.psi1 - 1.3).abs() < 1e-9);
        assert!(lp.d1.abs() < 1e-8);
        assert!(lp.d2.abs() < 1e-6);
        for k in 1..=3 {
            assert!((lp.z_h(k) - 1.3).abs() < 1e-6);
            assert!((lp.t_hat(k) - 1.3).abs() < 1e-6);
        }
    }

    #[test]
    fn method_parsing_round_trips() {
        let cases = [
            ("bp", RejectionMethod::Bp),
            ("2BP", RejectionMethod::DoubledBp),
            ("AU3", RejectionMethod::Au { k: 3 }),
            ("au(k=2)", RejectionMethod::Au { k: 2 }),
            ("2au3", RejectionMethod::DoubledAu { k: 3 }),
            ("SI2", RejectionMethod::Si { k: 2 }),
            ("si(k=3)", RejectionMethod::Si { k: 3 }),
            ("sdbp", RejectionMethod::Sdbp),
            ("ET-SI", RejectionMethod::EtSi),
        ];
        for (text, want) in cases {
            assert_eq!(text.parse::<RejectionMethod>().unwrap(), want, "{text}");
        }
        assert!("si9".parse::<RejectionMethod>().is_err());
        assert!("nope".parse::<RejectionMethod>().is_err());
    }

    #[test]
    fn halfspace_p_values_reduce_to_closed_forms() {
        let o = oracle(RegionSpec::Halfspace);
        for t in [0.0, 0.5, 1.0, 2.0] {
            let y = [0.0, t];
            let phi_bar = std_normal_upper(t);
            let cases: Vec<(RejectionMethod, f64)> = vec![
                (RejectionMethod::Bp, phi_bar),
                (RejectionMethod::Au { k: 3 }, phi_bar),
                (RejectionMethod::DoubledBp, (2.0 * phi_bar).min(1.0)),
                (RejectionMethod::DoubledAu { k: 3 }, (2.0 * phi_bar).min(1.0)),
                (RejectionMethod::Si { k: 2 }, (2.0 * phi_bar).min(1.0)),
                (RejectionMethod::Si { k: 3 }, (2.0 * phi_bar).min(1.0)),
                (RejectionMethod::EtSi, (2.0 * phi_bar).min(1.0)),
            ];
            for (method, want) in cases {
                let got = o.p_value(method, &y).unwrap();
                assert!(
                    (got - want).abs() < 1e-6,
                    "{} at t={t}: {got} vs {want}",
                    method.label()
                );
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(RegionOracle::new(
            RegionSpec::CurveBoundary { sign: 0, a: 1.0 },
            OracleConfig::default()
        )
        .is_err());
        assert!(RegionOracle::new(
            RegionSpec::CurveBoundary { sign: 1, a: -0.5 },
            OracleConfig::default()
        )
        .is_err());
        assert!(RegionOracle::new(
            RegionSpec::SphereShell {
                theta: 0.0,
                dim: 10,
                orientation: SphereOrientation::HOutside
            },
            OracleConfig::default()
        )
        .is_err());
        let bad_cfg = OracleConfig {
            gh_order: 8,
            ..OracleConfig::default()
        };
        assert!(RegionOracle::new(RegionSpec::Halfspace, bad_cfg).is_err());
    }

    #[test]
    fn membership_tests_match_geometry() {
        let spec = RegionSpec::concave_smooth();
        assert!(spec.contains(&[0.0, 0.0]).unwrap());
        assert!(spec.contains(&[0.0, 1.0]).unwrap());
        assert!(!spec.contains(&[0.0, 1.1]).unwrap());
        let sphere = RegionSpec::SphereShell {
            theta: 2.0,
            dim: 3,
            orientation: SphereOrientation::HInside,
        };
        assert!(sphere.contains(&[1.0, 1.0, 1.0]).unwrap());
        assert!(!sphere.contains(&[2.0, 2.0, 2.0]).unwrap());
        assert!(sphere.contains(&[1.9]).unwrap());
        assert!(sphere.contains(&[1.0, 1.0]).is_err());
    }
}
