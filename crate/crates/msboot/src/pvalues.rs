//! Corrected p-values from fitted scaling models: direct extrapolation
//! (procedure A), Taylor extrapolation (procedure B), and the raw bootstrap
//! proportion at unit scale.

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::models::{eval_model, taylor_extrapolate, FitResult, ModelFamily};
use crate::stats::{std_normal_upper, std_normal_upper_inv};
use serde::{Deserialize, Serialize};

/// Probabilities below this are treated as numerically indistinguishable
/// from zero when forming the selective ratio.
const TAIL_FLOOR: f64 = 1e-12;

/// Normalized z-value `σ·Φ̄⁻¹(α)` for a bootstrap probability at scale σ².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    /// Set when α was exactly 0 or 1 and the value is an infinite sentinel.
    pub saturated: bool,
}

pub fn psi(alpha: f64, sigma2: f64) -> Result<PsiValue> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("psi needs sigma2 > 0, got {sigma2}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "psi needs alpha in [0, 1], got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(PsiValue {
            value: f64::INFINITY,
            saturated: true,
        });
    }
    if alpha == 1.0 {
        return Ok(PsiValue {
            value: f64::NEG_INFINITY,
            saturated: true,
        });
    }
    Ok(PsiValue {
        value: sigma2.sqrt() * std_normal_upper_inv(alpha)?,
        saturated: false,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PValueFlags {
    /// The selective ratio exceeded 1 and was clamped.
    pub clamped_si: bool,
    /// Both tails underflowed; the selective ratio is numerically undefined
    /// and reported as 1.
    pub degenerate_fit: bool,
    /// The extrapolated signed distance is negative (the observation sits
    /// inside the hypothesis region).
    pub negative_signed_distance: bool,
}

/// Corrected p-values for one hypothesis/selection pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PValueReport {
    /// Hypothesis z-value extrapolated to σ² = −1.
    pub z_h: f64,
    /// Selection-side z-value extrapolated to σ² = 0.
    pub z_s: f64,
    /// Signed distance estimate: the hypothesis curve at σ² = 0.
    pub t_hat: f64,
    /// Curvature estimate `z_H − t̂`.
    pub gamma_hat: f64,
    /// Raw bootstrap proportion at unit scale, when counts were available.
    pub p_bp: Option<f64>,
    pub p_au: f64,
    pub p_si: f64,
    pub flags: PValueFlags,
}

/// Bootstrap proportion `C/B` at σ² = 1.
pub fn p_bp(counts: &CountTable) -> Result<f64> {
    let row = counts.unit_scale_row()?;
    Ok(row.c as f64 / row.b as f64)
}

/// Φ̄(z_num)/Φ̄(z_den) clamped to at most 1. Returns (value, clamped,
/// degenerate); degenerate means both tails fell below the floor and the
/// ratio is numerically undefined.
pub(crate) fn clamped_selective_ratio(z_num: f64, z_den: f64) -> (f64, bool, bool) {
    let num = std_normal_upper(z_num);
    let den = std_normal_upper(z_den);
    if den < TAIL_FLOOR && num < TAIL_FLOOR {
        return (1.0, false, true);
    }
    let ratio = num / den;
    if ratio > 1.0 {
        (1.0, true, false)
    } else {
        (ratio, false, false)
    }
}

fn assemble_report(z_h: f64, z_s: f64, t_hat: f64) -> PValueReport {
    let p_au = std_normal_upper(z_h);
    let (p_si, clamped_si, degenerate_fit) = clamped_selective_ratio(z_h, z_h + z_s);
    let flags = PValueFlags {
        clamped_si,
        degenerate_fit,
        negative_signed_distance: t_hat < 0.0,
    };
    PValueReport {
        z_h,
        z_s,
        t_hat,
        gamma_hat: z_h - t_hat,
        p_bp: None,
        p_au,
        p_si,
        flags,
    }
}

/// Procedure A: evaluate the fitted curves directly at σ² = −1 and σ² = 0.
///
/// Only polynomial fits can be evaluated there; singular fits must go through
/// [`p_values_b`].
pub fn p_values_a(fit_h: &FitResult, fit_s: &FitResult) -> Result<PValueReport> {
    for fit in [fit_h, fit_s] {
        if fit.spec.family == ModelFamily::Sing {
            return Err(Error::domain(format!(
                "{} cannot be evaluated at sigma2 <= 0; use the Taylor procedure (p_values_b)",
                fit.spec
            )));
        }
    }
    let z_h = eval_model(&fit_h.spec, &fit_h.beta, -1.0)?;
    let z_s = eval_model(&fit_s.spec, &fit_s.beta, 0.0)?;
    let t_hat = eval_model(&fit_h.spec, &fit_h.beta, 0.0)?;
    Ok(assemble_report(z_h, z_s, t_hat))
}

/// Procedure B: extrapolate by `k`-term Taylor polynomials taken at positive
/// anchor scales (`sigma2_minus1` for the σ² = −1 target, `sigma2_zero` for
/// the σ² = 0 target).
pub fn p_values_b(
    fit_h: &FitResult,
    fit_s: &FitResult,
    k: usize,
    sigma2_minus1: f64,
    sigma2_zero: f64,
) -> Result<PValueReport> {
    let z_h = taylor_extrapolate(&fit_h.spec, &fit_h.beta, k, sigma2_minus1, -1.0)?;
    let z_s = taylor_extrapolate(&fit_s.spec, &fit_s.beta, k, sigma2_zero, 0.0)?;
    let t_hat = taylor_extrapolate(&fit_h.spec, &fit_h.beta, k, sigma2_zero, 0.0)?;
    Ok(assemble_report(z_h, z_s, t_hat))
}

/// Procedure B with the standard defaults: three Taylor terms anchored at
/// unit scale.
pub fn p_values_default(fit_h: &FitResult, fit_s: &FitResult) -> Result<PValueReport> {
    p_values_b(fit_h, fit_s, 3, 1.0, 1.0)
}
