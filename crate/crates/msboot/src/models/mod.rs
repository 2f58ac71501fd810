//! Parametric models for the normalized bootstrap z-value as a function of
//! the variance scale, their derivatives, and Taylor extrapolation.

mod fit;
mod simplex;

pub use fit::{
    default_candidates, fit_mle, fit_wls_oracle, select_model, select_wls_oracle, OracleRow,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Model family for the scaling curve φ(σ²).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    /// φ(σ²) = Σ_{j<k} β_j σ^{2j}
    Poly,
    /// φ(σ²) = β₀ + (Σ_{1≤j≤k−2} β_j σ^{2j}) / (1 + β_{k−1}(σ − 1))
    Sing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub k: usize,
}

impl ModelSpec {
    pub fn poly(k: usize) -> Result<ModelSpec> {
        if k < 1 {
            return Err(Error::domain("poly model needs k >= 1"));
        }
        Ok(ModelSpec {
            family: ModelFamily::Poly,
            k,
        })
    }

    pub fn sing(k: usize) -> Result<ModelSpec> {
        if k < 3 {
            return Err(Error::domain("sing model needs k >= 3"));
        }
        Ok(ModelSpec {
            family: ModelFamily::Sing,
            k,
        })
    }

    /// Number of free coefficients.
    pub fn npar(&self) -> usize {
        self.k
    }

    /// Short display name, e.g. `poly.3` or `sing.3`.
    pub fn name(&self) -> String {
        match self.family {
            ModelFamily::Poly => format!("poly.{}", self.k),
            ModelFamily::Sing => format!("sing.{}", self.k),
        }
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelSpec> {
        let bad = || Error::domain(format!("unknown model `{s}`; expected poly.K or sing.K"));
        let (family, k) = s.trim().split_once('.').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        match family {
            "poly" => ModelSpec::poly(k),
            "sing" => ModelSpec::sing(k),
            _ => Err(bad()),
        }
    }
}

/// A fitted scaling model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub n_informative: usize,
    pub cov: Option<Vec<Vec<f64>>>,
}

impl FitResult {
    /// The fit of the complementary region's curve: φ_S(σ²) = −φ_H(σ²).
    ///
    /// Negating every coefficient except the singular shape parameter flips
    /// the model value at every scale, and the mirrored counts `B − C` give
    /// the same likelihood, so the remaining fields carry over.
    pub fn negated(&self) -> FitResult {
        let mut beta = self.beta.clone();
        match self.spec.family {
            ModelFamily::Poly => beta.iter_mut().for_each(|b| *b = -*b),
            ModelFamily::Sing => {
                let last = beta.len() - 1;
                beta[..last].iter_mut().for_each(|b| *b = -*b);
            }
        }
        FitResult {
            beta,
            cov: self.cov.clone(),
            ..self.clone()
        }
    }
}

/// Evaluate φ(σ²|β).
///
/// Polynomials accept any real scale (including the extrapolation targets −1
/// and 0); the singular family needs σ² > 0 because σ enters its denominator.
pub fn eval_model(spec: &ModelSpec, beta: &[f64], sigma2: f64) -> Result<f64> {
    check_beta(spec, beta)?;
    match spec.family {
        ModelFamily::Poly => Ok(horner(beta, sigma2)),
        ModelFamily::Sing => {
            if !(sigma2 > 0.0) {
                return Err(Error::domain(format!(
                    "sing model is undefined at sigma2 = {sigma2}; extrapolate through its Taylor polynomial instead"
                )));
            }
            let sigma = sigma2.sqrt();
            let den = 1.0 + beta[beta.len() - 1] * (sigma - 1.0);
            let poly_part = horner(&beta[1..beta.len() - 1], sigma2) * sigma2;
            Ok(beta[0] + poly_part / den)
        }
    }
}

/// Derivatives `d^j φ / d(σ²)^j` at `tau2` for `j = 0..order-1`.
pub fn model_derivatives(
    spec: &ModelSpec,
    beta: &[f64],
    tau2: f64,
    order: usize,
) -> Result<Vec<f64>> {
    check_beta(spec, beta)?;
    if !(tau2 > 0.0) {
        return Err(Error::domain(format!(
            "derivatives need tau2 > 0, got {tau2}"
        )));
    }
    if order == 0 {
        return Ok(Vec::new());
    }
    match spec.family {
        ModelFamily::Poly => {
            let mut out = Vec::with_capacity(order);
            for j in 0..order {
                let mut dj = 0.0;
                for (m, &b) in beta.iter().enumerate().skip(j) {
                    let mut fall = 1.0;
                    for i in 0..j {
                        fall *= (m - i) as f64;
                    }
                    dj += b * fall * tau2.powi((m - j) as i32);
                }
                out.push(dj);
            }
            Ok(out)
        }
        ModelFamily::Sing => {
            if order > 3 {
                return Err(Error::domain(
                    "sing models support at most three Taylor terms",
                ));
            }
            let x = tau2;
            let sigma = x.sqrt();
            let c = beta[beta.len() - 1];
            let d = 1.0 / (1.0 + c * (sigma - 1.0));
            // Derivatives of 1/den with respect to σ² via dσ/dσ² = 1/(2σ).
            let d1 = -c / (2.0 * sigma) * d * d;
            let d2 = c / (4.0 * x * sigma) * d * d + c * c / (2.0 * x) * d * d * d;
            let mut out = vec![beta[0], 0.0, 0.0];
            for (m, &b) in beta[1..beta.len() - 1].iter().enumerate() {
                let m = m + 1;
                let xm = x.powi(m as i32);
                let xm1 = x.powi(m as i32 - 1);
                out[0] += b * xm * d;
                out[1] += b * (m as f64 * xm1 * d + xm * d1);
                if m >= 2 {
                    out[2] += b * (m * (m - 1)) as f64 * x.powi(m as i32 - 2) * d;
                }
                out[2] += b * (2.0 * m as f64 * xm1 * d1 + xm * d2);
            }
            out.truncate(order);
            Ok(out)
        }
    }
}

/// Truncated Taylor expansion of φ around `tau2`, evaluated at
/// `sigma2_target` (which may be 0 or negative).
pub fn taylor_extrapolate(
    spec: &ModelSpec,
    beta: &[f64],
    k_terms: usize,
    tau2: f64,
    sigma2_target: f64,
) -> Result<f64> {
    if k_terms == 0 {
        return Err(Error::domain("Taylor extrapolation needs at least 1 term"));
    }
    let derivs = model_derivatives(spec, beta, tau2, k_terms)?;
    let h = sigma2_target - tau2;
    let mut total = 0.0;
    let mut hpow = 1.0;
    let mut fact = 1.0;
    for (j, dj) in derivs.iter().enumerate() {
        if j > 0 {
            hpow *= h;
            fact *= j as f64;
        }
        total += dj * hpow / fact;
    }
    Ok(total)
}

fn check_beta(spec: &ModelSpec, beta: &[f64]) -> Result<()> {
    if beta.len() != spec.npar() {
        return Err(Error::domain(format!(
            "{} expects {} coefficients, got {}",
            spec,
            spec.npar(),
            beta.len()
        )));
    }
    Ok(())
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_models_evaluate_by_horner() {
        let spec = ModelSpec::poly(2).unwrap();
        assert_eq!(eval_model(&spec, &[1.0, 0.5], 2.0).unwrap(), 2.0);
        let p1 = ModelSpec::poly(1).unwrap();
        assert_eq!(eval_model(&p1, &[0.7], 5.0).unwrap(), 0.7);
        assert_eq!(eval_model(&p1, &[0.7], -1.0).unwrap(), 0.7);
    }

    #[test]
    fn sing_at_unit_scale_drops_the_denominator() {
        let spec = ModelSpec::sing(3).unwrap();
        let v = eval_model(&spec, &[0.3, 0.8, 0.6], 1.0).unwrap();
        assert!((v - 1.1).abs() < 1e-15);
        assert!(eval_model(&spec, &[0.3, 0.8, 0.6], 0.0).is_err());
        assert!(eval_model(&spec, &[0.3, 0.8, 0.6], -1.0).is_err());
    }

    #[test]
    fn poly_derivatives_at_unit_scale() {
        let spec = ModelSpec::poly(3).unwrap();
        let (b0, b1, b2) = (0.4, -0.3, 0.2);
        let d = model_derivatives(&spec, &[b0, b1, b2], 1.0, 3).unwrap();
        assert!((d[0] - (b0 + b1 + b2)).abs() < 1e-15);
        assert!((d[1] - (b1 + 2.0 * b2)).abs() < 1e-15);
        assert!((d[2] - 2.0 * b2).abs() < 1e-15);
    }

    #[test]
    fn sing_derivatives_match_finite_differences() {
        let spec = ModelSpec::sing(3).unwrap();
        let beta = [0.25, 1.4, 0.37];
        for tau2 in [0.5, 1.0, 2.3] {
            let d = model_derivatives(&spec, &beta, tau2, 3).unwrap();
            let f = |x: f64| eval_model(&spec, &beta, x).unwrap();
            let h = 1e-5;
            let fd1 = (f(tau2 + h) - f(tau2 - h)) / (2.0 * h);
            // Wider step for the second difference: at h=1e-5 its rounding
            // error alone is ~1e-4 relative.
            let h = 1e-3;
            let fd2 = (f(tau2 + h) - 2.0 * f(tau2) + f(tau2 - h)) / (h * h);
            assert!((d[0] - f(tau2)).abs() < 1e-12);
            assert!(((d[1] - fd1) / fd1).abs() < 1e-6, "{} vs {fd1}", d[1]);
            assert!(((d[2] - fd2) / fd2).abs() < 1e-4, "{} vs {fd2}", d[2]);
        }
    }

    #[test]
    fn taylor_of_polynomials_is_exact_at_full_depth() {
        let spec = ModelSpec::poly(3).unwrap();
        let beta = [0.4, -0.3, 0.2];
        for target in [-1.0, 0.0, 2.5] {
            let t = taylor_extrapolate(&spec, &beta, 3, 1.0, target).unwrap();
            let direct = eval_model(&spec, &beta, target).unwrap();
            assert!((t - direct).abs() < 1e-14);
        }
        // Two terms of a quadratic at target −1 from τ²=1: (β₀+β₁+β₂) − 2(β₁+2β₂).
        let t2 = taylor_extrapolate(&spec, &beta, 2, 1.0, -1.0).unwrap();
        assert!((t2 - (0.4 - (-0.3) - 3.0 * 0.2)).abs() < 1e-14);
    }

    #[test]
    fn negation_flips_the_curve() {
        let spec = ModelSpec::sing(3).unwrap();
        let fit = FitResult {
            spec,
            beta: vec![0.25, 1.4, 0.37],
            loglik: -10.0,
            aic: 26.0,
            converged: true,
            n_informative: 13,
            cov: None,
        };
        let neg = fit.negated();
        for s2 in [0.3, 1.0, 4.0] {
            let a = eval_model(&spec, &fit.beta, s2).unwrap();
            let b = eval_model(&spec, &neg.beta, s2).unwrap();
            assert!((a + b).abs() < 1e-14);
        }
        assert_eq!(neg.beta[2], 0.37);
    }
}
