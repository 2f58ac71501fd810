//! Maximum-likelihood fitting of scaling models to count tables, AIC model
//! selection, and the exact-probability (infinite-replicate) least-squares
//! variant used by the region oracles.

use super::simplex::minimize;
use super::{eval_model, FitResult, ModelFamily, ModelSpec};
use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::rng::{replicate_rng, StreamDomain};
use crate::stats::{ln_std_normal_upper, normal_pdf, std_normal_upper_inv};
use rand_distr::{Distribution, StandardNormal};

const LOGLIK_TOL: f64 = 1e-8;
const MAX_EVALS: usize = 20_000;
const RESTARTS: usize = 5;
/// Fits are deterministic functions of their inputs; restart jitter uses a
/// fixed internal seed rather than the user's.
const JITTER_SEED: u64 = 0x6d73_626f_6f74;

/// The standard candidate set.
pub fn default_candidates() -> Vec<ModelSpec> {
    vec![
        ModelSpec::poly(1).unwrap(),
        ModelSpec::poly(2).unwrap(),
        ModelSpec::poly(3).unwrap(),
        ModelSpec::sing(3).unwrap(),
    ]
}

/// Map the optimizer's unconstrained vector to model coefficients: the last
/// singular coefficient goes through a logistic squash onto [0, 1].
fn to_beta(spec: &ModelSpec, theta: &[f64]) -> Vec<f64> {
    let mut beta = theta.to_vec();
    if spec.family == ModelFamily::Sing {
        let last = beta.len() - 1;
        beta[last] = 1.0 / (1.0 + (-theta[last]).exp());
    }
    beta
}

fn binomial_loglik(counts: &CountTable, spec: &ModelSpec, beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for row in &counts.rows {
        let sigma = row.sigma2.sqrt();
        let phi = match eval_model(spec, beta, row.sigma2) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let z = phi / sigma;
        // ln p and ln(1−p) through the two tails, so neither loses accuracy.
        if row.c > 0 {
            ll += row.c as f64 * ln_std_normal_upper(z);
        }
        if row.c < row.b {
            ll += (row.b - row.c) as f64 * ln_std_normal_upper(-z);
        }
    }
    ll
}

/// Weighted least-squares estimate on the normalized z-values, used to start
/// the simplex search. For the singular family only the linear part is
/// estimated; its shape parameter starts at 1/2.
fn wls_init(spec: &ModelSpec, rows: &[(f64, f64, f64)]) -> Vec<f64> {
    // rows: (sigma2, psi_hat, weight)
    let n_linear = match spec.family {
        ModelFamily::Poly => spec.k,
        ModelFamily::Sing => spec.k - 1,
    };
    let basis = |sigma2: f64, j: usize| sigma2.powi(j as i32);
    let mut ata = vec![vec![0.0; n_linear]; n_linear];
    let mut atb = vec![0.0; n_linear];
    for &(s2, psi, w) in rows {
        for i in 0..n_linear {
            atb[i] += w * basis(s2, i) * psi;
            for j in 0..n_linear {
                ata[i][j] += w * basis(s2, i) * basis(s2, j);
            }
        }
    }
    let mut theta = solve_dense(&mut ata, &mut atb).unwrap_or_else(|| vec![0.0; n_linear]);
    if spec.family == ModelFamily::Sing {
        theta.push(0.0);
    }
    theta
}

/// Solve the square system in place by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

fn informative_rows(counts: &CountTable) -> Vec<(f64, f64, f64)> {
    counts
        .rows
        .iter()
        .filter(|r| r.c > 0 && r.c < r.b)
        .map(|r| {
            // Continuity correction: harmless here (0 < C < B already), kept
            // so the initializer stays finite if the filter ever widens.
            let c = (r.c as f64).clamp(0.5, r.b as f64 - 0.5);
            let p = c / r.b as f64;
            let sigma = r.sigma2.sqrt();
            let psi = sigma * std_normal_upper_inv(p).expect("p strictly inside (0,1)");
            let dens = normal_pdf(psi / sigma);
            let w = dens * dens / (r.sigma2 * p * (1.0 - p));
            (r.sigma2, psi, w)
        })
        .collect()
}

/// Fit one model to a count table by maximizing the per-scale binomial
/// likelihood `C_σ ~ Bin(B, Φ̄(φ(σ²|β)/σ))`.
pub fn fit_mle(counts: &CountTable, spec: &ModelSpec) -> Result<FitResult> {
    let informative = informative_rows(counts);
    if informative.len() < spec.npar() {
        return Err(Error::DegenerateFit {
            n_informative: informative.len(),
            needed: spec.npar(),
        });
    }

    let theta0 = wls_init(spec, &informative);
    let objective = |theta: &[f64]| -binomial_loglik(counts, spec, &to_beta(spec, theta));

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for restart in 0..=RESTARTS {
        let mut start = theta0.clone();
        if restart > 0 {
            let mut rng = replicate_rng(
                JITTER_SEED,
                StreamDomain::FitRestart,
                0,
                restart as u64 - 1,
            );
            for t in start.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *t += 0.25 * g * t.abs().max(1.0);
            }
        }
        let steps: Vec<f64> = start.iter().map(|t| 0.1 * t.abs().max(1.0)).collect();
        let out = minimize(&objective, &start, &steps, LOGLIK_TOL, MAX_EVALS);
        let better = best
            .as_ref()
            .map(|(_, v, _)| out.value < *v)
            .unwrap_or(true);
        if better {
            best = Some((out.x, out.value, out.converged));
        }
    }
    let (theta, neg_ll, converged) = best.expect("at least one restart ran");
    let beta = to_beta(spec, &theta);
    let loglik = -neg_ll;
    Ok(FitResult {
        spec: *spec,
        beta,
        loglik,
        aic: 2.0 * spec.npar() as f64 - 2.0 * loglik,
        converged,
        n_informative: informative.len(),
        cov: None,
    })
}

/// Fit every candidate and pick the AIC-best converged fit; ties go to the
/// model with fewer parameters, then to candidate order.
pub fn select_model(
    counts: &CountTable,
    candidates: &[ModelSpec],
) -> Result<(FitResult, Vec<FitResult>)> {
    if candidates.is_empty() {
        return Err(Error::domain("need at least one candidate model"));
    }
    let mut fits = Vec::new();
    for spec in candidates {
        match fit_mle(counts, spec) {
            Ok(fit) => fits.push(fit),
            Err(Error::DegenerateFit { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let best = fits
        .iter()
        .filter(|f| f.converged)
        .min_by(|a, b| {
            let close = (a.aic - b.aic).abs() <= 1e-9;
            if close {
                a.spec.npar().cmp(&b.spec.npar())
            } else {
                a.aic.total_cmp(&b.aic)
            }
        })
        .cloned()
        .ok_or(Error::AllModelsDegenerate)?;
    Ok((best, fits))
}

/// One exact-probability observation for [`fit_wls_oracle`].
#[derive(Clone, Copy, Debug)]
pub struct OracleRow {
    pub sigma2: f64,
    pub alpha: f64,
}

/// Infinite-replicate limit of the binomial fit: weighted least squares on
/// the exact normalized z-values with Fisher weights, and a pseudo-AIC
/// (weighted squared error plus parameter penalty) for model comparison.
pub fn fit_wls_oracle(rows: &[OracleRow], spec: &ModelSpec) -> Result<FitResult> {
    let usable: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.alpha > 0.0 && r.alpha < 1.0)
        .map(|r| {
            let sigma = r.sigma2.sqrt();
            let psi = sigma * std_normal_upper_inv(r.alpha)?;
            let dens = normal_pdf(psi / sigma);
            let w = dens * dens / (r.sigma2 * r.alpha * (1.0 - r.alpha));
            Ok((r.sigma2, psi, w))
        })
        .collect::<Result<_>>()?;
    if usable.len() < spec.npar() {
        return Err(Error::DegenerateFit {
            n_informative: usable.len(),
            needed: spec.npar(),
        });
    }

    let sse = |beta: &[f64]| -> f64 {
        usable
            .iter()
            .map(|&(s2, psi, w)| {
                let phi = eval_model(spec, beta, s2).unwrap_or(f64::INFINITY);
                w * (psi - phi) * (psi - phi)
            })
            .sum()
    };

    let theta0 = wls_init(spec, &usable);
    let (theta, value, converged) = match spec.family {
        // Linear model: the initializer already solves the normal equations.
        ModelFamily::Poly => {
            let v = sse(&theta0);
            (theta0, v, true)
        }
        ModelFamily::Sing => {
            let objective = |theta: &[f64]| sse(&to_beta(spec, theta));
            let steps: Vec<f64> = theta0.iter().map(|t| 0.1 * t.abs().max(1.0)).collect();
            let out = minimize(&objective, &theta0, &steps, 1e-14, MAX_EVALS);
            (out.x, out.value, out.converged)
        }
    };
    let beta = to_beta(spec, &theta);
    Ok(FitResult {
        spec: *spec,
        beta,
        loglik: -0.5 * value,
        aic: value + 2.0 * spec.npar() as f64,
        converged,
        n_informative: usable.len(),
        cov: None,
    })
}

/// AIC-best oracle fit over the given candidates; candidates with too few
/// usable scales are skipped.
pub fn select_wls_oracle(rows: &[OracleRow], candidates: &[ModelSpec]) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for spec in candidates {
        let fit = match fit_wls_oracle(rows, spec) {
            Ok(fit) => fit,
            Err(Error::DegenerateFit { .. }) => continue,
            Err(e) => return Err(e),
        };
        let better = best.as_ref().map(|b| fit.aic < b.aic - 1e-9).unwrap_or(true);
        if better {
            best = Some(fit);
        }
    }
    best.ok_or(Error::AllModelsDegenerate)
}
