//! Gaussian quadrature rules.
//!
//! Nodes are found from the orthogonal-polynomial recurrences alone: Hermite
//! roots by interlacing bisection (each level's roots bracket the next), and
//! Legendre roots by Newton iteration from the Chebyshev-angle guesses. No
//! precomputed tables.

use crate::error::{Error, Result};

/// Supported weight functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadKind {
    /// Weight `exp(-x^2/2)/sqrt(2*pi)` on the whole line; weights sum to 1,
    /// so the rule computes expectations under the standard normal law.
    GaussHermiteProbabilist,
    /// Weight 1 on `[-1, 1]`.
    GaussLegendre,
}

/// A quadrature rule: strictly increasing nodes with positive weights.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadKind,
}

impl QuadratureRule {
    /// Sum of `weight * f(node)` over the rule.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// A Gauss-Legendre rule affinely mapped from `[-1, 1]` to `[a, b]`.
    pub fn mapped_to(&self, a: f64, b: f64) -> Result<QuadratureRule> {
        if self.kind != QuadKind::GaussLegendre {
            return Err(Error::domain(
                "interval mapping applies to Gauss-Legendre rules only",
            ));
        }
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Ok(QuadratureRule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
            kind: QuadKind::GaussLegendre,
        })
    }
}

/// Build a quadrature rule of the given kind and order.
///
/// The rule integrates polynomials of degree up to `2*order - 1` exactly
/// against its weight function.
pub fn make_quadrature(kind: QuadKind, order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::domain(format!(
            "quadrature order must be >= 2, got {order}"
        )));
    }
    match kind {
        QuadKind::GaussHermiteProbabilist => gauss_hermite(order),
        QuadKind::GaussLegendre => gauss_legendre(order),
    }
}

/// Normalized probabilists' Hermite value `He_n(x)/sqrt(n!)` and its
/// degree-(n-1) companion.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    for j in 0..n {
        let jf = j as f64;
        let next = (x * cur - jf.sqrt() * prev) / (jf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
    // The normalized recurrence still overflows near the outermost brackets
    // for very large orders; cap well inside the safe range.
    if order > 512 {
        return Err(Error::domain(format!(
            "Gauss-Hermite order capped at 512, got {order}"
        )));
    }
    let mut roots: Vec<f64> = Vec::new();
    for m in 1..=order {
        let bound = (4.0 * m as f64 + 2.0).sqrt() + 1.0;
        let mut brackets = Vec::with_capacity(m + 1);
        brackets.push(-bound);
        brackets.extend_from_slice(&roots);
        brackets.push(bound);
        let iters = if m == order { 60 } else { 32 };
        let mut next = Vec::with_capacity(m);
        for pair in brackets.windows(2) {
            let (mut lo, mut hi) = (pair[0], pair[1]);
            let flo = hermite_pair(m, lo).0;
            if flo * hermite_pair(m, hi).0 > 0.0 {
                return Err(Error::domain(
                    "Hermite root bracketing failed; quadrature construction aborted",
                ));
            }
            for _ in 0..iters {
                let mid = 0.5 * (lo + hi);
                if flo * hermite_pair(m, mid).0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            next.push(0.5 * (lo + hi));
        }
        roots = next;
    }

    // Newton polish, then symmetrize the node set.
    let sqrt_n = (order as f64).sqrt();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, pm) = hermite_pair(order, *r);
            let dp = sqrt_n * pm;
            if dp != 0.0 {
                *r -= p / dp;
            }
        }
    }
    for i in 0..order / 2 {
        let sym = 0.5 * (roots[order - 1 - i] - roots[i]);
        roots[i] = -sym;
        roots[order - 1 - i] = sym;
    }
    if order % 2 == 1 {
        roots[order / 2] = 0.0;
    }

    let weights: Vec<f64> = roots
        .iter()
        .map(|&x| {
            let (_, pm) = hermite_pair(order, x);
            1.0 / (order as f64 * pm * pm)
        })
        .collect();
    Ok(QuadratureRule {
        nodes: roots,
        weights,
        kind: QuadKind::GaussHermiteProbabilist,
    })
}

/// Legendre value `P_n(x)` and its companion `P_{n-1}(x)`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    for j in 0..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0) * x * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0_f64; n];
    let mut weights = vec![0.0_f64; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, pm) = legendre_pair(n, z);
            dp = nf * (z * p - pm) / (z * z - 1.0);
            let step = p / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // cos guesses start near +1 and walk down; store symmetric pairs.
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadKind::GaussLegendre,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_below_two_is_rejected() {
        assert!(make_quadrature(QuadKind::GaussLegendre, 1).is_err());
    }

    #[test]
    fn tiny_rules_match_known_values() {
        let gh = make_quadrature(QuadKind::GaussHermiteProbabilist, 2).unwrap();
        assert!((gh.nodes[0] + 1.0).abs() < 1e-14);
        assert!((gh.nodes[1] - 1.0).abs() < 1e-14);
        assert!((gh.weights[0] - 0.5).abs() < 1e-14);

        let gl = make_quadrature(QuadKind::GaussLegendre, 2).unwrap();
        let inv_sqrt3 = 1.0 / 3.0_f64.sqrt();
        assert!((gl.nodes[1] - inv_sqrt3).abs() < 1e-14);
        assert!((gl.weights[0] - 1.0).abs() < 1e-14);
    }
}
