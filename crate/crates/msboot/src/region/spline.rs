//! Natural cubic spline interpolation for cached threshold and selection
//! curves, with an optional split knot so curves with a corner stay accurate.

use crate::error::{Error, Result};

/// Natural cubic interpolant through strictly increasing abscissae.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<CubicSpline> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::domain(
                "spline needs at least two knots and matching ordinates",
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("spline abscissae must increase strictly"));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::domain("spline knots must be finite"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior tridiagonal system.
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let lower = xs[i] - xs[i - 1];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
            }
        }
        Ok(CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Evaluate at `x`, clamped to the fitted domain.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(self.xs[0], *self.xs.last().unwrap());
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = x - self.xs[i];
        let slope = (self.ys[i + 1] - self.ys[i]) / h - h / 6.0 * (2.0 * self.m[i] + self.m[i + 1]);
        self.ys[i] + t * (slope + t * (self.m[i] / 2.0 + t * (self.m[i + 1] - self.m[i]) / (6.0 * h)))
    }
}

/// One spline, or two joined at a split knot where the curve has a corner.
#[derive(Clone, Debug)]
pub struct SplitSpline {
    parts: Vec<CubicSpline>,
    split: Option<f64>,
}

impl SplitSpline {
    /// `split_at` must coincide with one of the knots.
    pub fn fit(xs: &[f64], ys: &[f64], split_at: Option<f64>) -> Result<SplitSpline> {
        match split_at {
            None => Ok(SplitSpline {
                parts: vec![CubicSpline::fit(xs, ys)?],
                split: None,
            }),
            Some(s) => {
                let i = xs
                    .iter()
                    .position(|&x| x == s)
                    .ok_or_else(|| Error::domain(format!("split point {s} is not a spline knot")))?;
                if i == 0 || i == xs.len() - 1 {
                    return Err(Error::domain("split point must be interior"));
                }
                Ok(SplitSpline {
                    parts: vec![
                        CubicSpline::fit(&xs[..=i], &ys[..=i])?,
                        CubicSpline::fit(&xs[i..], &ys[i..])?,
                    ],
                    split: Some(s),
                })
            }
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.parts[0].domain().0,
            self.parts.last().unwrap().domain().1,
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.split {
            Some(s) if x > s => self.parts[1].eval(x),
            Some(_) => self.parts[0].eval(x),
            None => self.parts[0].eval(x),
        }
    }
}
