//! Shared numeric kernel: normal tail functions, noncentral chi-square
//! distribution, and Gaussian quadrature rules.
//!
//! Everything here is a pure function of its arguments; the kernels hold no
//! global state and are safe to call concurrently.

mod chisq;
mod gammainc;
mod normal;
mod quad;

pub use chisq::{noncentral_chisq_cdf, noncentral_chisq_sf};
pub use gammainc::{reg_gamma_lower, reg_gamma_upper};
pub use normal::{ln_std_normal_upper, normal_pdf, std_normal_upper, std_normal_upper_inv};
pub use quad::{make_quadrature, QuadKind, QuadratureRule};
