//! Special-function and quadrature substrate.
//!
//! Self-contained: Bessel functions of the first kind and their zeros, the
//! gamma function with regularized incomplete variants, the standard-normal
//! cdf/quantile, and adaptive Gauss-Kronrod quadrature on finite and
//! semi-infinite intervals plus fixed transformed Gauss grids for kernel
//! discretisation.

mod bessel;
mod gamma;
mod normal;
mod quad;

pub use bessel::{bessel_j, bessel_j_prime, bessel_zero, BesselOrder};
pub(crate) use bessel::bessel_j_any;
pub use gamma::{gamma_fn, ln_gamma, reg_gamma_lower, reg_gamma_upper};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use quad::{integrate, integrate_semi_infinite, GaussGrid, QuadratureSpec};
