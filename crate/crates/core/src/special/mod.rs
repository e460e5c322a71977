//! Scalar special functions used by the covariance and spectral modules.

mod bessel;
mod dd;
mod gamma;

pub use bessel::{bessel_j0, bessel_j1, bessel_jnu_half, bessel_k};
pub use dd::Dd;
pub use gamma::{beta, erf, gamma, ln_beta, ln_gamma, normal_cdf, normal_quantile};
