//! Kriging under a possibly misspecified model: the BLUP, its exact MSE
//! under the true and the assumed Gaussian measures, the efficiency ratios
//! U1/U2, and the plug-in variants with the profiled variance estimate.

use serde::Serialize;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::geometry::{distance, LocationSet, Point};
use crate::linalg::{assemble_dense, cholesky, cg_solve, assemble_sparse};

/// BLUP output at one target site.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionResult {
    pub predicted: f64,
    pub weights: Vec<f64>,
    pub mse_true_model: f64,
    pub mse_assumed_model: f64,
}

fn corr_vec(model: &CovarianceModel, locs: &LocationSet, s0: &Point) -> Result<Vec<f64>> {
    (0..locs.len())
        .map(|i| model.correlation(distance(s0, locs.point(i))?))
        .collect()
}

/// Kriging weights R^{-1} c under the model's correlation.
pub fn kriging_weights(
    locs: &LocationSet,
    s0: &Point,
    model: &CovarianceModel,
) -> Result<Vec<f64>> {
    let c = corr_vec(model, locs, s0)?;
    let f = cholesky(&assemble_dense(model, locs, true)?)?;
    f.solve(&c)
}

/// Same weights through the sparse CG path; needs a compactly supported model.
pub fn kriging_weights_sparse(
    locs: &LocationSet,
    s0: &Point,
    model: &CovarianceModel,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let c = corr_vec(model, locs, s0)?;
    let s = assemble_sparse(model, locs, true)?;
    cg_solve(&s, &c, tol, max_iter)
}

/// c' R^{-1} z: the prediction and the weights that produced it.
pub fn blup(
    z: &[f64],
    locs: &LocationSet,
    s0: &Point,
    model: &CovarianceModel,
) -> Result<(f64, Vec<f64>)> {
    if z.len() != locs.len() {
        return Err(Error::DimensionMismatch(locs.len(), z.len()));
    }
    let w = kriging_weights(locs, s0, model)?;
    let pred = w.iter().zip(z).map(|(a, b)| a * b).sum();
    Ok((pred, w))
}

/// MSE of the assumed-model predictor under the true measure:
/// sigma0^2 (1 - 2 w'c0 + w'R0 w) with w the assumed kriging weights.
/// With assumed = true this reduces to sigma0^2 (1 - c'R^{-1}c).
pub fn mse_true(
    locs: &LocationSet,
    s0: &Point,
    true_model: &CovarianceModel,
    assumed_model: &CovarianceModel,
) -> Result<f64> {
    let w = kriging_weights(locs, s0, assumed_model)?;
    let c0 = corr_vec(true_model, locs, s0)?;
    let r0 = assemble_dense(true_model, locs, true)?;
    let r0w = r0.matvec(&w)?;
    let wc0: f64 = w.iter().zip(&c0).map(|(a, b)| a * b).sum();
    let wr0w: f64 = w.iter().zip(&r0w).map(|(a, b)| a * b).sum();
    let sigma0sq = true_model.sigma2();
    Ok((sigma0sq * (1.0 - 2.0 * wc0 + wr0w)).max(0.0))
}

/// Error variance the assumed model itself reports:
/// sigma1^2 (1 - c'R^{-1}c).
pub fn mse_assumed(locs: &LocationSet, s0: &Point, assumed_model: &CovarianceModel) -> Result<f64> {
    let c = corr_vec(assumed_model, locs, s0)?;
    let f = cholesky(&assemble_dense(assumed_model, locs, true)?)?;
    let q = f.quad_form(&c)?;
    Ok((assumed_model.sigma2() * (1.0 - q)).max(0.0))
}

/// Full prediction bundle at one site.
pub fn predict(
    z: &[f64],
    locs: &LocationSet,
    s0: &Point,
    true_model: &CovarianceModel,
    assumed_model: &CovarianceModel,
) -> Result<PredictionResult> {
    let (predicted, weights) = blup(z, locs, s0, assumed_model)?;
    Ok(PredictionResult {
        predicted,
        weights,
        mse_true_model: mse_true(locs, s0, true_model, assumed_model)?,
        mse_assumed_model: mse_assumed(locs, s0, assumed_model)?,
    })
}

/// U1: MSE of the assumed-model predictor over the optimal predictor's MSE,
/// both under the true measure. At least 1 by BLUP optimality.
pub fn ratio_u1(
    locs: &LocationSet,
    s0: &Point,
    true_model: &CovarianceModel,
    assumed_model: &CovarianceModel,
) -> Result<f64> {
    let denom = mse_true(locs, s0, true_model, true_model)?;
    if denom == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(mse_true(locs, s0, true_model, assumed_model)? / denom)
}

/// U2: the assumed model's own error variance over the actual error variance
/// of its predictor under the true measure.
pub fn ratio_u2(
    locs: &LocationSet,
    s0: &Point,
    true_model: &CovarianceModel,
    assumed_model: &CovarianceModel,
) -> Result<f64> {
    let denom = mse_true(locs, s0, true_model, assumed_model)?;
    if denom == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(mse_assumed(locs, s0, assumed_model)? / denom)
}

/// Plug-in ratios with the profiled variance z'R1^{-1}z/n in place of the
/// assumed variance. Returns (vs. the optimal predictor's true MSE, vs. the
/// assumed predictor's true MSE); the second reduces to U2 when the estimate
/// equals the assumed variance.
pub fn plug_in_ratios(
    z: &[f64],
    locs: &LocationSet,
    s0: &Point,
    true_model: &CovarianceModel,
    assumed_model: &CovarianceModel,
) -> Result<(f64, f64)> {
    if z.len() != locs.len() {
        return Err(Error::DimensionMismatch(locs.len(), z.len()));
    }
    let f = cholesky(&assemble_dense(assumed_model, locs, true)?)?;
    let sigma2_hat = f.quad_form(z)? / z.len() as f64;
    let c = corr_vec(assumed_model, locs, s0)?;
    let numer = (sigma2_hat * (1.0 - f.quad_form(&c)?)).max(0.0);
    let d1 = mse_true(locs, s0, true_model, true_model)?;
    let d2 = mse_true(locs, s0, true_model, assumed_model)?;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok((numer / d1, numer / d2))
}
