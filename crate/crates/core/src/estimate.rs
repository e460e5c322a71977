//! Gaussian likelihood for the GW family with (mu, kappa) fixed: the
//! profiled variance estimator, profile-likelihood maximization over the
//! compact support, and the standardized microergodic statistic.

use serde::Serialize;

use crate::covariance::{CovarianceModel, GwParams};
use crate::error::{Error, Result};
use crate::geometry::LocationSet;
use crate::linalg::{assemble_dense, cholesky, CholFactor};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn correlation_factor(locs: &LocationSet, mu: f64, kappa: f64, beta: f64) -> Result<CholFactor> {
    let p = GwParams::new(mu, kappa, beta, 1.0, locs.dim())?;
    let m = assemble_dense(&CovarianceModel::Gw(p), locs, true)?;
    cholesky(&m)
}

/// Log-likelihood -1/2 (n log(2 pi sigma2) + log|R(beta)| + z'R(beta)^{-1}z / sigma2).
pub fn loglik(
    z: &[f64],
    locs: &LocationSet,
    mu: f64,
    kappa: f64,
    sigma2: f64,
    beta: f64,
) -> Result<f64> {
    if z.len() != locs.len() {
        return Err(Error::DimensionMismatch(locs.len(), z.len()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    let f = correlation_factor(locs, mu, kappa, beta)?;
    let q = f.quad_form(z)?;
    let n = z.len() as f64;
    Ok(-0.5 * (n * (LN_2PI + sigma2.ln()) + f.logdet() + q / sigma2))
}

/// Profiled variance estimator z'R(beta)^{-1}z / n.
pub fn sigma2_hat(z: &[f64], locs: &LocationSet, mu: f64, kappa: f64, beta: f64) -> Result<f64> {
    if z.len() != locs.len() {
        return Err(Error::DimensionMismatch(locs.len(), z.len()));
    }
    if z.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData);
    }
    let f = correlation_factor(locs, mu, kappa, beta)?;
    Ok(f.quad_form(z)? / z.len() as f64)
}

/// Profile log-likelihood -1/2 (n log 2 pi + n log sigma2_hat(beta) + log|R(beta)| + n).
pub fn profile_loglik(z: &[f64], locs: &LocationSet, mu: f64, kappa: f64, beta: f64) -> Result<f64> {
    if z.len() != locs.len() {
        return Err(Error::DimensionMismatch(locs.len(), z.len()));
    }
    if z.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData);
    }
    let f = correlation_factor(locs, mu, kappa, beta)?;
    let n = z.len() as f64;
    let s2 = f.quad_form(z)? / n;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateData);
    }
    Ok(-0.5 * (n * LN_2PI + n * s2.ln() + f.logdet() + n))
}

/// Maximum-likelihood result of the profile fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub sigma2_hat: f64,
    pub beta_hat: f64,
    pub microergodic_hat: f64,
    pub loglik: f64,
    pub evaluations: usize,
    pub interval: (f64, f64),
}

/// Maximizes a scalar function on [lo, hi]: 32-point log-spaced coarse grid,
/// then golden-section refinement around the best grid point. Unimodality is
/// not assumed; the grid guards against secondary modes.
pub fn maximize_scalar<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok((lo, f(lo)?, 1));
    }
    let mut evals = 0usize;
    const GRID: usize = 32;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut grid = Vec::with_capacity(GRID);
    for i in 0..GRID {
        let t = i as f64 / (GRID - 1) as f64;
        let x = lo * (hi / lo).powf(t);
        grid.push(x);
        if let Ok(v) = f(x) {
            evals += 1;
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Err(Error::NoFeasiblePoint);
    }
    let idx = grid.iter().position(|&x| x == best.0).unwrap();
    let mut a = if idx == 0 { lo } else { grid[idx - 1] };
    let mut b = if idx == GRID - 1 { hi } else { grid[idx + 1] };

    // golden-section on [a, b]
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1).unwrap_or(f64::NEG_INFINITY);
    let mut f2 = f(x2).unwrap_or(f64::NEG_INFINITY);
    evals += 2;
    while (b - a) > tol * x1.abs().max(1e-12) && evals < 500 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1).unwrap_or(f64::NEG_INFINITY);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2).unwrap_or(f64::NEG_INFINITY);
        }
        evals += 1;
    }
    let (xb, fb) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if fb >= best.1 {
        Ok((xb, fb, evals))
    } else {
        Ok((best.0, best.1, evals))
    }
}

/// Profile maximum likelihood over the support interval.
pub fn fit_profile(
    z: &[f64],
    locs: &LocationSet,
    mu: f64,
    kappa: f64,
    interval: (f64, f64),
    tol: f64,
) -> Result<FitResult> {
    let (lo, hi) = interval;
    let (beta_hat, pl, evaluations) =
        maximize_scalar(|b| profile_loglik(z, locs, mu, kappa, b), lo, hi, tol)?;
    let s2 = sigma2_hat(z, locs, mu, kappa, beta_hat)?;
    Ok(FitResult {
        sigma2_hat: s2,
        beta_hat,
        microergodic_hat: s2 / beta_hat.powf(1.0 + 2.0 * kappa),
        loglik: pl,
        evaluations,
        interval,
    })
}

/// The standardized microergodic statistic
/// sqrt(n/2) (sigma2_hat(x) beta0^(1+2k) / (sigma0^2 x^(1+2k)) - 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MicroergodicStat {
    pub value: f64,
}

pub fn microergodic_stat(
    sigma2_hat_val: f64,
    x: f64,
    sigma0sq: f64,
    beta0: f64,
    kappa: f64,
    n: usize,
) -> MicroergodicStat {
    let e = 1.0 + 2.0 * kappa;
    let ratio = sigma2_hat_val * beta0.powf(e) / (sigma0sq * x.powf(e));
    MicroergodicStat { value: (n as f64 / 2.0).sqrt() * (ratio - 1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::simulate::{simulate, SimConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_locs(n: usize, seed: u64) -> LocationSet {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        LocationSet::new(
            (0..n)
                .map(|_| Point::new(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_loglik() {
        let locs = LocationSet::new(vec![Point::new(vec![0.5, 0.5])]).unwrap();
        let z = [1.3];
        let ll = loglik(&z, &locs, 3.0, 0.0, 1.0, 0.4).unwrap();
        assert_relative_eq!(ll, -0.5 * (LN_2PI + 1.3 * 1.3), epsilon = 1e-14);
    }

    #[test]
    fn identity_correlation_maximizer() {
        // beta below the minimum pairwise distance makes R the identity
        let locs = LocationSet::new(vec![
            Point::new(vec![0.0, 0.0]),
            Point::new(vec![0.5, 0.0]),
            Point::new(vec![0.0, 0.5]),
        ])
        .unwrap();
        let z = [0.7, -1.1, 0.4];
        let s2_opt = z.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert_relative_eq!(
            sigma2_hat(&z, &locs, 3.0, 0.0, 0.1).unwrap(),
            s2_opt,
            epsilon = 1e-14
        );
        let at = loglik(&z, &locs, 3.0, 0.0, s2_opt, 0.1).unwrap();
        for d in [0.9, 1.1] {
            assert!(loglik(&z, &locs, 3.0, 0.0, s2_opt * d, 0.1).unwrap() < at);
        }
    }

    /// Direct multivariate normal log density via Gauss-Jordan inverse and
    /// Gaussian-elimination determinant.
    fn mvn_logpdf_oracle(z: &[f64], cov: &[Vec<f64>]) -> f64 {
        let n = z.len();
        let mut a = cov.to_vec();
        let mut inv: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let mut logdet = 0.0;
        for col in 0..n {
            let piv = a[col][col];
            logdet += piv.ln();
            for j in 0..n {
                a[col][j] /= piv;
                inv[col][j] /= piv;
            }
            for row in 0..n {
                if row != col {
                    let f = a[row][col];
                    for j in 0..n {
                        a[row][j] -= f * a[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += z[i] * inv[i][j] * z[j];
            }
        }
        -0.5 * (n as f64 * LN_2PI + logdet + q)
    }

    #[test]
    fn loglik_matches_direct_density() {
        let locs = random_locs(10, 1);
        let (mu, kappa, sigma2, beta) = (4.0, 1.0, 1.7, 0.6);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let z: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cov: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                (0..10)
                    .map(|j| {
                        sigma2
                            * crate::covariance::gw_correlation(mu, kappa, locs.dist(i, j) / beta)
                                .unwrap()
                    })
                    .collect()
            })
            .collect();
        let oracle = mvn_logpdf_oracle(&z, &cov);
        let ll = loglik(&z, &locs, mu, kappa, sigma2, beta).unwrap();
        assert_relative_eq!(ll, oracle, max_relative = 1e-9);
    }

    #[test]
    fn sigma2_hat_dense_oracle_and_degenerate() {
        let locs = random_locs(12, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let z: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // support beyond every pairwise distance, kappa = 0.5
        let s2 = sigma2_hat(&z, &locs, 5.0, 0.5, 3.0).unwrap();
        let cov: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                (0..12)
                    .map(|j| {
                        crate::covariance::gw_correlation(5.0, 0.5, locs.dist(i, j) / 3.0).unwrap()
                    })
                    .collect()
            })
            .collect();
        // quad form via the same Gauss-Jordan oracle
        let ll = mvn_logpdf_oracle(&z, &cov);
        let logdet: f64 = {
            // recover q from the oracle: q = -2 ll - n log 2pi - logdet
            let mut a = cov.clone();
            let mut s = 0.0;
            for col in 0..12 {
                let piv = a[col][col];
                s += piv.ln();
                for j in 0..12 {
                    a[col][j] /= piv;
                }
                for row in 0..12 {
                    if row != col {
                        let f = a[row][col];
                        for j in 0..12 {
                            a[row][j] -= f * a[col][j];
                        }
                    }
                }
            }
            s
        };
        let q = -2.0 * ll - 12.0 * LN_2PI - logdet;
        assert_relative_eq!(s2, q / 12.0, max_relative = 1e-9);

        assert!(matches!(
            sigma2_hat(&[0.0; 12], &locs, 5.0, 0.5, 3.0),
            Err(Error::DegenerateData)
        ));
    }

    #[test]
    fn profile_is_plugged_loglik() {
        let locs = random_locs(50, 5);
        let model = CovarianceModel::Gw(GwParams::new(4.0, 0.5, 0.4, 1.0, 2).unwrap());
        let z = &simulate(&SimConfig { model, locs: locs.clone(), replicates: 1, seed: 11 })
            .unwrap()[0];
        for beta in [0.2, 0.4, 0.9] {
            let s2 = sigma2_hat(z, &locs, 4.0, 0.5, beta).unwrap();
            let pl = profile_loglik(z, &locs, 4.0, 0.5, beta).unwrap();
            let ll = loglik(z, &locs, 4.0, 0.5, s2, beta).unwrap();
            assert_relative_eq!(pl, ll, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_point_profile_constant() {
        let locs = LocationSet::new(vec![Point::new(vec![0.1, 0.9])]).unwrap();
        let z = [0.8];
        let a = profile_loglik(&z, &locs, 3.0, 0.0, 0.2).unwrap();
        let b = profile_loglik(&z, &locs, 3.0, 0.0, 2.0).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn optimizer_recovers_quadratic_argmax() {
        let f = |x: f64| Ok(-(x - 1.7) * (x - 1.7));
        let (x, _, _) = maximize_scalar(f, 0.1, 5.0, 1e-8).unwrap();
        assert_relative_eq!(x, 1.7, max_relative = 1e-6);
        // collapsed interval
        let (x0, v0, e0) = maximize_scalar(f, 2.5, 2.5, 1e-8).unwrap();
        assert_eq!((x0, e0), (2.5, 1));
        assert_relative_eq!(v0, -0.64, epsilon = 1e-14);
    }

    #[test]
    fn scale_equivariance() {
        let locs = random_locs(30, 6);
        let model = CovarianceModel::Gw(GwParams::new(3.0, 0.0, 0.4, 1.0, 2).unwrap());
        let z = &simulate(&SimConfig { model, locs: locs.clone(), replicates: 1, seed: 12 })
            .unwrap()[0];
        let zc: Vec<f64> = z.iter().map(|v| 3.0 * v).collect();
        for beta in [0.2, 0.5] {
            let a = sigma2_hat(z, &locs, 3.0, 0.0, beta).unwrap();
            let b = sigma2_hat(&zc, &locs, 3.0, 0.0, beta).unwrap();
            assert_relative_eq!(b, 9.0 * a, max_relative = 1e-12);
        }
        let fa = fit_profile(z, &locs, 3.0, 0.0, (1e-3, 3.0), 1e-6).unwrap();
        let fb = fit_profile(&zc, &locs, 3.0, 0.0, (1e-3, 3.0), 1e-6).unwrap();
        assert_relative_eq!(fa.beta_hat, fb.beta_hat, max_relative = 1e-9);
    }

    #[test]
    fn microergodic_ratio_monotone_in_beta() {
        // with mu = lambda + 3 the profiled microergodic combination
        // sigma2_hat(beta)/beta^(1+2 kappa) is nonincreasing in beta
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for trial in 0..10 {
            let locs = random_locs(50, 100 + trial);
            let kappa = [0.0, 0.5, 1.0][trial as usize % 3];
            let mu = crate::covariance::lambda(2, kappa) + 3.0;
            let z: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = 1.0 + 2.0 * kappa;
            let mut prev = f64::INFINITY;
            for i in 0..10 {
                let beta = 0.05 + 0.3 * i as f64;
                let g = sigma2_hat(&z, &locs, mu, kappa, beta).unwrap() / beta.powf(e);
                assert!(g <= prev * (1.0 + 1e-12), "trial {trial} beta {beta}: {g} > {prev}");
                prev = g;
            }
        }
    }

    #[test]
    fn fit_profile_smoke_on_simulated_data() {
        let beta0 = 0.4;
        let kappa = 0.0;
        let mu = crate::covariance::lambda(2, kappa) + 3.0;
        let locs = crate::geometry::subsample(
            &crate::geometry::perturbed_grid(0.03, 0.01, 21).unwrap(),
            300,
            22,
        )
        .unwrap();
        let model = CovarianceModel::Gw(GwParams::new(mu, kappa, beta0, 1.0, 2).unwrap());
        let z = &simulate(&SimConfig { model, locs: locs.clone(), replicates: 1, seed: 23 })
            .unwrap()[0];
        let fit = fit_profile(z, &locs, mu, kappa, (1e-6, 15.0 * beta0), 1e-6).unwrap();
        assert!(fit.beta_hat >= 1e-6 && fit.beta_hat <= 6.0);
        let target = 1.0 / beta0; // sigma0^2 / beta0^(1+2 kappa)
        assert!(
            (fit.microergodic_hat - target).abs() / target < 0.3,
            "microergodic {} vs {target}",
            fit.microergodic_hat
        );
        assert_relative_eq!(
            fit.microergodic_hat,
            fit.sigma2_hat / fit.beta_hat,
            epsilon = 1e-15
        );
    }

    #[test]
    fn stat_scaling() {
        let s = microergodic_stat(1.0, 0.4, 1.0, 0.4, 0.0, 500);
        assert_eq!(s.value, 0.0);
        let a = microergodic_stat(1.2, 0.4, 1.0, 0.4, 0.0, 100);
        let b = microergodic_stat(1.2, 0.4, 1.0, 0.4, 0.0, 400);
        assert_relative_eq!(b.value, 2.0 * a.value, max_relative = 1e-12);
    }
}
