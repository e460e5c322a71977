//! Isotropic spectral densities.
//!
//! The Matérn density is closed form; the generalized Wendland density is a
//! 1F2 hypergeometric series whose alternating terms are summed in
//! double-double precision so the large-argument cancellation (the series is
//! used up to z*beta around 60) still leaves ~15 good digits. A numerical
//! Hankel-transform oracle backs both in tests.

use crate::covariance::{adaptive_gl, lambda, CovarianceModel, GwParams, MaternParams};
use crate::error::{Error, Result};
use crate::special::{bessel_j0, bessel_jnu_half, gamma, ln_gamma, Dd};

use std::f64::consts::PI;

/// Constants of the GW spectral density for a fixed (mu, kappa, d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub mu: f64,
    pub kappa: f64,
    pub d: usize,
    pub lambda: f64,
    /// Zero-frequency prefactor for kappa = 0.
    pub big_k: f64,
    /// Zero-frequency prefactor for kappa > 0 (equals big_k at kappa = 0 by
    /// the kappa -> 0 limit of the Gamma/Beta ratio).
    pub big_l: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl SpectralConstants {
    pub fn new(mu: f64, kappa: f64, d: usize) -> Self {
        let lam = lambda(d, kappa);
        let c3 = (ln_gamma(mu + 2.0 * lam) - ln_gamma(mu)).exp();
        let c4 = (ln_gamma(mu + 2.0 * lam) - ln_gamma(lam) - (lam - 1.0) * 2f64.ln()).exp();
        let c5 = PI / 2.0 * (mu + lam);
        let ln_k = (1.0 - kappa - d as f64) * 2f64.ln() - (d as f64 / 2.0) * PI.ln()
            + ln_gamma(mu + 1.0)
            + ln_gamma(2.0 * kappa + d as f64)
            - ln_gamma(kappa + d as f64 / 2.0)
            - ln_gamma(mu + 2.0 * lam);
        let big_k = ln_k.exp();
        let big_l = if kappa > 0.0 {
            // ln Gamma(kappa) - ln B(2 kappa, mu+1) stays finite as kappa -> 0
            (ln_k + ln_gamma(kappa)
                - (1.0 - kappa) * 2f64.ln()
                - (ln_gamma(2.0 * kappa) + ln_gamma(mu + 1.0) - ln_gamma(2.0 * kappa + mu + 1.0)))
                .exp()
        } else {
            big_k
        };
        SpectralConstants { mu, kappa, d, lambda: lam, big_k, big_l, c3, c4, c5 }
    }
}

/// Generalized hypergeometric 1F2(a; b, c; z).
///
/// Terms are carried in double-double arithmetic; the sum stops once the term
/// drops below 1e-18 of the partial sum. If the peak term is so large that
/// even ~31 digits cannot deliver nine significant digits of the result, the
/// series is reported as nonconvergent instead of returning noise.
pub fn hyp1f2(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    for (name, v) in [("b", b), ("c", c)] {
        if v <= 0.0 && v.fract() == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "denominator parameter {name} = {v} is a nonpositive integer"
            )));
        }
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    const MAX_TERMS: usize = 100_000;
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut max_term: f64 = 1.0;
    let zd = Dd::from(z);
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let ratio = zd
            .mul(Dd::from(a + kf))
            .div(Dd::from(b + kf).mul(Dd::from(c + kf)).mul(Dd::from(kf + 1.0)));
        term = term.mul(ratio);
        sum = sum.add(term);
        max_term = max_term.max(term.abs());
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            let noise = max_term * 1e-31;
            if noise > 1e-9 * sum.abs() {
                return Err(Error::SeriesNonConvergent(k + 1));
            }
            return Ok(sum.value());
        }
    }
    Err(Error::SeriesNonConvergent(MAX_TERMS))
}

/// Matérn isotropic spectral density.
pub fn matern_sd(p: &MaternParams, z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::InvalidParameter(format!("z must be nonnegative, got {z}")));
    }
    let d = p.d as f64;
    let pref = gamma(p.nu + d / 2.0) / (PI.powf(d / 2.0) * gamma(p.nu));
    let az = p.alpha * z;
    Ok(pref * p.sigma2 * p.alpha.powf(d) / (1.0 + az * az).powf(p.nu + d / 2.0))
}

/// GW isotropic spectral density via the 1F2 series.
pub fn gw_sd(p: &GwParams, z: f64) -> Result<f64> {
    gw_sd_with(&SpectralConstants::new(p.mu, p.kappa, p.d), p, z)
}

fn gw_sd_with(consts: &SpectralConstants, p: &GwParams, z: f64) -> Result<f64> {
    if z < 0.0 {
        return Err(Error::InvalidParameter(format!("z must be nonnegative, got {z}")));
    }
    let lam = consts.lambda;
    let zb = z * p.beta;
    match hyp1f2(lam, lam + p.mu / 2.0, lam + p.mu / 2.0 + 0.5, -zb * zb / 4.0) {
        Ok(f) => Ok(p.sigma2 * consts.big_l * p.beta.powf(p.d as f64) * f),
        // deep in the tail the alternating series cancels past double-double
        // precision; the direct Hankel transform is accurate there because the
        // oscillation count over the compact support stays moderate
        Err(Error::SeriesNonConvergent(_)) => {
            hankel_oracle(&CovarianceModel::Gw(p.clone()), z)
        }
        Err(e) => Err(e),
    }
}

/// A model together with its cached spectral constants.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    model: CovarianceModel,
    consts: Option<SpectralConstants>,
}

impl SpectralDensity {
    pub fn new(model: CovarianceModel) -> Result<Self> {
        model.validate().map_err(Error::InvalidModel)?;
        let consts = match &model {
            CovarianceModel::Gw(p) => Some(SpectralConstants::new(p.mu, p.kappa, p.d)),
            CovarianceModel::Matern(_) => None,
            CovarianceModel::TaperedMatern(_) => {
                return Err(Error::InvalidModel(
                    "no closed-form spectral density for the tapered Matérn family".into(),
                ))
            }
        };
        Ok(SpectralDensity { model, consts })
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        match &self.model {
            CovarianceModel::Gw(p) => gw_sd_with(self.consts.as_ref().unwrap(), p, z),
            CovarianceModel::Matern(p) => matern_sd(p, z),
            CovarianceModel::TaperedMatern(_) => unreachable!("rejected at construction"),
        }
    }
}

fn bessel_j_order(d: usize, x: f64) -> f64 {
    match d {
        1 => bessel_jnu_half(-0.5, x),
        2 => bessel_j0(x),
        _ => bessel_jnu_half(0.5, x),
    }
}

/// Numerical Hankel transform of the model's covariance:
/// z^{1-d/2} (2 pi)^{-d/2} Int_0^inf u^{d/2} J_{d/2-1}(uz) phi(u) du.
///
/// Reference implementation for tests; the integral truncates at the compact
/// support, or where the covariance falls below 1e-14 of the variance.
pub fn hankel_oracle(model: &CovarianceModel, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidParameter(format!("z must be positive, got {z}")));
    }
    let d = model.dim();
    let upper = match model.support() {
        Some(beta) => beta,
        None => {
            let s2 = model.sigma2();
            let mut r = 1.0;
            while model.cov(r)? > 1e-14 * s2 && r < 1e4 {
                r *= 2.0;
            }
            r
        }
    };
    let m = model.clone();
    let integrand = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        u.powf(d as f64 / 2.0) * bessel_j_order(d, u * z) * m.cov(u).unwrap_or(0.0)
    };
    // resolve the oscillation: a few panels per period of J(uz)
    let init = ((upper * z / PI).ceil() as usize).max(4);
    let integral = adaptive_gl(&integrand, 0.0, upper, 1e-10, init)?;
    Ok(z.powf(1.0 - d as f64 / 2.0) / (2.0 * PI).powf(d as f64 / 2.0) * integral)
}

/// Least-squares slope of log gw_sd against log z over a 50-point log grid;
/// diagnostic for the -2 lambda (kappa > 0) or -(d+1) (kappa = 0) tail.
pub fn tail_slope(p: &GwParams, z_lo: f64, z_hi: f64) -> Result<f64> {
    if !(z_lo > 0.0 && z_hi > z_lo) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < z_lo < z_hi, got [{z_lo}, {z_hi}]"
        )));
    }
    let consts = SpectralConstants::new(p.mu, p.kappa, p.d);
    let n = 50;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let z = z_lo * (z_hi / z_lo).powf(t);
        let v = gw_sd_with(&consts, p, z)?;
        if v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nonpositive density {v} at z = {z}"
            )));
        }
        xs.push(z.ln());
        ys.push(v.ln());
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::beta as beta_fn;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn hyp1f2_basic_values() {
        assert_eq!(hyp1f2(3.2, 1.7, 0.4, 0.0).unwrap(), 1.0);
        // 1F2(1;1,1;1) = sum 1/(k!)^2 = I_0(2)
        assert_relative_eq!(
            hyp1f2(1.0, 1.0, 1.0, 1.0).unwrap(),
            2.279_585_302_336_067_3,
            max_relative = 1e-14
        );
        // independent plain-f64 oracle, small argument so no cancellation
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 0..200 {
            let kf = k as f64;
            term *= -1.0 * (2.0 + kf) / ((2.0 + kf) * (3.0 + kf) * (kf + 1.0));
            sum += term;
        }
        assert_relative_eq!(hyp1f2(2.0, 2.0, 3.0, -1.0).unwrap(), sum, max_relative = 1e-13);
    }

    #[test]
    fn hyp1f2_rejects_bad_denominators() {
        assert!(hyp1f2(1.0, 0.0, 1.0, 0.5).is_err());
        assert!(hyp1f2(1.0, 1.0, -2.0, 0.5).is_err());
    }

    #[test]
    fn matern_sd_values() {
        let p = MaternParams::new(0.5, 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(matern_sd(&p, 0.0).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-12);
        let p2 = MaternParams::new(0.5, 1.0, 2.0, 2).unwrap();
        assert_relative_eq!(
            matern_sd(&p2, 1.3).unwrap(),
            2.0 * matern_sd(&p, 1.3).unwrap(),
            max_relative = 1e-14
        );
        // d=1 Cauchy shape
        let p1 = MaternParams::new(0.5, 1.0, 1.0, 1).unwrap();
        let ratio = matern_sd(&p1, 2.0).unwrap() / matern_sd(&p1, 0.0).unwrap();
        assert_relative_eq!(ratio, 1.0 / 5.0, max_relative = 1e-12);
    }

    #[test]
    fn constants_identity() {
        for (mu, kappa, d) in [(4.0, 1.0, 2usize), (5.5, 2.0, 3), (3.0, 0.5, 1), (6.0, 1.7, 2)] {
            let c = SpectralConstants::new(mu, kappa, d);
            let expected = c.big_k * gamma(kappa)
                / (2f64.powf(1.0 - kappa) * beta_fn(2.0 * kappa, mu + 1.0));
            assert_relative_eq!(c.big_l, expected, max_relative = 1e-11);
            assert!(c.c3 > 0.0 && c.c4 > 0.0 && c.c5 > 0.0 && c.big_k > 0.0);
            assert_relative_eq!(c.lambda, (d as f64 + 1.0) / 2.0 + kappa, epsilon = 0.0);
        }
        // kappa -> 0 limit agrees with the Askey prefactor
        let near = SpectralConstants::new(3.0, 1e-9, 2);
        let at = SpectralConstants::new(3.0, 0.0, 2);
        assert_relative_eq!(near.big_l, at.big_k, max_relative = 1e-6);
    }

    #[test]
    fn askey_zero_frequency_value() {
        // d=2, mu=3: K = 2^{-1} pi^{-1} Gamma(4) Gamma(2) / (Gamma(1) Gamma(6))
        //          = 6 / (2 pi 120) = 1/(40 pi)
        let p = GwParams::new(3.0, 0.0, 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(gw_sd(&p, 0.0).unwrap(), 1.0 / (40.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn gw_sd_matches_hankel_oracle() {
        let cases = [
            GwParams::new(4.5, 1.0, 1.0, 1.0, 2).unwrap(),
            GwParams::new(3.0, 0.0, 1.0, 1.0, 2).unwrap(),
            GwParams::new(5.0, 0.5, 0.7, 2.0, 3).unwrap(),
            GwParams::new(4.0, 2.0, 0.4, 1.5, 1).unwrap(),
        ];
        for p in &cases {
            let model = CovarianceModel::Gw(p.clone());
            for z in [0.5, 2.0, 5.0] {
                let series = gw_sd(p, z).unwrap();
                let oracle = hankel_oracle(&model, z).unwrap();
                assert_relative_eq!(series, oracle, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn matern_hankel_cross_check() {
        let p = MaternParams::new(0.5, 1.0, 1.0, 1).unwrap();
        let m = CovarianceModel::Matern(p.clone());
        assert_relative_eq!(
            hankel_oracle(&m, 1.0).unwrap(),
            matern_sd(&p, 1.0).unwrap(),
            max_relative = 1e-8
        );
        let p3 = MaternParams::new(1.5, 0.5, 1.0, 3).unwrap();
        let m3 = CovarianceModel::Matern(p3.clone());
        assert_relative_eq!(
            hankel_oracle(&m3, 2.0).unwrap(),
            matern_sd(&p3, 2.0).unwrap(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn matern_sd_integrates_back_to_variance() {
        // d = 1: sigma2 = 2 Int_0^inf density dz
        let p = MaternParams::new(0.75, 0.5, 1.8, 1).unwrap();
        let f = |z: f64| matern_sd(&p, z).unwrap();
        // substitute z = t/(1-t) to compress the tail
        let g = |t: f64| {
            if t >= 1.0 {
                0.0
            } else {
                f(t / (1.0 - t)) / ((1.0 - t) * (1.0 - t))
            }
        };
        let total = 2.0 * adaptive_gl(&g, 0.0, 1.0, 1e-10, 8).unwrap();
        assert_relative_eq!(total, 1.8, max_relative = 1e-6);
    }

    #[test]
    fn gw_sd_positive_at_random_models() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = rng.gen_range(1..=3usize);
            let kappa: f64 = rng.gen_range(0.0..2.5);
            let mu = crate::covariance::lambda(d, kappa) + rng.gen_range(0.0..3.0);
            let beta = rng.gen_range(0.2..1.5);
            let p = GwParams::new(mu, kappa, beta, rng.gen_range(0.5..2.0), d).unwrap();
            for z in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0] {
                assert!(gw_sd(&p, z).unwrap() > 0.0, "p={p:?} z={z}");
            }
        }
    }

    #[test]
    fn tail_slopes() {
        // kappa > 0: slope -2 lambda = -(d + 1 + 2 kappa) = -4 here
        let p = GwParams::new(5.5, 0.5, 1.0, 1.0, 2).unwrap();
        let s = tail_slope(&p, 20.0, 60.0).unwrap();
        assert!((s + 4.0).abs() < 0.15, "slope {s}");
        // kappa = 0: slope -(d+1)
        let a = GwParams::new(3.0, 0.0, 1.0, 1.0, 2).unwrap();
        let s0 = tail_slope(&a, 20.0, 60.0).unwrap();
        assert!((s0 + 3.0).abs() < 0.15, "slope {s0}");
        // variance scaling does not move the slope
        let a2 = GwParams::new(3.0, 0.0, 1.0, 2.0, 2).unwrap();
        let s2 = tail_slope(&a2, 20.0, 60.0).unwrap();
        assert_relative_eq!(s0, s2, epsilon = 1e-9);
    }

    #[test]
    fn spectral_density_wrapper() {
        let gw = CovarianceModel::Gw(GwParams::new(4.5, 1.0, 1.0, 1.0, 2).unwrap());
        let sd = SpectralDensity::new(gw.clone()).unwrap();
        if let CovarianceModel::Gw(p) = &gw {
            assert_relative_eq!(sd.eval(1.5).unwrap(), gw_sd(p, 1.5).unwrap(), epsilon = 0.0);
        }
        let tm = CovarianceModel::TaperedMatern(
            crate::covariance::TaperedMaternParams::new(
                MaternParams::new(0.5, 1.0, 1.0, 2).unwrap(),
                GwParams::new(2.0, 0.0, 0.5, 1.0, 2).unwrap(),
            )
            .unwrap(),
        );
        assert!(SpectralDensity::new(tm).is_err());
    }
}
