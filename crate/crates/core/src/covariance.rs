//! Parametric covariance families: generalized Wendland (GW), its Askey
//! special case, Matérn, and tapered Matérn.
//!
//! Parameters are validated at construction against the positive-definiteness
//! bound mu >= lambda(d, kappa) = (d+1)/2 + kappa; evaluation assumes a
//! validated model. Compact support convention: phi(r) > 0 for r < beta and
//! phi(r) = 0 for r >= beta, with the strict inequality reused by the sparse
//! assembly pattern.

use serde::{Deserialize, Serialize};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::{beta as beta_fn, bessel_k};

/// lambda(d, kappa) = (d+1)/2 + kappa, the lower validity bound for mu.
pub fn lambda(d: usize, kappa: f64) -> f64 {
    (d as f64 + 1.0) / 2.0 + kappa
}

/// Generalized Wendland parameters (kappa = 0 is the Askey family).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwParams {
    pub mu: f64,
    pub kappa: f64,
    pub beta: f64,
    pub sigma2: f64,
    pub d: usize,
}

impl GwParams {
    pub fn new(mu: f64, kappa: f64, beta: f64, sigma2: f64, d: usize) -> Result<Self> {
        let p = GwParams { mu, kappa, beta, sigma2, d };
        p.validate().map_err(Error::InvalidParameter)?;
        Ok(p)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(1..=3).contains(&self.d) {
            return Err(format!("dimension must be 1, 2 or 3, got {}", self.d));
        }
        if !(self.kappa >= 0.0) {
            return Err(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        let lam = lambda(self.d, self.kappa);
        if !(self.mu >= lam) {
            return Err(format!(
                "mu = {} violates mu >= (d+1)/2 + kappa = {} for d = {}, kappa = {}",
                self.mu, lam, self.d, self.kappa
            ));
        }
        if !(self.beta > 0.0) {
            return Err(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.sigma2 > 0.0) {
            return Err(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        lambda(self.d, self.kappa)
    }
}

/// Matérn parameters; valid for any positive nu, alpha, sigma2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub nu: f64,
    pub alpha: f64,
    pub sigma2: f64,
    pub d: usize,
}

impl MaternParams {
    pub fn new(nu: f64, alpha: f64, sigma2: f64, d: usize) -> Result<Self> {
        let p = MaternParams { nu, alpha, sigma2, d };
        p.validate().map_err(Error::InvalidParameter)?;
        Ok(p)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(1..=3).contains(&self.d) {
            return Err(format!("dimension must be 1, 2 or 3, got {}", self.d));
        }
        for (name, v) in [("nu", self.nu), ("alpha", self.alpha), ("sigma2", self.sigma2)] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Matérn multiplied by a unit-variance GW taper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaperedMaternParams {
    pub matern: MaternParams,
    pub taper: GwParams,
}

impl TaperedMaternParams {
    pub fn new(matern: MaternParams, taper: GwParams) -> Result<Self> {
        let p = TaperedMaternParams { matern, taper };
        p.validate().map_err(Error::InvalidParameter)?;
        Ok(p)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        self.matern.validate()?;
        self.taper.validate()?;
        if self.taper.sigma2 != 1.0 {
            return Err(format!(
                "taper must have unit variance, got sigma2 = {}",
                self.taper.sigma2
            ));
        }
        if self.matern.d != self.taper.d {
            return Err(format!(
                "matern dimension {} differs from taper dimension {}",
                self.matern.d, self.taper.d
            ));
        }
        Ok(())
    }
}

/// Tagged union over the supported families.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    Gw(GwParams),
    Matern(MaternParams),
    TaperedMatern(TaperedMaternParams),
}

impl CovarianceModel {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            CovarianceModel::Gw(p) => p.validate(),
            CovarianceModel::Matern(p) => p.validate(),
            CovarianceModel::TaperedMatern(p) => p.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovarianceModel::Gw(p) => p.d,
            CovarianceModel::Matern(p) => p.d,
            CovarianceModel::TaperedMatern(p) => p.matern.d,
        }
    }

    pub fn sigma2(&self) -> f64 {
        match self {
            CovarianceModel::Gw(p) => p.sigma2,
            CovarianceModel::Matern(p) => p.sigma2,
            CovarianceModel::TaperedMatern(p) => p.matern.sigma2,
        }
    }

    /// Compact-support radius, if the model has one.
    pub fn support(&self) -> Option<f64> {
        match self {
            CovarianceModel::Gw(p) => Some(p.beta),
            CovarianceModel::Matern(_) => None,
            CovarianceModel::TaperedMatern(p) => Some(p.taper.beta),
        }
    }

    /// Covariance at distance r >= 0.
    pub fn cov(&self, r: f64) -> Result<f64> {
        match self {
            CovarianceModel::Gw(p) => gw_cov(p, r),
            CovarianceModel::Matern(p) => matern_cov(p, r),
            CovarianceModel::TaperedMatern(p) => tapered_matern_cov(p, r),
        }
    }

    /// Correlation at distance r >= 0 (covariance over sigma2).
    pub fn correlation(&self, r: f64) -> Result<f64> {
        Ok(self.cov(r)? / self.sigma2())
    }
}

// ---------------------------------------------------------------------------
// JSON form: {"family": "...", "params": {...}, "dim": d}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    family: String,
    params: serde_json::Value,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct GwJson {
    mu: f64,
    #[serde(default)]
    kappa: f64,
    beta: f64,
    sigma2: f64,
}

#[derive(Serialize, Deserialize)]
struct MaternJson {
    nu: f64,
    alpha: f64,
    sigma2: f64,
}

#[derive(Serialize, Deserialize)]
struct TaperedJson {
    matern: MaternJson,
    taper: GwJson,
}

impl CovarianceModel {
    pub fn to_json(&self) -> serde_json::Value {
        let (family, params, dim) = match self {
            CovarianceModel::Gw(p) => (
                if p.kappa == 0.0 { "askey" } else { "gw" },
                serde_json::to_value(GwJson {
                    mu: p.mu,
                    kappa: p.kappa,
                    beta: p.beta,
                    sigma2: p.sigma2,
                })
                .expect("plain struct serializes"),
                p.d,
            ),
            CovarianceModel::Matern(p) => (
                "matern",
                serde_json::to_value(MaternJson { nu: p.nu, alpha: p.alpha, sigma2: p.sigma2 })
                    .expect("plain struct serializes"),
                p.d,
            ),
            CovarianceModel::TaperedMatern(p) => (
                "tapered_matern",
                serde_json::to_value(TaperedJson {
                    matern: MaternJson {
                        nu: p.matern.nu,
                        alpha: p.matern.alpha,
                        sigma2: p.matern.sigma2,
                    },
                    taper: GwJson {
                        mu: p.taper.mu,
                        kappa: p.taper.kappa,
                        beta: p.taper.beta,
                        sigma2: p.taper.sigma2,
                    },
                })
                .expect("plain struct serializes"),
                p.matern.d,
            ),
        };
        serde_json::json!({"family": family, "params": params, "dim": dim})
    }

    pub fn from_json(v: &serde_json::Value) -> Result<CovarianceModel> {
        let mj: ModelJson = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidModel(format!("malformed model JSON: {e}")))?;
        let d = mj.dim;
        let model = match mj.family.as_str() {
            "gw" | "askey" => {
                let g: GwJson = serde_json::from_value(mj.params)
                    .map_err(|e| Error::InvalidModel(format!("gw params: {e}")))?;
                let kappa = if mj.family == "askey" { 0.0 } else { g.kappa };
                CovarianceModel::Gw(GwParams { mu: g.mu, kappa, beta: g.beta, sigma2: g.sigma2, d })
            }
            "matern" => {
                let m: MaternJson = serde_json::from_value(mj.params)
                    .map_err(|e| Error::InvalidModel(format!("matern params: {e}")))?;
                CovarianceModel::Matern(MaternParams { nu: m.nu, alpha: m.alpha, sigma2: m.sigma2, d })
            }
            "tapered_matern" => {
                let t: TaperedJson = serde_json::from_value(mj.params)
                    .map_err(|e| Error::InvalidModel(format!("tapered_matern params: {e}")))?;
                CovarianceModel::TaperedMatern(TaperedMaternParams {
                    matern: MaternParams {
                        nu: t.matern.nu,
                        alpha: t.matern.alpha,
                        sigma2: t.matern.sigma2,
                        d,
                    },
                    taper: GwParams {
                        mu: t.taper.mu,
                        kappa: t.taper.kappa,
                        beta: t.taper.beta,
                        sigma2: t.taper.sigma2,
                        d,
                    },
                })
            }
            other => {
                return Err(Error::InvalidModel(format!("unknown family '{other}'")));
            }
        };
        model.validate().map_err(Error::InvalidModel)?;
        Ok(model)
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// GW correlation phi_{mu,kappa}(r) on the unit support.
///
/// kappa = 0 is the Askey form (1-r)_+^mu; kappa in {1,2,3} use the
/// polynomial closed forms; other kappa fall back to adaptive quadrature of
/// the integration-by-parts integral, whose integrand is bounded for
/// kappa > 0.
pub fn gw_correlation(mu: f64, kappa: f64, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("r must be nonnegative, got {r}")));
    }
    if kappa < 0.0 {
        return Err(Error::InvalidParameter(format!("kappa must be nonnegative, got {kappa}")));
    }
    if r >= 1.0 {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let s = 1.0 - r;
    let v = if kappa == 0.0 {
        s.powf(mu)
    } else if kappa == 1.0 {
        s.powf(mu + 1.0) * (1.0 + r * (mu + 1.0))
    } else if kappa == 2.0 {
        s.powf(mu + 2.0) * (1.0 + r * (mu + 2.0) + r * r * (mu * mu + 4.0 * mu + 3.0) / 3.0)
    } else if kappa == 3.0 {
        s.powf(mu + 3.0)
            * (1.0
                + r * (mu + 3.0)
                + r * r * (2.0 * mu * mu + 12.0 * mu + 15.0) / 5.0
                + r * r * r * (mu * mu * mu + 9.0 * mu * mu + 23.0 * mu + 15.0) / 15.0)
    } else {
        gw_correlation_quadrature(mu, kappa, r)?
    };
    Ok(v.clamp(0.0, 1.0))
}

const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_7,
    0.755_404_408_355_003,
    0.865_631_202_387_831_7,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_54,
    0.149_595_988_816_576_73,
    0.124_628_971_255_533_87,
    0.095_158_511_682_492_79,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

fn gl16(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..8 {
        s += GL16_W[k] * (f(c + h * GL16_X[k]) + f(c - h * GL16_X[k]));
    }
    s * h
}

/// Composite 16-point Gauss-Legendre with panel doubling until two successive
/// refinements agree to `rel_tol` relative.
pub(crate) fn adaptive_gl(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    init_panels: usize,
) -> Result<f64> {
    let mut panels = init_panels.max(1);
    let mut prev = f64::NAN;
    let cap = init_panels.max(1) << 14;
    while panels <= cap {
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for i in 0..panels {
            let lo = a + i as f64 * h;
            s += gl16(f, lo, lo + h);
        }
        if prev.is_finite() && (s - prev).abs() <= rel_tol * s.abs().max(1e-300) {
            return Ok(s);
        }
        prev = s;
        panels *= 2;
    }
    Err(Error::SeriesNonConvergent(cap))
}

/// Tanh-sinh (double-exponential) quadrature of f over (0, 1); `f` receives
/// (x, 1 - x) so endpoint factors can be evaluated without cancellation.
/// Robust to algebraic endpoint singularities like x^a (1-x)^b.
fn tanh_sinh_01(f: &impl Fn(f64, f64) -> f64, rel_tol: f64) -> Result<f64> {
    const T_MAX: f64 = 4.0;
    // contribution of the node at abscissa t, without the step factor h
    let node = |t: f64| {
        let y = 0.5 * PI * t.sinh();
        let x = 1.0 / (1.0 + (-2.0 * y).exp());
        let omx = 1.0 / (1.0 + (2.0 * y).exp());
        let sech = 2.0 / (y.exp() + (-y).exp());
        0.25 * PI * t.cosh() * sech * sech * f(x, omx)
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut j = 1;
    while j as f64 * h <= T_MAX {
        sum += node(j as f64 * h) + node(-(j as f64) * h);
        j += 1;
    }
    let mut prev = f64::NAN;
    for _ in 0..10 {
        let s = h * sum;
        if prev.is_finite() && (s - prev).abs() <= rel_tol * s.abs().max(1e-300) {
            return Ok(s);
        }
        prev = s;
        // halve the step; only the new odd-multiple nodes need evaluating
        h *= 0.5;
        let mut j = 1;
        while j as f64 * h <= T_MAX {
            sum += node(j as f64 * h) + node(-(j as f64) * h);
            j += 2;
        }
    }
    Err(Error::SeriesNonConvergent(1 << 12))
}

/// Quadrature reference for phi_{mu,kappa}: the integration-by-parts form
/// (1/B(1+2 kappa, mu)) Int_r^1 (u^2-r^2)^kappa (1-u)^(mu-1) du, kappa >= 0,
/// after the substitution u = r + (1-r) t which moves the algebraic endpoint
/// factors into the smooth weight t^kappa (1-t)^(mu-1).
pub fn gw_correlation_quadrature(mu: f64, kappa: f64, r: f64) -> Result<f64> {
    assert!(kappa >= 0.0 && (0.0..1.0).contains(&r));
    let norm = beta_fn(1.0 + 2.0 * kappa, mu);
    let integrand = |t: f64, omt: f64| {
        t.powf(kappa) * omt.powf(mu - 1.0) * (2.0 * r + (1.0 - r) * t).powf(kappa)
    };
    let scale = (1.0 - r).powf(kappa + mu);
    Ok(scale * tanh_sinh_01(&integrand, 1e-13)? / norm)
}

/// Scaled GW covariance sigma2 * phi_{mu,kappa}(r/beta).
pub fn gw_cov(p: &GwParams, r: f64) -> Result<f64> {
    Ok(p.sigma2 * gw_correlation(p.mu, p.kappa, r / p.beta)?)
}

/// Matérn covariance; half-integer nu in {1/2, 3/2, 5/2} uses the
/// exponential-polynomial closed forms, other nu the Bessel-K definition.
pub fn matern_cov(p: &MaternParams, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("r must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(p.sigma2);
    }
    let t = r / p.alpha;
    let corr = if p.nu == 0.5 {
        (-t).exp()
    } else if p.nu == 1.5 {
        (-t).exp() * (1.0 + t)
    } else if p.nu == 2.5 {
        (-t).exp() * (1.0 + t + t * t / 3.0)
    } else {
        let ln_pref = (1.0 - p.nu) * std::f64::consts::LN_2 - crate::special::ln_gamma(p.nu)
            + p.nu * t.ln();
        ln_pref.exp() * bessel_k(p.nu, t)
    };
    Ok(p.sigma2 * corr)
}

/// Matérn times the GW taper correlation; support is the taper support.
pub fn tapered_matern_cov(p: &TaperedMaternParams, r: f64) -> Result<f64> {
    let taper = gw_correlation(p.taper.mu, p.taper.kappa, r / p.taper.beta)?;
    if taper == 0.0 {
        return Ok(0.0);
    }
    Ok(matern_cov(&p.matern, r)? * taper)
}
