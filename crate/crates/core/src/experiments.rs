//! The two simulation studies: sampling distributions of the standardized
//! microergodic statistic, and prediction-efficiency ratio tables with a
//! tapered-Matérn benchmark. Both are driven by declarative JSON configs and
//! emit CSV; reruns with the same seed are bit-identical.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{lambda, CovarianceModel, GwParams, MaternParams, TaperedMaternParams};
use crate::equivalence::equivalent_support;
use crate::error::{Error, Result};
use crate::estimate::{fit_profile, microergodic_stat, sigma2_hat};
use crate::geometry::{perturbed_grid, subsample, LocationSet, Point};
use crate::linalg::{assemble_dense, assemble_sparse, cholesky};
use crate::predict::{mse_assumed, mse_true};
use crate::simulate::simulate_replicate;
use crate::special::normal_cdf;

// ---------------------------------------------------------------------------
// Summaries

/// Type-7 sample quantile (linear interpolation of order statistics).
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl SummaryStats {
    pub fn from_values(values: &mut Vec<f64>) -> SummaryStats {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SummaryStats {
            q05: quantile_type7(values, 0.05),
            q25: quantile_type7(values, 0.25),
            q50: quantile_type7(values, 0.50),
            q75: quantile_type7(values, 0.75),
            q95: quantile_type7(values, 0.95),
            mean,
            variance,
            count: values.len(),
        }
    }
}

/// Reference row for the tables: standard normal quantiles, mean, variance.
pub fn normal_reference() -> [f64; 7] {
    use crate::special::normal_quantile;
    [
        normal_quantile(0.05),
        normal_quantile(0.25),
        0.0,
        normal_quantile(0.75),
        normal_quantile(0.95),
        0.0,
        1.0,
    ]
}

// ---------------------------------------------------------------------------
// Microergodic study

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XVariant {
    /// Joint fit: x is the profile-ML estimate of the support.
    BetaHat,
    Beta0,
    HalfBeta0,
    DoubleBeta0,
}

impl XVariant {
    pub fn label(&self) -> &'static str {
        match self {
            XVariant::BetaHat => "beta_hat",
            XVariant::Beta0 => "beta0",
            XVariant::HalfBeta0 => "half_beta0",
            XVariant::DoubleBeta0 => "double_beta0",
        }
    }

    pub fn from_label(s: &str) -> Result<XVariant> {
        Ok(match s {
            "beta_hat" => XVariant::BetaHat,
            "beta0" => XVariant::Beta0,
            "half_beta0" => XVariant::HalfBeta0,
            "double_beta0" => XVariant::DoubleBeta0,
            other => return Err(Error::Parse(format!("unknown x variant '{other}'"))),
        })
    }

    fn fixed_x(&self, beta0: f64) -> Option<f64> {
        match self {
            XVariant::BetaHat => None,
            XVariant::Beta0 => Some(beta0),
            XVariant::HalfBeta0 => Some(0.5 * beta0),
            XVariant::DoubleBeta0 => Some(2.0 * beta0),
        }
    }
}

fn default_grid_increment() -> f64 {
    0.03
}
fn default_grid_jitter() -> f64 {
    0.01
}
fn default_interval_factor() -> f64 {
    15.0
}
fn default_interval_floor() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicroergodicStudyConfig {
    pub beta0: f64,
    pub kappas: Vec<f64>,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub sigma0sq: f64,
    /// mu = lambda(2, kappa) + mu_offset for every cell.
    pub mu_offset: f64,
    pub x_variants: Vec<XVariant>,
    pub seed: u64,
    #[serde(default = "default_grid_increment")]
    pub grid_increment: f64,
    #[serde(default = "default_grid_jitter")]
    pub grid_jitter: f64,
    /// Profile search interval is [interval_floor, interval_factor * beta0].
    #[serde(default = "default_interval_factor")]
    pub interval_factor: f64,
    #[serde(default = "default_interval_floor")]
    pub interval_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroergodicRow {
    pub kappa: f64,
    pub n: usize,
    pub variant: XVariant,
    pub stats: SummaryStats,
    pub failures: usize,
    /// Sorted statistics, kept for the empirical-CDF dump.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroergodicReport {
    pub rows: Vec<MicroergodicRow>,
}

fn derived_seed(base: u64, stream: u64) -> u64 {
    base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_microergodic_study(cfg: &MicroergodicStudyConfig) -> Result<MicroergodicReport> {
    if cfg.replicates == 0 || cfg.kappas.is_empty() || cfg.ns.is_empty() || cfg.x_variants.is_empty()
    {
        return Err(Error::InvalidParameter("empty study configuration".into()));
    }
    let grid = perturbed_grid(cfg.grid_increment, cfg.grid_jitter, cfg.seed)?;
    let interval = (cfg.interval_floor, cfg.interval_factor * cfg.beta0);
    let mut rows = Vec::new();
    let mut cell_id: u64 = 0;
    for &kappa in &cfg.kappas {
        let mu = lambda(2, kappa) + cfg.mu_offset;
        for &n in &cfg.ns {
            cell_id += 1;
            let cell_base = cell_id * 1_000_003;
            // one simulation per replicate, shared by all x variants
            let per_rep: Vec<Result<Vec<f64>>> = (0..cfg.replicates)
                .into_par_iter()
                .map(|j| -> Result<Vec<f64>> {
                    let stream = cell_base + j as u64;
                    let locs = subsample(&grid, n, derived_seed(cfg.seed, stream))?;
                    let model = CovarianceModel::Gw(GwParams::new(
                        mu,
                        kappa,
                        cfg.beta0,
                        cfg.sigma0sq,
                        2,
                    )?);
                    let factor = cholesky(&assemble_dense(&model, &locs, false)?)?;
                    let z = simulate_replicate(&factor, cfg.seed, stream)?;
                    cfg.x_variants
                        .iter()
                        .map(|variant| {
                            let (s2, x) = match variant.fixed_x(cfg.beta0) {
                                Some(x) => (sigma2_hat(&z, &locs, mu, kappa, x)?, x),
                                None => {
                                    let fit =
                                        fit_profile(&z, &locs, mu, kappa, interval, 1e-6)?;
                                    (fit.sigma2_hat, fit.beta_hat)
                                }
                            };
                            Ok(microergodic_stat(s2, x, cfg.sigma0sq, cfg.beta0, kappa, n).value)
                        })
                        .collect()
                })
                .collect();
            let failures = per_rep.iter().filter(|r| r.is_err()).count();
            if failures * 100 > cfg.replicates {
                return Err(Error::InvalidParameter(format!(
                    "cell (kappa = {kappa}, n = {n}): {failures}/{} replicates failed",
                    cfg.replicates
                )));
            }
            for (vi, &variant) in cfg.x_variants.iter().enumerate() {
                let mut values: Vec<f64> = per_rep
                    .iter()
                    .filter_map(|r| r.as_ref().ok().map(|v| v[vi]))
                    .collect();
                let stats = SummaryStats::from_values(&mut values);
                rows.push(MicroergodicRow { kappa, n, variant, stats, failures, values });
            }
        }
    }
    Ok(MicroergodicReport { rows })
}

// ---------------------------------------------------------------------------
// Ratio study

/// One Matérn smoothness with its practical-range settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioFamily {
    pub nu: f64,
    pub ys: Vec<f64>,
}

fn default_prediction_point() -> [f64; 2] {
    [0.26, 0.48]
}
fn default_multipliers() -> Vec<f64> {
    vec![1.0, 0.5, 2.0]
}
fn default_mu_offset() -> f64 {
    1.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioStudyConfig {
    pub families: Vec<RatioFamily>,
    pub ns: Vec<usize>,
    pub subsets: usize,
    pub seed: u64,
    #[serde(default = "default_prediction_point")]
    pub prediction_point: [f64; 2],
    #[serde(default = "default_mu_offset")]
    pub mu_offset: f64,
    #[serde(default = "default_multipliers")]
    pub support_multipliers: Vec<f64>,
    #[serde(default = "default_grid_increment")]
    pub grid_increment: f64,
    #[serde(default = "default_grid_jitter")]
    pub grid_jitter: f64,
}

/// Averaged ratios for one (nu, y, n, multiplier) cell; the nonzero
/// percentage is measured at the unscaled support beta1*.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub nu: f64,
    pub y: f64,
    pub n: usize,
    pub beta1_star: f64,
    pub multiplier: f64,
    pub u1: f64,
    pub u1_taper: f64,
    pub u2: f64,
    pub u2_taper: f64,
    pub pct_nonzero: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub rows: Vec<RatioRow>,
}

/// c_nu with M_{nu,1,1}(c) = 0.05 by bisection on [1e-6, 50].
pub fn practical_range_c(nu: f64) -> Result<f64> {
    let p = MaternParams::new(nu, 1.0, 1.0, 2)?;
    let f = |c: f64| crate::covariance::matern_cov(&p, c).map(|v| v - 0.05);
    let (mut lo, mut hi) = (1e-6, 50.0);
    if f(lo)? < 0.0 || f(hi)? > 0.0 {
        return Err(Error::NoFeasiblePoint);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Taper shape used alongside each Matérn smoothness.
pub fn taper_shape(nu: f64) -> Result<(f64, f64)> {
    if nu == 0.5 {
        Ok((2.0, 0.0))
    } else if nu == 1.0 {
        Ok((3.0, 1.0))
    } else if nu == 1.5 {
        Ok((4.0, 2.0))
    } else {
        Err(Error::InvalidParameter(format!("no taper choice tabulated for nu = {nu}")))
    }
}

struct SubsetRatios {
    // per multiplier: (u1, u1_taper, u2, u2_taper)
    per_mult: Vec<(f64, f64, f64, f64)>,
    pct_nonzero: f64,
}

#[allow(clippy::too_many_arguments)]
fn ratios_for_subset(
    locs: &LocationSet,
    s0: &Point,
    truth: &CovarianceModel,
    mu: f64,
    kappa: f64,
    beta1_star: f64,
    taper_mu_kappa: (f64, f64),
    multipliers: &[f64],
) -> Result<SubsetRatios> {
    let denom_opt = mse_true(locs, s0, truth, truth)?;
    if denom_opt == 0.0 {
        return Err(Error::DegenerateData);
    }
    let matern = match truth {
        CovarianceModel::Matern(p) => p.clone(),
        _ => return Err(Error::InvalidModel("ratio study requires a Matérn truth".into())),
    };
    let mut per_mult = Vec::with_capacity(multipliers.len());
    for &x in multipliers {
        let support = x * beta1_star;
        let gw = CovarianceModel::Gw(GwParams::new(mu, kappa, support, 1.0, 2)?);
        let taper = CovarianceModel::TaperedMatern(TaperedMaternParams::new(
            matern.clone(),
            GwParams::new(taper_mu_kappa.0, taper_mu_kappa.1, support, 1.0, 2)?,
        )?);
        let d_gw = mse_true(locs, s0, truth, &gw)?;
        let d_tp = mse_true(locs, s0, truth, &taper)?;
        if d_gw == 0.0 || d_tp == 0.0 {
            return Err(Error::DegenerateData);
        }
        let u1 = d_gw / denom_opt;
        let u1t = d_tp / denom_opt;
        let u2 = mse_assumed(locs, s0, &gw)? / d_gw;
        let u2t = mse_assumed(locs, s0, &taper)? / d_tp;
        per_mult.push((u1, u1t, u2, u2t));
    }
    let pattern = CovarianceModel::Gw(GwParams::new(mu, kappa, beta1_star, 1.0, 2)?);
    let pct_nonzero = 100.0 * assemble_sparse(&pattern, locs, true)?.nonzero_fraction();
    Ok(SubsetRatios { per_mult, pct_nonzero })
}

pub fn run_ratio_study(cfg: &RatioStudyConfig) -> Result<RatioReport> {
    if cfg.subsets == 0 || cfg.families.is_empty() || cfg.ns.is_empty() {
        return Err(Error::InvalidParameter("empty study configuration".into()));
    }
    let grid = perturbed_grid(cfg.grid_increment, cfg.grid_jitter, cfg.seed)?;
    let s0 = Point::new(cfg.prediction_point.to_vec());
    let mut rows = Vec::new();
    let mut cell_id: u64 = 0;
    for family in &cfg.families {
        let nu = family.nu;
        let kappa = nu - 0.5;
        let mu = lambda(2, kappa) + cfg.mu_offset;
        let c_nu = practical_range_c(nu)?;
        let taper_mk = taper_shape(nu)?;
        for &y in &family.ys {
            let alpha = y / c_nu;
            let matern = MaternParams::new(nu, alpha, 1.0, 2)?;
            let beta1_star = equivalent_support(&matern, kappa, mu, 1.0)?;
            let truth = CovarianceModel::Matern(matern.clone());
            for &n in &cfg.ns {
                cell_id += 1;
                let cell_base = cell_id * 1_000_003;
                let per_subset: Vec<Result<SubsetRatios>> = (0..cfg.subsets)
                    .into_par_iter()
                    .map(|j| {
                        let locs =
                            subsample(&grid, n, derived_seed(cfg.seed, cell_base + j as u64))?;
                        ratios_for_subset(
                            &locs,
                            &s0,
                            &truth,
                            mu,
                            kappa,
                            beta1_star,
                            taper_mk,
                            &cfg.support_multipliers,
                        )
                    })
                    .collect();
                let failures = per_subset.iter().filter(|r| r.is_err()).count();
                if failures * 100 > cfg.subsets {
                    return Err(Error::InvalidParameter(format!(
                        "cell (nu = {nu}, y = {y}, n = {n}): {failures}/{} subsets failed",
                        cfg.subsets
                    )));
                }
                let ok: Vec<&SubsetRatios> =
                    per_subset.iter().filter_map(|r| r.as_ref().ok()).collect();
                let count = ok.len();
                let pct = ok.iter().map(|s| s.pct_nonzero).sum::<f64>() / count as f64;
                for (mi, &m) in cfg.support_multipliers.iter().enumerate() {
                    let mean4 = |sel: fn(&(f64, f64, f64, f64)) -> f64| {
                        ok.iter().map(|s| sel(&s.per_mult[mi])).sum::<f64>() / count as f64
                    };
                    rows.push(RatioRow {
                        nu,
                        y,
                        n,
                        beta1_star,
                        multiplier: m,
                        u1: mean4(|t| t.0),
                        u1_taper: mean4(|t| t.1),
                        u2: mean4(|t| t.2),
                        u2_taper: mean4(|t| t.3),
                        pct_nonzero: pct,
                        count,
                    });
                }
            }
        }
    }
    Ok(RatioReport { rows })
}

// ---------------------------------------------------------------------------
// Emission and parsing

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

pub const MICROERGODIC_HEADER: &str =
    "kappa,n,variant,q05,q25,q50,q75,q95,mean,variance,count,failures";

pub fn emit_microergodic_csv<W: Write>(r: &MicroergodicReport, mut w: W) -> Result<()> {
    writeln!(w, "{MICROERGODIC_HEADER}")?;
    for row in &r.rows {
        let s = &row.stats;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(row.kappa),
            row.n,
            row.variant.label(),
            fmt(s.q05),
            fmt(s.q25),
            fmt(s.q50),
            fmt(s.q75),
            fmt(s.q95),
            fmt(s.mean),
            fmt(s.variance),
            s.count,
            row.failures
        )?;
    }
    Ok(())
}

pub fn parse_microergodic_csv<R: BufRead>(r: R) -> Result<MicroergodicReport> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Parse(format!("line {}: expected 12 fields", i + 1)));
        }
        let num =
            |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)));
        rows.push(MicroergodicRow {
            kappa: num(f[0])?,
            n: f[1].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            variant: XVariant::from_label(f[2])?,
            stats: SummaryStats {
                q05: num(f[3])?,
                q25: num(f[4])?,
                q50: num(f[5])?,
                q75: num(f[6])?,
                q95: num(f[7])?,
                mean: num(f[8])?,
                variance: num(f[9])?,
                count: f[10].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            },
            failures: f[11].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            values: Vec::new(),
        });
    }
    Ok(MicroergodicReport { rows })
}

pub const RATIO_HEADER: &str =
    "nu,y,n,beta1_star,multiplier,u1,u1_taper,u2,u2_taper,pct_nonzero,count";

pub fn emit_ratio_csv<W: Write>(r: &RatioReport, mut w: W) -> Result<()> {
    writeln!(w, "{RATIO_HEADER}")?;
    for row in &r.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt(row.nu),
            fmt(row.y),
            row.n,
            fmt(row.beta1_star),
            fmt(row.multiplier),
            fmt(row.u1),
            fmt(row.u1_taper),
            fmt(row.u2),
            fmt(row.u2_taper),
            fmt(row.pct_nonzero),
            row.count
        )?;
    }
    Ok(())
}

pub fn parse_ratio_csv<R: BufRead>(r: R) -> Result<RatioReport> {
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::Parse(format!("line {}: expected 11 fields", i + 1)));
        }
        let num =
            |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)));
        rows.push(RatioRow {
            nu: num(f[0])?,
            y: num(f[1])?,
            n: f[2].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
            beta1_star: num(f[3])?,
            multiplier: num(f[4])?,
            u1: num(f[5])?,
            u1_taper: num(f[6])?,
            u2: num(f[7])?,
            u2_taper: num(f[8])?,
            pct_nonzero: num(f[9])?,
            count: f[10].parse().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?,
        });
    }
    Ok(RatioReport { rows })
}

/// Empirical-CDF dump for one statistic row: sorted value, empirical level,
/// and the standard-normal reference level.
pub fn emit_cdf_csv<W: Write>(row: &MicroergodicRow, mut w: W) -> Result<()> {
    writeln!(w, "value,empirical,normal")?;
    let n = row.values.len();
    for (i, &v) in row.values.iter().enumerate() {
        writeln!(w, "{},{},{}", fmt(v), fmt((i + 1) as f64 / n as f64), fmt(normal_cdf(v)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&v, 0.0), 1.0);
        assert_eq!(quantile_type7(&v, 1.0), 4.0);
        assert_eq!(quantile_type7(&v, 0.5), 2.5);
        assert_relative_eq!(quantile_type7(&v, 0.25), 1.75, epsilon = 1e-15);
        assert_eq!(quantile_type7(&[5.0], 0.3), 5.0);
    }

    #[test]
    fn normal_reference_row() {
        let r = normal_reference();
        let expect = [-1.645, -0.674, 0.0, 0.674, 1.645, 0.0, 1.0];
        for (a, b) in r.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn practical_ranges() {
        assert_relative_eq!(practical_range_c(0.5).unwrap(), 20f64.ln(), epsilon = 1e-8);
        // nu = 1: root of 2 c K_1(2c)... the tabulated value is about 3.99
        let c1 = practical_range_c(1.0).unwrap();
        assert!((c1 - 3.99).abs() < 0.01, "c_1 = {c1}");
        let c15 = practical_range_c(1.5).unwrap();
        assert!((c15 - 4.74).abs() < 0.01, "c_1.5 = {c15}");
    }

    #[test]
    fn taper_shapes() {
        assert_eq!(taper_shape(0.5).unwrap(), (2.0, 0.0));
        assert_eq!(taper_shape(1.0).unwrap(), (3.0, 1.0));
        assert_eq!(taper_shape(1.5).unwrap(), (4.0, 2.0));
        assert!(taper_shape(0.75).is_err());
    }

    fn tiny_micro_cfg() -> MicroergodicStudyConfig {
        MicroergodicStudyConfig {
            beta0: 0.4,
            kappas: vec![0.0],
            ns: vec![40],
            replicates: 8,
            sigma0sq: 1.0,
            mu_offset: 3.0,
            x_variants: vec![XVariant::Beta0, XVariant::HalfBeta0],
            seed: 77,
            grid_increment: 0.03,
            grid_jitter: 0.01,
            interval_factor: 15.0,
            interval_floor: 1e-6,
        }
    }

    #[test]
    fn microergodic_study_runs_and_is_deterministic() {
        let cfg = tiny_micro_cfg();
        let a = run_microergodic_study(&cfg).unwrap();
        let b = run_microergodic_study(&cfg).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert_eq!(a, b);
        for row in &a.rows {
            assert_eq!(row.stats.count, 8);
            assert_eq!(row.failures, 0);
            let s = &row.stats;
            assert!(s.q05 <= s.q25 && s.q25 <= s.q50 && s.q50 <= s.q75 && s.q75 <= s.q95);
        }
        // misspecified half-support shifts the statistic up
        assert!(a.rows[1].stats.mean > a.rows[0].stats.mean);

        // single-replicate degenerate quantiles
        let mut one = cfg.clone();
        one.replicates = 1;
        one.x_variants = vec![XVariant::Beta0];
        let r1 = run_microergodic_study(&one).unwrap();
        let s = &r1.rows[0].stats;
        assert_eq!(s.q05, s.q95);
        assert_eq!(s.count, 1);
    }

    #[test]
    fn microergodic_csv_round_trip() {
        let report = run_microergodic_study(&tiny_micro_cfg()).unwrap();
        let mut buf = Vec::new();
        emit_microergodic_csv(&report, &mut buf).unwrap();
        let parsed = parse_microergodic_csv(std::io::Cursor::new(&buf)).unwrap();
        let mut buf2 = Vec::new();
        emit_microergodic_csv(&parsed, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(parsed.rows.len(), report.rows.len());
        for (p, r) in parsed.rows.iter().zip(&report.rows) {
            assert_eq!(p.stats, r.stats);
        }
        // empty report emits only the header
        let empty = MicroergodicReport { rows: vec![] };
        let mut b = Vec::new();
        emit_microergodic_csv(&empty, &mut b).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), format!("{MICROERGODIC_HEADER}\n"));
    }

    #[test]
    fn cdf_dump_columns() {
        let report = run_microergodic_study(&tiny_micro_cfg()).unwrap();
        let mut buf = Vec::new();
        emit_cdf_csv(&report.rows[0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "value,empirical,normal");
        assert_eq!(lines.len(), 1 + report.rows[0].values.len());
        let last: Vec<f64> =
            lines.last().unwrap().split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(last[1], 1.0);
    }

    fn tiny_ratio_cfg() -> RatioStudyConfig {
        RatioStudyConfig {
            families: vec![RatioFamily { nu: 0.5, ys: vec![0.1] }],
            ns: vec![30],
            subsets: 6,
            seed: 5,
            prediction_point: [0.26, 0.48],
            mu_offset: 1.5,
            support_multipliers: vec![1.0, 0.5],
            grid_increment: 0.03,
            grid_jitter: 0.01,
        }
    }

    #[test]
    fn ratio_study_runs() {
        let cfg = tiny_ratio_cfg();
        let r = run_ratio_study(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        let full = &r.rows[0];
        assert_eq!(full.multiplier, 1.0);
        // kappa = 0: beta1* = mu * alpha = 3 * 0.1 / ln 20
        assert!((full.beta1_star - 0.1001).abs() < 0.002);
        assert!(full.u1 >= 1.0);
        assert!(full.u1_taper >= 1.0);
        assert!(full.u2 > 0.0 && full.u2_taper > 0.0);
        assert!(full.pct_nonzero > 0.0 && full.pct_nonzero < 100.0);
        // halved support costs prediction efficiency
        assert!(r.rows[1].u1 >= full.u1);
        // determinism
        let r2 = run_ratio_study(&cfg).unwrap();
        assert_eq!(r, r2);
    }

    #[test]
    fn ratio_csv_round_trip() {
        let r = run_ratio_study(&tiny_ratio_cfg()).unwrap();
        let mut buf = Vec::new();
        emit_ratio_csv(&r, &mut buf).unwrap();
        let parsed = parse_ratio_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = tiny_micro_cfg();
        let s = serde_json::to_string(&cfg).unwrap();
        let back: MicroergodicStudyConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.x_variants, cfg.x_variants);
        // defaults fill in when omitted
        let minimal = r#"{
            "beta0": 0.4, "kappas": [0.0], "ns": [50], "replicates": 2,
            "sigma0sq": 1.0, "mu_offset": 3.0, "x_variants": ["beta0"], "seed": 1
        }"#;
        let c: MicroergodicStudyConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(c.grid_increment, 0.03);
        assert_eq!(c.interval_factor, 15.0);
        let rc: RatioStudyConfig = serde_json::from_str(
            r#"{"families":[{"nu":0.5,"ys":[0.1]}],"ns":[50],"subsets":3,"seed":2}"#,
        )
        .unwrap();
        assert_eq!(rc.prediction_point, [0.26, 0.48]);
        assert_eq!(rc.support_multipliers, vec![1.0, 0.5, 2.0]);
    }
}
