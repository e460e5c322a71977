//! Exact Gaussian field simulation: z = L eps with L the Cholesky factor of
//! the covariance matrix and eps from a counter-based RNG, so replicate j is
//! reproducible (and parallelizable) without generating replicates 0..j-1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::geometry::LocationSet;
use crate::linalg::{assemble_dense, cholesky, CholFactor};

/// i.i.d. N(0,1) draws from substream `stream` of the generator seeded with
/// `seed`; Box-Muller over the ChaCha20 counter stream. Substreams are
/// independent by construction.
pub fn standard_normals(seed: u64, stream: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        // u1 in (0, 1] so the log is finite
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        if out.len() < count {
            out.push(r * theta.sin());
        }
    }
    out
}

/// One simulation request: model, sites, replicate count, and base seed.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: CovarianceModel,
    pub locs: LocationSet,
    pub replicates: usize,
    pub seed: u64,
}

/// One realization from a prefactorized covariance (replicate = substream id).
pub fn simulate_replicate(factor: &CholFactor, seed: u64, replicate: u64) -> Result<Vec<f64>> {
    let eps = standard_normals(seed, replicate, factor.n());
    factor.lower_mul(&eps)
}

/// All requested realizations; the factor is built once and shared.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<Vec<f64>>> {
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    let cov = assemble_dense(&cfg.model, &cfg.locs, false)?;
    let factor = cholesky(&cov)?;
    (0..cfg.replicates)
        .map(|j| simulate_replicate(&factor, cfg.seed, j as u64))
        .collect()
}
