//! Compactly supported generalized Wendland covariance models and their
//! Matérn counterparts: spectral densities, Gaussian-measure equivalence
//! conditions, microergodic maximum-likelihood estimation, kriging under a
//! misspecified model, and the simulation studies built on top of them.

pub mod covariance;
pub mod equivalence;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod predict;
pub mod simulate;
pub mod special;
pub mod spectral;

pub use covariance::{CovarianceModel, GwParams, MaternParams, TaperedMaternParams};
pub use error::{Error, Result};
pub use estimate::{FitResult, MicroergodicStat};
pub use geometry::{LocationSet, Point};
pub use linalg::{CholFactor, SparseSym, SymMatrix};
pub use predict::PredictionResult;
