//! Direction-based Gibbs and Metropolis–Hastings samplers.
//!
//! Moves are of the form `x + r·e`: a direction `e` is drawn from a
//! [`DirectionLaw`], then the step `r` either from the exact line
//! conditional (normal and truncated normal targets) or from a local normal
//! approximation with a Metropolis–Hastings correction.

pub mod diagnostics;
pub mod directions;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod targets;

pub use diagnostics::{acceptance_rate, iat, iat_report, ChainTrace, IatReport, RunMeta};
pub use directions::{DirectionDraw, DirectionLaw, PreparedLaw, UnitDirection};
pub use error::{Error, Result};
pub use kernels::{run_gibbs_gaussian, run_gibbs_truncated, run_mh, ChainState, StepOutcome};
pub use linalg::{CholeskyFactor, EigenDecomposition, Matrix, OrthonormalMatrix, SymMatrix};
pub use targets::{
    GaussianTarget, SkewNormalLogisticTarget, TargetDensity, TruncatedGaussianTarget,
};
