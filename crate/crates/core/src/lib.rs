//! Fitting Bézier simplices to Pareto-front samples by Wasserstein
//! approximate Bayesian computation (WABC).
//!
//! The crate is organised bottom-up:
//!
//! - [`bezier`]: degrees, Bernstein evaluation, uniform simplex sampling and
//!   the push-forward generative model.
//! - [`transport`]: aligned-vector Euclidean distance and the exact
//!   2-Wasserstein distance between equal-size clouds.
//! - [`abc`]: the rejection ABC kernel, the factorized Gaussian prior and the
//!   full WABC fitting loop with prior and threshold updates.
//! - [`aao`]: the deterministic all-at-once least-squares baseline.
//! - [`problems`]: benchmark Pareto-front generators and noise injection.
//! - [`metrics`]: GD, IGD and the rank-sum test.
//! - [`theory`]: toy models with exact posteriors used to measure the
//!   threshold bias and acceptance-rate scaling of WABC.

pub mod aao;
pub mod abc;
pub mod bezier;
pub mod cloud;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod quadrature;
pub mod seed;
pub mod theory;
pub mod transport;

pub use bezier::{BezierModel, ControlPointSet, Degree, SimplexParam};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use seed::SeedStream;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
