//! Smeary Fréchet means on spheres.
//!
//! The crate covers the geometry of S^m, a two-component family whose
//! intrinsic sample mean fluctuates at the slow rate `n^(-1/6)` at a critical
//! mass, the analytic population Fréchet function of that family, a Karcher
//! mean solver and the Monte Carlo experiments that measure the decay rates.

pub mod error;
pub mod family;
pub mod frechet;
pub mod harness;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};
pub use family::{alpha_crit, c_m, gamma_m, sphere_volume, SmearyFamily};
pub use frechet::FrechetCurve;
pub use harness::{GridConfig, RateEstimate, SimulationRecord};
pub use solver::{karcher_mean, karcher_mean_cloud, PointCloud, SolverOptions, SolverResult};
pub use sphere::{ChartVector, SpherePoint};
