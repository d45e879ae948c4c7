//! Sigma-point filters for adversarial state estimation.
//!
//! The crate provides the attacker's forward unscented Kalman filter
//! ([`ukf`]), the defender's inverse filter that estimates the attacker's
//! estimate ([`iukf`]), a kernel-based variant that learns unknown dynamics
//! and observation models online ([`rkhs`]), evaluation metrics
//! ([`metrics`]), benchmark systems ([`scenarios`]) and a seeded Monte-Carlo
//! experiment runner ([`experiment`]).

pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod iukf;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rkhs;
pub mod scenarios;
pub mod sigma;
pub mod ukf;

pub use error::{FilterError, Result};
pub use gaussian::GaussianBelief;
pub use iukf::{iukf_step, iukf_transition, IukfState, IukfTrace};
pub use model::{AdversarialScenario, Dims, NoiseSpec};
pub use sigma::{generate_sigma_points, unscented_transform, SigmaSet};
pub use ukf::{ukf_measurement_update, ukf_step, ukf_time_update, UkfState, UkfStepTrace};
