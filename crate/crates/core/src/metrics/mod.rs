//! Evaluation metrics: RCRLB, NCI, RMSE and the boundedness probe.

mod accuracy;
mod boundedness;
mod credibility;
mod crlb;
mod jacobian;

pub use accuracy::{rmse_trace, RmseReport};
pub use boundedness::{boundedness_probe, fit_envelope, BoundednessReport, MIN_BOUNDEDNESS_HORIZON, MIN_BOUNDEDNESS_RUNS};
pub use credibility::{nci, sample_mse, CredibilityInputs, NciReport, CREDIBILITY_FLOOR};
pub use crlb::{
    inverse_transition_jacobian, model_jacobians, rcrlb_for_inverse, rcrlb_step, rcrlb_trajectory, FisherInfo,
};
pub use jacobian::{finite_difference_jacobian, FD_RELATIVE_STEP};
