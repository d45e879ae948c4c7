//! Kernel-approximated UKF that learns unknown dynamics, observation maps and
//! noise covariances online.

mod filter;
mod kernel;
mod params;

pub use filter::{
    dictionary_update, rkhs_expectations, rkhs_init, rkhs_predict, rkhs_step, rkhs_update, RkhsSettings,
    RkhsUkfState,
};
pub use kernel::{feature_map, Dictionary, DictionaryChange, DictionaryPolicy, KernelSpec};
pub use params::{
    rkhs_param_update, Expectations, NormBounds, ObservationMoments, RkhsParameterEstimate, COVARIANCE_FLOOR,
    GRAM_RIDGE, GRAM_SEED,
};
