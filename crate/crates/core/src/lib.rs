//! Gain statistics and excess noise factors of multilayer graded-bandgap and
//! staircase avalanche photodiodes.
//!
//! - [`model`]: closed-form mean gain, mean-square gain and excess noise
//!   factors for generalized layer spectra and Bernoulli staircases.
//! - [`oracle`]: exact enumeration of the total-gain distribution.
//! - [`monte_carlo`]: seeded sampling estimates with standard errors.
//! - [`cascade`]: product-form cascade noise factors and the Friis baseline.

pub mod cascade;
pub mod error;
pub mod model;
pub mod monte_carlo;
pub mod oracle;

pub use error::{ModelError, Result};
pub use model::{
    device_enf, device_mean_gain, device_moments, equal_p_enf, layer_enf, layer_moments,
    noise_spectral_intensity, probability_from_gain, staircase_enf, staircase_mean_gain, step_enf,
    step_internal_noise, DeviceSpec, GainMoments, IonizationSpectrum, NoiseReport, StaircaseSpec,
    ELECTRON_CHARGE,
};
