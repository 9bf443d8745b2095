//! Simulator for two-photon intensity-correlation experiments on paired
//! asymmetric Mach-Zehnder interferometers.
//!
//! The pipeline splits into a photon-pair source description ([`spectral`]),
//! single-interferometer geometry and phases ([`interferometer`]), the
//! analytic coincidence engine ([`correlation`]), an independent event-based
//! estimator ([`montecarlo`]), config/CSV plumbing ([`sweep_io`]) and the
//! command-line surface ([`cli`]).

pub mod cli;
pub mod correlation;
pub mod interferometer;
pub mod montecarlo;
pub mod spectral;
pub mod sweep_io;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pump jitter is cut off at this many standard deviations, in both the
/// quadrature rule and the Monte Carlo sampler, so the two averages target
/// the same truncated distribution.
pub(crate) const PUMP_JITTER_SIGMA_SPAN: f64 = 4.0;
