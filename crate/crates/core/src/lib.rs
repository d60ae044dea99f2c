//! Uplink multiuser LOS interference at a lens-antenna-array base station.
//!
//! * [`array_model`]: element placement on the focal arc and sinc channel vectors.
//! * [`interference`]: pairwise interference under MRC by two independent
//!   routes, the mainlobe (effective) approximation and pattern analysis.
//! * [`stochastic`]: densities of the spatial frequency and the normalized
//!   separation, and the effective-interferer probability by quadrature,
//!   closed form and Monte Carlo.
//! * [`harness`]: multiuser drop ensembles and approximation quality.
//! * [`cli`]: the `lensint` command-line front end.

pub mod array_model;
pub mod cli;
pub mod error;
pub mod exec;
pub mod harness;
pub mod interference;
pub mod selfcheck;
pub mod stochastic;

pub use array_model::{
    array_response, derive_element_count, element_placements, sinc, ChannelVector,
    ElementPlacement, LensArrayConfig, SincConvention,
};
pub use error::{Error, Result};
pub use exec::Parallelism;
pub use harness::{
    approximation_quality, run_scenario, ApproximationReport, ScenarioConfig, ScenarioResult,
};
pub use interference::{
    effective_interference, first_null, pairwise_interference_closed, pairwise_interference_direct,
    sidelobe_ratio_db, sweep_pattern, user_total_interference, AngularPair, InterferenceSample,
    PatternSeries,
};
pub use stochastic::{
    effective_prob_closed, effective_prob_mc, effective_prob_quadrature, sample_doas,
    spatial_freq_pdf, theta_pdf, ProbEstimate, SectorModel,
};
