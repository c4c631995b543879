//! Spectral-Galerkin simulation of stochastic damped wave equations
//! constrained to the unit sphere of `L²(0,1)`, their small-mass parabolic
//! limit, and the diagnostics used to verify both.

pub mod config;
pub mod diffusion;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod limit;
pub mod noise;
pub mod spectral;
pub mod stats;
pub mod verify;
pub mod wave;

pub use config::{load_config, write_config, SimConfig};
pub use diffusion::{g_scale, DiffusionModel, LambdaProfile};
pub use error::{Error, Result};
pub use geometry::{
    crucial_identity_residual, energy_psi, phi_functional, renormalize_state, tangent_project,
    ManifoldTolerances,
};
pub use harness::{l4_h1_distance, small_mass_sweep, ConvergenceReport, MonitorRecord, SweepConfig};
pub use limit::{
    discriminator_experiment, limit_step, simulate_limit, DiscriminatorReport, DriftKind,
    LimitParams,
};
pub use noise::{wiener_increments, IncrementTable, NoiseKind, NoiseModel};
pub use spectral::{
    inner, interpolation_check, make_basis, sobolev_norm, SpectralBasis, SpectralField, StateZ,
};
pub use stats::MeanEstimate;
pub use wave::{
    energy_equality_residual, phi_mu_process, remainder_r_mu, simulate_wave, wave_step,
    Projection, Trajectory, WaveParams,
};
