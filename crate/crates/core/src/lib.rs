//! Advection-diffusion corruption engine.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: D2Q9 lattice Boltzmann solver for the advection-diffusion
//!   equation with bounce-back walls.
//! * [`turbulence`]: random-Fourier-mode velocity fields with a power-law
//!   spectrum and a soft magnitude limiter.
//! * [`schedule`]: Fourier/Peclet scheduling and the per-interval lattice plan.
//! * [`corruption`]: forward chains, training noise and training pairs.
//! * [`reverse`]: reverse-chain sampling with pluggable predictors, plus
//!   prior and noise interpolation.
//! * [`analysis`]: radial energy spectra, slope fits and mass audits.
//! * [`io`]: tensor and portable-map formats, configs and run manifests.
//! * [`cli`]: the `ade` command line.

pub mod analysis;
pub mod cli;
pub mod corruption;
pub mod error;
pub mod field;
pub mod io;
pub mod lattice;
pub mod noise;
pub mod reverse;
pub mod schedule;
pub mod turbulence;

pub use error::{AdeError, Result};
pub use field::{FieldStack, ScalarField, VelocityField};

/// Version string recorded in every run manifest.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
