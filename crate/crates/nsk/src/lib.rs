//! Resolvent solver for the linearized compressible Navier–Stokes–Korteweg
//! system with surface tension in the half-space ℝ^N_+.
//!
//! The per-mode solution is available in closed form ([`mode`]); an
//! independent collocation solver ([`oracle`]) handles general data and
//! serves as a cross-check. [`verifier`] scans symbol bounds over sectors,
//! [`field`] assembles physical-space solutions by FFT and [`evolution`]
//! inverts the Laplace transform for boundary-forced time evolution.

pub mod cheb;
pub mod error;
pub mod evolution;
pub mod field;
pub mod kernels;
pub mod linalg;
pub mod mode;
pub mod oracle;
pub mod params;
pub mod profile;
pub mod quad;
pub mod report;
pub mod scalar;
pub mod symbols;
pub mod verifier;
pub mod volevich;

pub use error::{NskError, Result};
pub use params::{derive_constants, rescale, sector_sample, DerivedConstants, FluidParams, SamplingSpec, Sector, SectorPoint};
pub use symbols::{eval_roots, eval_symbols, ModeSymbols};
