//! Outliers of spiked deformed Wigner matrices.
//!
//! The model is `M_N = W_N/√N + A_N` with `W_N` a complex Wigner matrix whose
//! entries follow a symmetric law `μ` of variance `σ²`, and
//! `A_N = diag(θ, A_{N−1})` a deterministic perturbation whose spectrum
//! approaches a measure `ν`. A spike `θ` far enough from `supp ν` creates an
//! outlier of `M_N`; this crate computes the limiting location, the squared
//! overlap of the outlier eigenvector with `e₁`, and the non-universal
//! Gaussian fluctuation laws of both, and checks them by simulation.
//!
//! ```
//! use spiked_wigner::{measures::{EntryLaw, SpectralMeasure}, spike};
//!
//! let nu = SpectralMeasure::point_mass(0.0);
//! let p = spike::predict(&nu, 2.0, &EntryLaw::gaussian(1.0)).unwrap();
//! assert!((p.rho - 2.5).abs() < 1e-12);
//! assert!((p.var_z - 39.0 / 128.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod experiments;
pub mod freeconv;
pub mod hsquad;
pub mod measures;
mod quadrature;
pub mod rmt;
pub mod spike;
pub mod stats;

pub mod cli;

pub use error::{Error, Result};
