// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse synthesis for Mølmer–Sørensen gates on trapped-ion chains.
//!
//! The laser drive is a Fourier-sine series `g(t) = Σ A_n sin(2πnt/τ)`.
//! Three protocols pick the amplitude vector:
//!
//! * **exact**: restricts to the null space of the (optionally
//!   drift-stabilized) phase-space closure constraints;
//! * **F-matrix**: restricts to the low-infidelity eigen-subspace of the
//!   infidelity matrix `F`;
//! * **ENS**: restricts to the eigenvectors of `Γ = MᵀM` whose normalized
//!   eigenvalue is below a threshold `Z`.
//!
//! All three finish with the same step: the largest-modulus eigenvector of
//! the entangling kernel projected into the search subspace, scaled so the
//! gate angle is exactly `π/8`.
//!
//! Module map:
//!
//! * [`chain_model`]: transverse normal modes and Lamb-Dicke parameters.
//! * [`spectral_kernels`]: closed-form integrals and the matrices built on
//!   them, plus an adaptive-quadrature oracle.
//! * [`synthesis`]: the three protocols.
//! * [`analysis`]: trajectories, drift robustness, power metrics,
//!   demodulation, sweeps and sideband spectroscopy.

pub mod analysis;
pub mod chain_model;
pub mod constants;
mod error;
pub mod linalg;
pub mod report;
pub mod spectral_kernels;
pub mod synthesis;

pub use error::{Error, Result};

/// Library version recorded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
