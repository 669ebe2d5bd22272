// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain configuration: {0}")]
    InvalidChain(String),

    #[error("invalid mode data: {0}")]
    InvalidModes(String),

    #[error("unstable chain: mode {mode} has non-positive squared frequency {eigenvalue:e} rad²/s²")]
    UnstableChain { mode: usize, eigenvalue: f64 },

    #[error("unknown preset '{0}' (expected one of: umd7, chain15)")]
    UnknownPreset(String),

    #[error("basis size {basis_size} too small: need at least {minimum} for {rows} constraint rows")]
    BasisTooSmall {
        basis_size: usize,
        minimum: usize,
        rows: usize,
    },

    #[error("invalid ion pair ({0}, {1}): {2}")]
    InvalidPair(usize, usize, String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("no admissible subspace at threshold Z = {threshold:e}; increase the basis size or Z")]
    NoAdmissibleSubspace { threshold: f64 },

    #[error("degenerate kernel: no entanglement reachable in the {dim}-dimensional subspace")]
    DegenerateKernel { dim: usize },

    #[error("quadrature did not converge: estimate {estimate:e} with error {error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("fit did not converge after {iterations} iterations (best: mode {best_mode_frequency:e} rad/s, rabi {best_rabi:e} rad/s, residual {best_residual:e})")]
    FitNonConvergence {
        iterations: usize,
        best_mode_frequency: f64,
        best_rabi: f64,
        best_residual: f64,
    },

    #[error("invalid sampling grid: {0}")]
    InvalidGrid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidChain(_) => "invalid_chain",
            Error::InvalidModes(_) => "invalid_modes",
            Error::UnstableChain { .. } => "unstable_chain",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::BasisTooSmall { .. } => "basis_too_small",
            Error::InvalidPair(..) => "invalid_pair",
            Error::InvalidRequest(_) => "invalid_request",
            Error::NoAdmissibleSubspace { .. } => "no_admissible_subspace",
            Error::DegenerateKernel { .. } => "degenerate_kernel",
            Error::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
            Error::FitNonConvergence { .. } => "fit_non_convergence",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
