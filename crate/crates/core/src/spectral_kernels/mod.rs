// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Spectral coefficients and the three matrices the protocols need: the
//! stabilized closure constraints `M`, the entangling kernel `𝒦` and the
//! infidelity matrix `F`.

mod closed_form;
mod dd;
pub mod quadrature;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_model::ModeData;
use crate::linalg::{orthogonal_complement, row_space};
use crate::{Error, Result};

pub use closed_form::{
    c_derivatives_scaled, c_integral, exp_moment, exp_moments, kernel_entry_unit, kernel_quadratic_form_unit,
    partial_sine_integral, sine_moments,
};

/// `k`-th ω-derivative of `C_np = ∫₀^τ sin(2πnt/τ) e^{iω_p t} dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoefficient {
    pub n: u32,
    pub mode: usize,
    pub order: u32,
    /// Units s^{k+1}.
    pub value: Complex64,
}

pub fn spectral_coefficient(modes: &ModeData, n: u32, mode: usize, tau: f64, order: u32) -> SpectralCoefficient {
    SpectralCoefficient {
        n,
        mode,
        order,
        value: c_integral(n, modes.frequencies[mode], tau, order),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Re,
    Im,
}

/// Which closure condition a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub mode: usize,
    pub order: u32,
    pub part: Part,
}

/// Stabilized phase-space closure conditions, stacked as real rows.
///
/// Row `(p, k, part)` holds `−part(∂^k C_np/∂ω^k)/τ^{k+1}`: each row is
/// divided by its natural scale `τ^{k+1}` so rows of different derivative
/// order are commensurate. Positive row scaling leaves the null space
/// unchanged. The Lamb-Dicke prefactor is dropped, which makes the
/// constraints independent of the ion pair.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub rows: DMatrix<f64>,
    pub labels: Vec<ConstraintRow>,
    pub tau: f64,
    pub order: u32,
}

impl ConstraintMatrix {
    pub fn basis_size(&self) -> usize {
        self.rows.ncols()
    }

    /// Entry in physical units (s^{k+1}).
    pub fn physical_entry(&self, row: usize, col: usize) -> f64 {
        self.rows[(row, col)] * self.tau.powi(self.labels[row].order as i32 + 1)
    }
}

/// Smallest admissible basis size for `mode_count` modes at order `k`.
pub fn minimum_basis_size(mode_count: usize, order: u32) -> usize {
    2 * mode_count * (order as usize + 1) + 1
}

pub fn constraint_matrix(modes: &ModeData, tau: f64, order: u32, basis_size: usize) -> Result<ConstraintMatrix> {
    check_tau(tau)?;
    let nmodes = modes.mode_count();
    let nrows = 2 * nmodes * (order as usize + 1);
    if basis_size <= nrows {
        return Err(Error::BasisTooSmall {
            basis_size,
            minimum: nrows + 1,
            rows: nrows,
        });
    }
    let mut labels = Vec::with_capacity(nrows);
    for k in 0..=order {
        for mode in 0..nmodes {
            labels.push(ConstraintRow { mode, order: k, part: Part::Re });
            labels.push(ConstraintRow { mode, order: k, part: Part::Im });
        }
    }
    // columns[n][p][k]
    let columns: Vec<Vec<Vec<Complex64>>> = (1..=basis_size as u32)
        .into_par_iter()
        .map(|n| {
            modes
                .frequencies
                .iter()
                .map(|&w| c_derivatives_scaled(n, w, tau, order))
                .collect()
        })
        .collect();
    let rows = DMatrix::from_fn(nrows, basis_size, |r, col| {
        let label = labels[r];
        let c = columns[col][label.mode][label.order as usize];
        match label.part {
            Part::Re => -c.re,
            Part::Im => -c.im,
        }
    });
    Ok(ConstraintMatrix {
        rows,
        labels,
        tau,
        order,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRequest(format!("gate time must be positive, got {tau}")))
    }
}

fn check_pair(modes: &ModeData, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidPair(i + 1, j + 1, "ions must differ".into()));
    }
    let w = modes.qubit_window;
    for ion in [i, j] {
        if ion >= modes.ion_count() || !w.contains_ion(ion) {
            return Err(Error::InvalidPair(
                i + 1,
                j + 1,
                format!(
                    "ion {} outside qubit window [{}, {}]",
                    ion + 1,
                    w.first_ion,
                    w.first_ion + w.count - 1
                ),
            ));
        }
    }
    Ok(())
}

/// Entangling kernel `𝒦_nm = Σ_p η_p^i η_p^j ∫₀^τ dt₂ ∫₀^{t₂} dt₁ sin(2πnt₂/τ) sin(2πmt₁/τ) sin(ω_p(t₂−t₁))`.
///
/// Stored unsymmetrized; [`KernelMatrix::symmetric`] is what the gate
/// angle sees. Ions are 0-based.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    pub pair: (usize, usize),
    pub tau: f64,
}

impl KernelMatrix {
    pub fn symmetric(&self) -> DMatrix<f64> {
        crate::linalg::symmetrize(&self.entries)
    }

    /// `χ = Aᵀ𝒦A`.
    pub fn gate_angle(&self, amplitudes: &DVector<f64>) -> f64 {
        amplitudes.dot(&(&self.entries * amplitudes))
    }
}

pub fn kernel_matrix(modes: &ModeData, i: usize, j: usize, tau: f64, basis_size: usize) -> Result<KernelMatrix> {
    check_tau(tau)?;
    check_pair(modes, i, j)?;
    let weights: Vec<(f64, f64)> = modes
        .frequencies
        .iter()
        .enumerate()
        .map(|(p, &w)| (modes.eta[(p, i)] * modes.eta[(p, j)], w * tau))
        .filter(|(weight, _)| *weight != 0.0)
        .collect();
    let scale = tau * tau;
    let rows: Vec<Vec<f64>> = (1..=basis_size as u32)
        .into_par_iter()
        .map(|n| {
            (1..=basis_size as u32)
                .map(|m| {
                    let mut acc = 0.0;
                    for &(weight, theta) in &weights {
                        acc += weight * kernel_entry_unit(n, m, theta);
                    }
                    acc * scale
                })
                .collect()
        })
        .collect();
    Ok(KernelMatrix {
        entries: DMatrix::from_fn(basis_size, basis_size, |r, c| rows[r][c]),
        pair: (i, j),
        tau,
    })
}

/// Infidelity matrix `F_nm = Σ_p [(η_p^i)² + (η_p^j)²] Re(C_np C*_mp)`, so
/// that `(4/5)AᵀFA = (4/5) Σ_p D_p |Σ_n A_n C_np|²`.
///
/// Also keeps the factor `G` with `F = GGᵀ` (two columns per mode: the
/// real and imaginary parts of `√D_p C_·p`), which gives the spectrum of
/// `F` without squaring its condition number.
#[derive(Debug, Clone)]
pub struct InfidelityMatrix {
    pub entries: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    pub pair: (usize, usize),
    pub tau: f64,
}

/// Eigen-decomposition of `F`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct InfidelitySpectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl InfidelityMatrix {
    pub fn quadratic_form(&self, a: &DVector<f64>) -> f64 {
        a.dot(&(&self.entries * a))
    }

    /// `(4/5)AᵀFA` evaluated through the factor as a sum of squares.
    pub fn infidelity(&self, a: &DVector<f64>) -> f64 {
        0.8 * (self.factor.tr_mul(a)).norm_squared()
    }

    pub fn spectrum(&self) -> InfidelitySpectrum {
        let rs = row_space(&self.factor.transpose());
        let complement = orthogonal_complement(&rs.vectors);
        let n = self.entries.nrows();
        let r = rs.vectors.ncols();
        let mut values = vec![0.0; n - r];
        let mut vectors = DMatrix::zeros(n, n);
        vectors.columns_mut(0, n - r).copy_from(&complement);
        for (k, s) in rs.singular_values.iter().enumerate().rev() {
            let col = n - r + (r - 1 - k);
            vectors.set_column(col, &rs.vectors.column(k));
            values.push(s * s);
        }
        InfidelitySpectrum { values, vectors }
    }
}

pub fn infidelity_matrix(modes: &ModeData, i: usize, j: usize, tau: f64, basis_size: usize) -> Result<InfidelityMatrix> {
    check_tau(tau)?;
    check_pair(modes, i, j)?;
    let nmodes = modes.mode_count();
    let coeffs: Vec<Vec<Complex64>> = (1..=basis_size as u32)
        .into_par_iter()
        .map(|n| modes.frequencies.iter().map(|&w| c_integral(n, w, tau, 0)).collect())
        .collect();
    let weight: Vec<f64> = (0..nmodes)
        .map(|p| (modes.eta[(p, i)].powi(2) + modes.eta[(p, j)].powi(2)).sqrt())
        .collect();
    let factor = DMatrix::from_fn(basis_size, 2 * nmodes, |n, col| {
        let p = col / 2;
        let c = coeffs[n][p] * weight[p];
        if col % 2 == 0 {
            c.re
        } else {
            c.im
        }
    });
    let entries = DMatrix::from_fn(basis_size, basis_size, |n, m| {
        let mut acc = 0.0;
        for p in 0..nmodes {
            acc += weight[p] * weight[p] * (coeffs[n][p] * coeffs[m][p].conj()).re;
        }
        acc
    });
    Ok(InfidelityMatrix {
        entries,
        factor,
        pair: (i, j),
        tau,
    })
}
