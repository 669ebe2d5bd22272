// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{canonical_sign, orthogonal_complement, row_space, symmetric_eigen_ascending};
use crate::spectral_kernels::ConstraintMatrix;
use crate::{Error, Result};

/// Relative cutoff on normalized `Γ` eigenvalues below which a direction
/// counts as numerically null.
pub const DEFAULT_NULL_TOL: f64 = 1e-24;

/// Orthonormal basis of the (extended) null space of `M`.
#[derive(Debug, Clone)]
pub struct GammaSubspace {
    /// `N_A × d`, columns ordered by ascending eigenvalue.
    pub basis: DMatrix<f64>,
    /// Normalized eigenvalues `λ/λ_max(Γ)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue of `Γ = MᵀM` (the normalization scale).
    pub scale: f64,
}

impl GammaSubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Spectrum of `Γ = MᵀM`, computed once and thresholded many times.
///
/// `Γ` is never formed: its spectrum is the squared singular spectrum of
/// `M`, and its exact null space is the orthogonal complement of the right
/// singular vectors. Normalized eigenvalues are `σ²/σ_max²`.
#[derive(Debug, Clone)]
pub struct GammaSpectrum {
    /// Right singular vectors, descending singular value.
    row_vectors: DMatrix<f64>,
    /// Normalized eigenvalues matching `row_vectors`, descending.
    normalized: Vec<f64>,
    complement: DMatrix<f64>,
    pub scale: f64,
}

impl GammaSpectrum {
    pub fn new(m: &ConstraintMatrix) -> GammaSpectrum {
        let rs = row_space(&m.rows);
        let smax = rs.singular_values.first().copied().unwrap_or(0.0);
        let normalized = rs
            .singular_values
            .iter()
            .map(|s| if smax > 0.0 { (s / smax).powi(2) } else { 0.0 })
            .collect();
        GammaSpectrum {
            complement: orthogonal_complement(&rs.vectors),
            row_vectors: rs.vectors,
            normalized,
            scale: smax * smax,
        }
    }

    /// Normalized eigenvalues of the row-space directions, descending.
    pub fn row_eigenvalues(&self) -> &[f64] {
        &self.normalized
    }

    /// Number of directions admitted at threshold `max(z, null_tol)`.
    pub fn dim_at(&self, z: f64, null_tol: f64) -> usize {
        let cutoff = z.max(null_tol);
        self.complement.ncols() + self.normalized.iter().filter(|&&l| l <= cutoff).count()
    }

    pub fn subspace(&self, z: f64, null_tol: f64) -> Result<GammaSubspace> {
        if !(z >= 0.0) {
            return Err(Error::InvalidRequest(format!("threshold Z must be non-negative, got {z}")));
        }
        let cutoff = z.max(null_tol);
        let n = self.complement.nrows();
        let included: Vec<usize> = (0..self.normalized.len())
            .rev()
            .filter(|&l| self.normalized[l] <= cutoff)
            .collect();
        let nc = self.complement.ncols();
        let d = nc + included.len();
        if d == 0 {
            return Err(Error::NoAdmissibleSubspace { threshold: z });
        }
        let mut basis = DMatrix::zeros(n, d);
        basis.columns_mut(0, nc).copy_from(&self.complement);
        let mut eigenvalues = vec![0.0; nc];
        for (c, &l) in included.iter().enumerate() {
            basis.set_column(nc + c, &self.row_vectors.column(l));
            eigenvalues.push(self.normalized[l]);
        }
        Ok(GammaSubspace {
            basis,
            eigenvalues,
            scale: self.scale,
        })
    }
}

/// Eigenvectors of `Γ = MᵀM` whose normalized eigenvalue is at most
/// `max(z, null_tol)`, ascending.
pub fn gamma_eigenspace(m: &ConstraintMatrix, z: f64, null_tol: f64) -> Result<GammaSubspace> {
    GammaSpectrum::new(m).subspace(z, null_tol)
}

/// Outcome of the largest-eigenvalue power rule on a subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerOptimum {
    /// Unit coefficients `B̂` in the subspace basis.
    pub coefficients: Vec<f64>,
    /// Eigenvalue of `S = VᵀsymK V` of largest magnitude, signed.
    pub lambda_max: f64,
    pub omega0: f64,
    /// `Â = Ω₀ V B̂`.
    pub amplitudes: Vec<f64>,
}

/// Minimum-power amplitudes reaching `|χ| = π/8` within span(`basis`).
///
/// `kernel` must already be symmetrized.
pub fn power_optimize(basis: &DMatrix<f64>, kernel: &DMatrix<f64>) -> Result<PowerOptimum> {
    let d = basis.ncols();
    if d == 0 {
        return Err(Error::NoAdmissibleSubspace { threshold: f64::NAN });
    }
    let kv = kernel * basis;
    let s = crate::linalg::symmetrize(&basis.tr_mul(&kv));
    let (vals, vecs) = symmetric_eigen_ascending(&s);
    let (lo, hi) = (vals[0], vals[d - 1]);
    // Largest magnitude; an exact tie goes to the positive eigenvalue.
    let idx = if lo.abs() > hi.abs() { 0 } else { d - 1 };
    let lambda = vals[idx];
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::DegenerateKernel { dim: d });
    }
    let mut b: DVector<f64> = vecs.column(idx).into_owned();
    b /= b.norm();
    canonical_sign(&mut b);
    let omega0 = (std::f64::consts::PI / (8.0 * lambda.abs())).sqrt();
    let amplitudes = (basis * &b) * omega0;
    Ok(PowerOptimum {
        coefficients: b.iter().copied().collect(),
        lambda_max: lambda,
        omega0,
        amplitudes: amplitudes.iter().copied().collect(),
    })
}
