// Copyright 2026 The amfm-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense linear-algebra helpers with a fixed ordering and sign convention,
//! so that repeated calls give bitwise-identical results.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Components smaller than this fraction of the vector's max-norm are
/// skipped when choosing the sign of an eigenvector.
const SIGN_SIGNIFICANCE: f64 = 1e-10;

/// Flips `v` so that its first significant component is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(&first) = v.iter().find(|x| x.abs() > SIGN_SIGNIFICANCE * scale) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending
/// order. Eigenvectors are the columns of the returned matrix, each with
/// [`canonical_sign`] applied.
pub fn symmetric_eigen_ascending(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        canonical_sign(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Right singular structure of a (typically wide) matrix.
#[derive(Debug, Clone)]
pub struct RowSpace {
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, matching `singular_values`.
    pub vectors: DMatrix<f64>,
}

/// Thin SVD of `m` keeping only the right singular vectors.
///
/// Householder QR of `mᵀ` reduces `m` to a small square factor, whose
/// singular vectors come from one-sided Jacobi rotations. Each returned
/// vector then satisfies `‖m v‖ = σ` to roundoff, even for singular values
/// far below `ε σ_max`.
pub fn row_space(m: &DMatrix<f64>) -> RowSpace {
    let ncols = m.ncols();
    if m.nrows() == 0 || ncols == 0 {
        return RowSpace {
            singular_values: Vec::new(),
            vectors: DMatrix::zeros(ncols, 0),
        };
    }
    // m = rᵀ qᵀ with q orthonormal.
    let qr = m.transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let (sigma, w) = one_sided_jacobi(r.transpose());
    let basis = q * w;
    let k = sigma.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let mut vectors = DMatrix::zeros(ncols, k);
    for (col, &i) in order.iter().enumerate() {
        let mut v = basis.column(i).into_owned();
        canonical_sign(&mut v);
        vectors.set_column(col, &v);
    }
    RowSpace {
        singular_values: order.iter().map(|&i| sigma[i]).collect(),
        vectors,
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Hestenes one-sided Jacobi SVD of `a`. Returns the column norms of the
/// rotated `a` and the accumulated rotation, whose columns are the right
/// singular vectors.
fn one_sided_jacobi(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (rows, n) = a.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    ((0..n).map(|j| a.column(j).norm()).collect(), v)
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `v`, whose columns must be orthonormal. Householder reflections give a
/// complement that is orthogonal to `v` to machine precision regardless of
/// how the columns of `v` were obtained.
pub fn orthogonal_complement(v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let r = v.ncols().min(n);
    let mut a = v.columns(0, r).into_owned();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(r);

    for j in 0..r {
        let x = a.view((j, j), (n - j, 1)).column(0).into_owned();
        let norm = x.norm();
        let mut w = x;
        let alpha = if w[0] >= 0.0 { -norm } else { norm };
        w[0] -= alpha;
        let wn = w.norm();
        if wn > 0.0 {
            w /= wn;
            // a[j.., j..] -= 2 w (wᵀ a[j.., j..])
            let mut block = a.view_mut((j, j), (n - j, r - j));
            let proj = block.tr_mul(&w);
            block.ger(-2.0, &w, &proj, 1.0);
        }
        reflectors.push(w);
    }

    let mut y = DMatrix::zeros(n, n - r);
    for k in 0..n - r {
        y[(r + k, k)] = 1.0;
    }
    for (j, w) in reflectors.iter().enumerate().rev() {
        if w.norm_squared() == 0.0 {
            continue;
        }
        let mut block = y.view_mut((j, 0), (n - j, n - r));
        let proj = block.tr_mul(w);
        block.ger(-2.0, w, &proj, 1.0);
    }
    y
}

/// Largest deviation of `bᵀb` from the identity.
pub fn orthonormality_defect(b: &DMatrix<f64>) -> f64 {
    let g = b.tr_mul(b);
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// `(m + mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
