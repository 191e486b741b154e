//! Small dense linear-algebra helpers shared by the likelihood, optimizer and
//! stability code. Everything works on `nalgebra` dynamic matrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry accepted for matrices that must be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Validates symmetry and positive definiteness, returning the Cholesky factor.
pub fn cholesky_spd(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!("{what} has non-finite entries")));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotPositiveDefinite(format!("{what} is not symmetric (max asymmetry {asym:e})")));
    }
    Cholesky::new(symmetrize(m)).ok_or_else(|| Error::NotPositiveDefinite(format!("{what} has a non-positive pivot")))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn log_det_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let d = DMatrix::from_diagonal(&vals.map(f));
    symmetrize(&(&vecs * d * vecs.transpose()))
}

/// Symmetric positive definite square root.
pub fn spd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    sym_fn(m, f64::sqrt)
}

/// Ratio of largest to smallest eigenvalue of an SPD matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(m);
    let lo = vals[0];
    let hi = vals[vals.len() - 1];
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Spectral condition number of a general square matrix.
pub fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Column-major vectorization, the `vec` operator.
pub fn vec_of(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

/// Orthonormal basis (Frobenius inner product) of the traceless `n x n` matrices.
///
/// Off-diagonal units `E_ij` come first in row-major order, followed by the
/// normalized diagonal directions `(E_11 + .. + E_kk - k E_{k+1,k+1}) / sqrt(k(k+1))`.
pub fn traceless_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                basis.push(e);
            }
        }
    }
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        let mut e = DMatrix::zeros(n, n);
        for i in 0..k {
            e[(i, i)] = 1.0 / norm;
        }
        e[(k, k)] = -(k as f64) / norm;
        basis.push(e);
    }
    basis
}

/// Orthonormal basis of the right nullspace of `a`, using singular values
/// below `rel_tol * sigma_max` as zero.
pub fn nullspace(a: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    // Pad with zero rows so the thin SVD exposes a full right basis.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max.max(1.0);
    svd.singular_values.iter().enumerate().filter(|(_, s)| **s <= cutoff).map(|(i, _)| v_t.row(i).transpose()).collect()
}

pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Rescales `b` so that `det(b) = 1`, flipping the first row first when the
/// determinant is negative. Returns `None` for singular input.
pub fn normalize_det(b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = b.nrows();
    let mut out = b.clone();
    let mut det = out.determinant();
    if !det.is_finite() || det == 0.0 {
        return None;
    }
    if det < 0.0 {
        out.row_mut(0).neg_mut();
        det = -det;
    }
    Some(out * det.powf(-1.0 / n as f64))
}
