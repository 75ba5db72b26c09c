//! Small dense symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry checks and semidefinite pivots.
pub const PSD_TOL: f64 = 1e-10;

pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn ensure_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let asym = max_asymmetry(a);
    let scale = a.amax().max(1.0);
    if asym > PSD_TOL * scale {
        return Err(Error::Asymmetric(asym));
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    ensure_symmetric(a)?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(SymmetricEigen::new(a.clone()).eigenvalues.max())
}

/// `(A + A^T) / 2` with negative eigenvalues clipped to zero.
pub fn symmetrize_clip(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.min() >= 0.0 {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Lower-triangular `L` with `L L^T = A` for a symmetric positive
/// semidefinite `A`.
///
/// Pivots in `[-PSD_TOL * scale, PSD_TOL * scale]` are treated as exact zeros
/// and their column is dropped, which is what a jitter of at most
/// `PSD_TOL` on the diagonal would buy while keeping degenerate (zero)
/// covariances exactly degenerate. More negative pivots are rejected.
pub fn psd_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_symmetric(a)?;
    let n = a.nrows();
    let tol = PSD_TOL * a.diagonal().amax().max(1.0);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot < -tol {
            return Err(Error::NotPositiveSemidefinite(pivot));
        }
        if pivot <= tol {
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}
