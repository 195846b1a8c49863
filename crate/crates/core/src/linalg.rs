//! Dense symmetric helpers shared by the phase-space routines.
//!
//! Everything here works on small real matrices (2N x 2N with N <= 32) and
//! computes matrix functions through symmetric eigendecompositions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
pub(crate) fn sym_eig(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub(crate) fn min_eig(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_abs_eig(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eig_hermitian(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `U f(Λ) Uᵀ` for symmetric `m = U Λ Uᵀ`.
pub(crate) fn apply_sym(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, vectors) = sym_eig(m);
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * f(values[j])
    });
    symmetrize(&(scaled * vectors.transpose()))
}

pub(crate) fn require_spd(m: &DMatrix<f64>) -> Result<()> {
    if m.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { min_eig: min_eig(m) });
    }
    let lo = min_eig(m);
    if lo <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: lo });
    }
    Ok(())
}

/// Real power `m^t` of a symmetric positive definite matrix.
pub(crate) fn powm_spd(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eig(m);
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig: values[0] });
    }
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * values[j].powf(t)
    });
    Ok(symmetrize(&(scaled * vectors.transpose())))
}

pub(crate) fn sqrtm_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    powm_spd(m, 0.5)
}

/// `ln det m` through a Cholesky factor; `None` when `m` is not positive definite.
pub(crate) fn logdet_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = symmetrize(m).cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Inverse of a symmetric positive definite matrix and its 2-norm condition number.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let sym = symmetrize(m);
    let chol = sym
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&sym) })?;
    let eigs = sym.symmetric_eigenvalues();
    let lo = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigs.iter().copied().fold(0.0_f64, f64::max);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok((symmetrize(&chol.inverse()), cond))
}

/// Inverse of a symmetric (possibly indefinite) matrix via its eigendecomposition.
pub(crate) fn sym_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let (values, _) = sym_eig(m);
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let smallest = values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if scale == 0.0 || smallest <= scale * 1e-15 {
        return Err(Error::Singular(what));
    }
    Ok(apply_sym(m, |x| 1.0 / x))
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
