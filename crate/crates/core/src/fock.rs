//! Truncated Fock-space oracle for single-mode Gaussian states.
//!
//! States are built as `D(α) R(φ) S(r) ρ_th S(r)† R(φ)† D(α)†` in a space of
//! `cutoff + PADDING` levels and then cropped to `cutoff`.
//!
//! Means use the crate-wide convention: `r = √2⟨x̂⟩` for canonical
//! quadratures with `[q̂, p̂] = i`, so that a generaldyne measurement with seed
//! `γ` yields outcomes distributed as `N(r, V + γ)`. The coherent amplitude is
//! therefore `α = (r_q + i r_p)/2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::sym_eig;
use crate::symplectic::{is_pure_cov, PhaseSpaceMatrix};

pub const PADDING: usize = 20;
/// Default largest acceptable `1 − tr ρ` after cropping.
pub const DEFAULT_MAX_DEFICIT: f64 = 1e-6;
/// Eigenvalues of σ below this are dropped from `σ^{-1/2}`.
pub const SIGMA_FLOOR: f64 = 1e-13;

type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub cutoff: usize,
    pub matrix: CMatrix,
    /// `1 − Re tr` for states.
    pub trace_deficit: f64,
}

impl FockOperator {
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.cutoff).map(|n| n as f64 * self.matrix[(n, n)].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(&self.matrix).0[0]
    }
}

/// Truncated annihilation operator, `⟨n−1|a|n⟩ = √n`.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Single-mode Gaussian state parameters: covariance
/// `a·R(φ) diag(e^{2r}, e^{-2r}) R(φ)ᵀ` and quadrature mean `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleModeSpec {
    pub thermal: f64,
    pub log_squeeze: f64,
    pub angle: f64,
    pub mean: [f64; 2],
}

impl SingleModeSpec {
    /// Standard-form squeezed thermal state `a·diag(μ, 1/μ)`.
    pub fn standard(a: f64, mu: f64) -> Self {
        Self { thermal: a, log_squeeze: 0.5 * mu.ln(), angle: 0.0, mean: [0.0, 0.0] }
    }

    pub fn thermal(a: f64) -> Self {
        Self::standard(a, 1.0)
    }

    pub fn from_moments(mean: &DVector<f64>, cov: &PhaseSpaceMatrix) -> Result<Self> {
        if cov.modes() != 1 {
            return Err(Error::MultiMode(cov.modes()));
        }
        if mean.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: mean.len() });
        }
        let (values, vectors) = sym_eig(cov.as_matrix());
        if values[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eig: values[0] });
        }
        let a = (values[0] * values[1]).sqrt();
        if a < 1.0 - 1e-9 {
            return Err(Error::NotBonaFide { min_eig: a - 1.0 });
        }
        Ok(Self {
            thermal: a.max(1.0),
            log_squeeze: 0.5 * (values[1] / a).ln(),
            angle: vectors[(1, 1)].atan2(vectors[(0, 1)]),
            mean: [mean[0], mean[1]],
        })
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let mu = (2.0 * self.log_squeeze).exp();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![mu, 1.0 / mu]));
        &r * d * r.transpose() * self.thermal
    }

    /// `D(α) R(φ) S(r)` on `dim` levels.
    fn unitary(&self, dim: usize) -> CMatrix {
        let a = annihilation(dim);
        let ad = a.adjoint();
        let half_r = Complex64::new(0.5 * self.log_squeeze, 0.0);
        let squeeze = ((&ad * &ad - &a * &a) * half_r).exp();
        let rotation = CMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
            Complex64::from_polar(1.0, self.angle * n as f64)
        }));
        let alpha = Complex64::new(self.mean[0], self.mean[1]) / 2.0;
        let unitary = rotation * squeeze;
        if alpha.norm() == 0.0 {
            return unitary;
        }
        let displacement = (&ad * alpha - &a * alpha.conj()).exp();
        displacement * unitary
    }
}

fn crop(m: &CMatrix, cutoff: usize) -> CMatrix {
    m.view((0, 0), (cutoff, cutoff)).into_owned()
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigenvalues ascending with matching eigenvector columns.
fn hermitian_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Density matrix at `cutoff`, rejected when more than
/// [`DEFAULT_MAX_DEFICIT`] of the trace is lost.
pub fn gaussian_state_fock(spec: &SingleModeSpec, cutoff: usize) -> Result<FockOperator> {
    gaussian_state_fock_with(spec, cutoff, Some(DEFAULT_MAX_DEFICIT))
}

pub fn gaussian_state_fock_with(spec: &SingleModeSpec, cutoff: usize, max_deficit: Option<f64>) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff} must be at least 2")));
    }
    if !(spec.thermal.is_finite() && spec.thermal >= 1.0) {
        return Err(Error::InvalidParameter(format!("thermal scale {} must be >= 1", spec.thermal)));
    }
    let dim = cutoff + PADDING;
    let x = (spec.thermal - 1.0) / (spec.thermal + 1.0);
    let thermal = CMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
        Complex64::new((1.0 - x) * x.powi(n as i32), 0.0)
    }));
    let u = spec.unitary(dim);
    let full = &u * thermal * u.adjoint();
    let matrix = hermitize(&crop(&full, cutoff));
    let trace_deficit = 1.0 - matrix.trace().re;
    if let Some(threshold) = max_deficit {
        if trace_deficit > threshold {
            return Err(Error::TraceDeficit { deficit: trace_deficit, threshold });
        }
    }
    Ok(FockOperator { cutoff, matrix, trace_deficit })
}

/// Mean `√2(⟨q̂⟩, ⟨p̂⟩)` and covariance (vacuum = identity) of a truncated
/// state.
pub fn quadrature_moments(state: &FockOperator) -> (DVector<f64>, DMatrix<f64>) {
    let a = annihilation(state.cutoff);
    let ad = a.adjoint();
    let s2 = std::f64::consts::SQRT_2;
    let q = (&a + &ad).map(|z| z / s2);
    let p = (&a - &ad).map(|z| z / Complex64::new(0.0, s2));
    let ev = |op: &CMatrix| (&state.matrix * op).trace().re;
    let (mq, mp) = (ev(&q), ev(&p));
    let qq = ev(&(&q * &q)) - mq * mq;
    let pp = ev(&(&p * &p)) - mp * mp;
    let qp = 0.5 * ev(&(&q * &p + &p * &q)) - mq * mp;
    let cov = DMatrix::from_row_slice(2, 2, &[2.0 * qq, 2.0 * qp, 2.0 * qp, 2.0 * pp]);
    (DVector::from_vec(vec![s2 * mq, s2 * mp]), cov)
}

/// Compressed likelihood operator `D^{-1/2} Uₖ† ρ Uₖ D^{-1/2}` on the
/// eigenvectors `Uₖ` of σ above the floor.
struct Whitened {
    t: CMatrix,
    basis: CMatrix,
    sqrt_d: Vec<f64>,
    floored: usize,
}

fn whiten(rho: &FockOperator, sigma: &FockOperator, floor: f64) -> Result<Whitened> {
    if rho.cutoff != sigma.cutoff {
        return Err(Error::DimensionMismatch { expected: sigma.cutoff, found: rho.cutoff });
    }
    let (values, vectors) = hermitian_eig(&sigma.matrix);
    let kept: Vec<usize> = (0..values.len()).filter(|&i| values[i] > floor).collect();
    if kept.is_empty() {
        return Err(Error::IllConditioned("every eigenvalue of sigma is below the floor".into()));
    }
    let basis = CMatrix::from_fn(vectors.nrows(), kept.len(), |i, j| vectors[(i, kept[j])]);
    let sqrt_d: Vec<f64> = kept.iter().map(|&i| values[i].sqrt()).collect();
    let scale = CMatrix::from_diagonal(&DVector::from_fn(kept.len(), |j, _| Complex64::new(1.0 / sqrt_d[j], 0.0)));
    let t = hermitize(&(&scale * basis.adjoint() * &rho.matrix * &basis * &scale));
    Ok(Whitened { t, basis, sqrt_d, floored: values.len() - kept.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub gap: f64,
    /// Number of σ eigenvalues dropped below the floor.
    pub floored: usize,
}

/// Two largest eigenvalues of `σ^{-1/2} ρ σ^{-1/2}`.
pub fn likelihood_top_eig(rho: &FockOperator, sigma: &FockOperator) -> Result<LikelihoodSpectrum> {
    likelihood_top_eig_with_floor(rho, sigma, SIGMA_FLOOR)
}

/// [`likelihood_top_eig`] with a custom eigenvalue floor for σ.
pub fn likelihood_top_eig_with_floor(rho: &FockOperator, sigma: &FockOperator, floor: f64) -> Result<LikelihoodSpectrum> {
    let w = whiten(rho, sigma, floor)?;
    let (values, _) = hermitian_eig(&w.t);
    let k = values.len();
    let lambda1 = values[k - 1];
    let lambda2 = if k > 1 { values[k - 2] } else { 0.0 };
    Ok(LikelihoodSpectrum { lambda1, lambda2, gap: lambda1 - lambda2, floored: w.floored })
}

/// Truncated pure Gaussian vector with covariance `cov` and mean `mean`.
pub fn pure_gaussian_vector(cov: &PhaseSpaceMatrix, mean: [f64; 2], cutoff: usize) -> Result<DVector<Complex64>> {
    if !is_pure_cov(cov)? {
        return Err(Error::InvalidParameter("seed covariance is not pure".into()));
    }
    let spec = SingleModeSpec::from_moments(&DVector::from_column_slice(&mean), cov)?;
    let spec = SingleModeSpec { thermal: 1.0, ..spec };
    let u = spec.unitary(cutoff + PADDING);
    Ok(u.column(0).rows(0, cutoff).into_owned())
}

/// `⟨ψ|ρ|ψ⟩ / ⟨ψ|σ|ψ⟩` for the pure Gaussian vector `ψ(seed_cov, seed_mean)`.
pub fn projector_ratio(
    rho: &FockOperator,
    sigma: &FockOperator,
    seed_cov: &PhaseSpaceMatrix,
    seed_mean: [f64; 2],
) -> Result<f64> {
    let psi = pure_gaussian_vector(seed_cov, seed_mean, rho.cutoff)?;
    let num = (psi.adjoint() * &rho.matrix * &psi)[(0, 0)].re;
    let den = (psi.adjoint() * &sigma.matrix * &psi)[(0, 0)].re;
    if !(den > 1e-300) {
        return Err(Error::Singular("<psi|sigma|psi>"));
    }
    Ok(num / den)
}

/// Overlap of `σ^{1/2}|ψ⟩` (normalised) with the top eigenvector of the
/// likelihood operator, next to the bound `1 − (λ₁ − r)/(λ₁ − λ₂)` implied by
/// its ratio `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapCheck {
    pub ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub overlap: f64,
    pub bound: f64,
}

/// Returns `None` when the top of the likelihood spectrum is degenerate
/// (`λ₁ − λ₂ < 1e-8`).
pub fn top_vector_overlap(
    rho: &FockOperator,
    sigma: &FockOperator,
    seed_cov: &PhaseSpaceMatrix,
    seed_mean: [f64; 2],
) -> Result<Option<OverlapCheck>> {
    let w = whiten(rho, sigma, SIGMA_FLOOR)?;
    let (values, vectors) = hermitian_eig(&w.t);
    let k = values.len();
    if k < 2 || values[k - 1] - values[k - 2] < 1e-8 {
        return Ok(None);
    }
    let psi = pure_gaussian_vector(seed_cov, seed_mean, rho.cutoff)?;
    let mut phi = w.basis.adjoint() * psi;
    for (j, z) in phi.iter_mut().enumerate() {
        *z *= w.sqrt_d[j];
    }
    let norm = phi.norm();
    if norm == 0.0 {
        return Err(Error::Singular("sigma^{1/2}|psi>"));
    }
    phi /= Complex64::new(norm, 0.0);
    let ratio = (phi.adjoint() * &w.t * &phi)[(0, 0)].re;
    let top = vectors.column(k - 1);
    let overlap = (top.adjoint() * &phi)[(0, 0)].norm_sqr();
    let (lambda1, lambda2) = (values[k - 1], values[k - 2]);
    Ok(Some(OverlapCheck { ratio, lambda1, lambda2, overlap, bound: 1.0 - (lambda1 - ratio) / (lambda1 - lambda2) }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cutoff: usize,
    pub trace_deficit: f64,
    /// Mean photon number of the cropped state.
    pub value: f64,
    /// Change from the previous cutoff.
    pub delta: Option<f64>,
}

/// Builds the state at each cutoff, without a deficit threshold, and tracks
/// its mean photon number.
pub fn convergence_check(spec: &SingleModeSpec, cutoffs: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidRange("cutoffs must be strictly increasing".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cutoffs.len());
    for &cutoff in cutoffs {
        let state = gaussian_state_fock_with(spec, cutoff, None)?;
        let value = state.mean_photon_number();
        let delta = rows.last().map(|prev| value - prev.value);
        rows.push(ConvergenceRow { cutoff, trace_deficit: state.trace_deficit, value, delta });
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("cutoff,trace_deficit,value,delta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.cutoff,
            fmt_f64(r.trace_deficit),
            fmt_f64(r.value),
            fmt_f64(r.delta.unwrap_or(f64::NAN))
        ));
    }
    out
}
