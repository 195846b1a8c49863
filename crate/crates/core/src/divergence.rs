//! Unrestricted and Gaussian-measured max-relative entropy between Gaussian
//! states, the likelihood-operator covariances, and classical Gaussian
//! divergences.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{logdet_spd, min_eig, spd_inverse, sqrtm_spd, sym_eig, symmetrize};
use crate::symplectic::{
    arcoth_spd, check_bona_fide, geometric_mean_t, matrix_g, omega, symplectic_eigenvalues,
    PhaseSpaceMatrix, Side,
};

/// A divergence value: finite, or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn value(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn add(self, x: f64) -> Extended {
        match self {
            Extended::Finite(v) => Extended::Finite(v + x),
            Extended::Infinite => Extended::Infinite,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v:.16e}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => serializer.serialize_f64(*v),
            Extended::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// First and second moments of an `N`-mode Gaussian state.
///
/// `cov` is twice the quadrature covariance (vacuum = identity). `mean` is
/// `√2` times the quadrature expectation, the scale on which generaldyne
/// outcomes with seed `γ` are distributed as `N(mean, cov + γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: PhaseSpaceMatrix,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: PhaseSpaceMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch { expected: cov.dim(), found: mean.len() });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite mean entry".into()));
        }
        let bf = check_bona_fide(&cov);
        if !bf.ok {
            return Err(Error::NotBonaFide { min_eig: bf.min_eig });
        }
        Ok(Self { mean, cov })
    }

    pub fn zero_mean(cov: PhaseSpaceMatrix) -> Result<Self> {
        Self::new(DVector::zeros(cov.dim()), cov)
    }

    pub fn modes(&self) -> usize {
        self.cov.modes()
    }
}

/// Covariances attached to the likelihood operator `σ^{-1/2} ρ σ^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodSpec {
    pub v_m: PhaseSpaceMatrix,
    pub v_zeta: PhaseSpaceMatrix,
    pub v_prime: PhaseSpaceMatrix,
}

/// A multivariate normal distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalGaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl ClassicalGaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || mean.len() != cov.nrows() {
            return Err(Error::DimensionMismatch { expected: cov.nrows(), found: mean.len() });
        }
        crate::linalg::require_spd(&cov)?;
        Ok(Self { mean, cov: symmetrize(&cov) })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `V_σ − V_ρ`, required to be strictly positive definite.
pub fn support_difference(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<DMatrix<f64>> {
    if v_rho.dim() != v_sigma.dim() {
        return Err(Error::DimensionMismatch { expected: v_sigma.dim(), found: v_rho.dim() });
    }
    let delta = symmetrize(&(v_sigma.as_matrix() - v_rho.as_matrix()));
    let lo = min_eig(&delta);
    if delta.clone().cholesky().is_none() || lo <= 0.0 {
        return Err(Error::DomainViolation { min_eig: lo });
    }
    Ok(delta)
}

/// `X = G(VΩ) V`, which equals `Sᵀ diag(√(νⱼ² − 1)) S` and is symmetric.
pub(crate) fn g_times(v: &PhaseSpaceMatrix) -> Result<DMatrix<f64>> {
    let g = matrix_g(v, Side::Left)?;
    Ok(symmetrize(&(g * v.as_matrix())))
}

pub(crate) fn require_mixed_reference(v_sigma: &PhaseSpaceMatrix) -> Result<()> {
    let nu = symplectic_eigenvalues(v_sigma)?;
    let smallest = nu.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest <= 1.0 + 1e-12 {
        return Err(Error::PureReference { nu: smallest });
    }
    Ok(())
}

/// `V_M = −V_σ + X_σ (V_σ − V_ρ)^{-1} X_σ`.
pub fn likelihood_cov(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    let delta = support_difference(v_rho, v_sigma)?;
    likelihood_cov_with(v_sigma, &delta)
}

pub(crate) fn likelihood_cov_with(v_sigma: &PhaseSpaceMatrix, delta: &DMatrix<f64>) -> Result<PhaseSpaceMatrix> {
    require_mixed_reference(v_sigma)?;
    let x = g_times(v_sigma)?;
    let (inv, _) = spd_inverse(delta)?;
    PhaseSpaceMatrix::new(symmetrize(&(&x * inv * &x - v_sigma.as_matrix())))
}

/// `V_ζ = V_M # (Ω V_M^{-1} Ωᵀ)`, the covariance of the top eigenvector of
/// the likelihood operator.
pub fn top_eigvec_cov(v_m: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    let (inv, _) = spd_inverse(v_m.as_matrix())?;
    let w = omega(v_m.modes());
    let partner = symmetrize(&(&w * inv * w.transpose()));
    PhaseSpaceMatrix::new(geometric_mean_t(v_m.as_matrix(), &partner, 0.5)?)
}

/// `V′ = V_ρ + X_ρ (V_σ − V_ρ)^{-1} X_ρ`.
pub fn prime_cov(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    let delta = support_difference(v_rho, v_sigma)?;
    prime_cov_with(v_rho, &delta)
}

fn prime_cov_with(v_rho: &PhaseSpaceMatrix, delta: &DMatrix<f64>) -> Result<PhaseSpaceMatrix> {
    let x = g_times(v_rho)?;
    let (inv, _) = spd_inverse(delta)?;
    PhaseSpaceMatrix::new(symmetrize(&(v_rho.as_matrix() + &x * inv * &x)))
}

pub fn likelihood_spec(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<LikelihoodSpec> {
    let delta = support_difference(v_rho, v_sigma)?;
    let v_m = likelihood_cov_with(v_sigma, &delta)?;
    let v_zeta = top_eigvec_cov(&v_m)?;
    let v_prime = prime_cov_with(v_rho, &delta)?;
    Ok(LikelihoodSpec { v_m, v_zeta, v_prime })
}

/// Unrestricted max-relative entropy of the zero-mean pair.
///
/// Means are ignored here; [`displacement_term`] carries their contribution
/// and [`crate::report`] decides how the two are combined.
pub fn dmax_unrestricted(rho: &GaussianState, sigma: &GaussianState) -> Result<Extended> {
    dmax_unrestricted_cov(&rho.cov, &sigma.cov)
}

/// Zero-mean unrestricted max-relative entropy,
/// `Σⱼ ln(ν_σⱼ² − 1) − Σₖ ln(1 + ν′ₖ) − ½ ln det(V_σ − V_ρ)`.
///
/// This is the determinant-ratio/arcoth expression rewritten with
/// `det(V′ + iΩ) = det(V_ρ + iΩ) det(V_σ + iΩ) / det(V_σ − V_ρ)`, which stays
/// finite when ρ is pure.
pub fn dmax_unrestricted_cov(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<Extended> {
    let delta = support_difference(v_rho, v_sigma)?;
    dmax_with_difference(v_rho, v_sigma, &delta)
}

/// Same as [`dmax_unrestricted_cov`] with a caller-supplied `V_σ − V_ρ`, for
/// families where the difference is known more accurately than the
/// subtraction of nearly equal covariances.
pub fn dmax_with_difference(
    v_rho: &PhaseSpaceMatrix,
    v_sigma: &PhaseSpaceMatrix,
    delta: &DMatrix<f64>,
) -> Result<Extended> {
    if delta.clone().cholesky().is_none() {
        return Err(Error::DomainViolation { min_eig: min_eig(delta) });
    }
    let nu_sigma = symplectic_eigenvalues(v_sigma)?;
    if nu_sigma.iter().any(|&n| n <= 1.0) {
        return Ok(Extended::Infinite);
    }
    let v_prime = prime_cov_with(v_rho, delta)?;
    let nu_prime = symplectic_eigenvalues(&v_prime)?;
    let logdet_delta = logdet_spd(delta).ok_or(Error::DomainViolation { min_eig: min_eig(delta) })?;
    let value = nu_sigma.iter().map(|n| ((n - 1.0) * (n + 1.0)).ln()).sum::<f64>()
        - nu_prime.iter().map(|n| n.ln_1p()).sum::<f64>()
        - 0.5 * logdet_delta;
    Ok(Extended::Finite(value))
}

/// The literal form `½ ln[det(V_σ+iΩ)/det(V_ρ+iΩ)] − ½ tr arcoth(√(−V′ΩV′Ω))`.
///
/// Undefined when ρ is pure (both terms diverge); returns an error there.
pub fn dmax_unrestricted_arcoth(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<Extended> {
    let delta = support_difference(v_rho, v_sigma)?;
    let nu_rho = symplectic_eigenvalues(v_rho)?;
    let nu_sigma = symplectic_eigenvalues(v_sigma)?;
    let log_det = |nu: &[f64]| nu.iter().map(|n| ((n - 1.0) * (n + 1.0)).ln()).sum::<f64>();
    let v_prime = prime_cov_with(v_rho, &delta)?;
    let root = sqrtm_spd(v_prime.as_matrix())?;
    let a = &root * omega(v_prime.modes()) * &root;
    let abs_a = crate::linalg::apply_sym(&symmetrize(&(-(&a * &a))), |x| x.max(0.0).sqrt());
    if let Some(&n) = nu_rho.iter().find(|&&n| n <= 1.0 + 1e-12) {
        return Err(Error::ArcothDomain { eig: n });
    }
    let arcoth = arcoth_spd(&abs_a)?;
    Ok(Extended::Finite(0.5 * (log_det(&nu_sigma) - log_det(&nu_rho)) - 0.5 * arcoth.trace()))
}

/// `½ (r_ρ − r_σ)ᵀ (V_σ − V_ρ)^{-1} (r_ρ − r_σ)`.
pub fn displacement_term(rho: &GaussianState, sigma: &GaussianState) -> Result<f64> {
    let delta = support_difference(&rho.cov, &sigma.cov)?;
    quadratic_form(&delta, &(&rho.mean - &sigma.mean))
}

fn quadratic_form(m: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: min_eig(m) })?;
    Ok(0.5 * x.dot(&chol.solve(x)))
}

/// Measured max-relative entropy for the generaldyne measurement with seed
/// covariance `γ`: `½ ln[det(V_σ+γ)/det(V_ρ+γ)]` plus the displacement term.
pub fn measured_dmax_for_seed(rho: &GaussianState, sigma: &GaussianState, gamma: &PhaseSpaceMatrix) -> Result<f64> {
    if gamma.dim() != rho.cov.dim() {
        return Err(Error::DimensionMismatch { expected: rho.cov.dim(), found: gamma.dim() });
    }
    let bf = check_bona_fide(gamma);
    if !bf.ok {
        return Err(Error::NotBonaFide { min_eig: bf.min_eig });
    }
    let shift = displacement_term(rho, sigma)?;
    Ok(seed_objective(rho.cov.as_matrix(), sigma.cov.as_matrix(), gamma.as_matrix())? + shift)
}

/// `½ ln[det(V_σ+γ)/det(V_ρ+γ)]` without validation of `γ`.
pub(crate) fn seed_objective(v_rho: &DMatrix<f64>, v_sigma: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<f64> {
    let num = logdet_spd(&(v_sigma + gamma)).ok_or(Error::Singular("V_sigma + gamma"))?;
    let den = logdet_spd(&(v_rho + gamma)).ok_or(Error::Singular("V_rho + gamma"))?;
    Ok(0.5 * (num - den))
}

fn check_pair(p: &ClassicalGaussian, q: &ClassicalGaussian) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    Ok(())
}

/// `sup_x ln p(x)/q(x)` for normal densities `p = N(a, A)`, `q = N(b, B)`:
/// `½ ln(det B/det A) + ½ (a−b)ᵀ(B−A)^{-1}(a−b)` when `B > A`, else `+∞`.
pub fn classical_gauss_dmax(p: &ClassicalGaussian, q: &ClassicalGaussian) -> Result<Extended> {
    check_pair(p, q)?;
    let diff = symmetrize(&(&q.cov - &p.cov));
    if diff.clone().cholesky().is_none() || min_eig(&diff) <= 0.0 {
        return Ok(Extended::Infinite);
    }
    let la = logdet_spd(&p.cov).ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&p.cov) })?;
    let lb = logdet_spd(&q.cov).ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&q.cov) })?;
    let shift = quadratic_form(&diff, &(&p.mean - &q.mean))?;
    Ok(Extended::Finite(0.5 * (lb - la) + shift))
}

/// Rényi divergence of order `α` between normal densities.
///
/// `α = 1` gives Kullback–Leibler and `α = ∞` the max-divergence. For
/// `1 < α < ∞`, with `Σ_α = αB + (1−α)A`,
/// `D_α = (α/2) δᵀ Σ_α^{-1} δ + ½ ln(det B/det A) − ln(det Σ_α/det B) / (2(α−1))`,
/// and `+∞` when `Σ_α` is not positive definite.
pub fn classical_gauss_renyi(p: &ClassicalGaussian, q: &ClassicalGaussian, alpha: f64) -> Result<Extended> {
    check_pair(p, q)?;
    if alpha.is_nan() || alpha < 1.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    if alpha == f64::INFINITY {
        return classical_gauss_dmax(p, q);
    }
    let delta = &p.mean - &q.mean;
    let la = logdet_spd(&p.cov).ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&p.cov) })?;
    let lb = logdet_spd(&q.cov).ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&q.cov) })?;
    if alpha == 1.0 {
        let chol = q
            .cov
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { min_eig: min_eig(&q.cov) })?;
        let excess = chol.solve(&(&q.cov - &p.cov)).trace();
        let maha = delta.dot(&chol.solve(&delta));
        return Ok(Extended::Finite(0.5 * (lb - la - excess + maha)));
    }
    let sigma_alpha = symmetrize(&(&q.cov * alpha + &p.cov * (1.0 - alpha)));
    let Some(chol) = sigma_alpha.clone().cholesky() else {
        return Ok(Extended::Infinite);
    };
    let ls = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let maha = delta.dot(&chol.solve(&delta));
    Ok(Extended::Finite(0.5 * alpha * maha + 0.5 * (lb - la) - (ls - lb) / (2.0 * (alpha - 1.0))))
}

/// Symmetric eigenvalue spread `max|λ| / min|λ|`.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let (values, _) = sym_eig(m);
    let hi = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let lo = values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{is_pure_cov, random_cov, random_symplectic, RandomCovSpec};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn iso(modes: usize, x: f64) -> PhaseSpaceMatrix {
        PhaseSpaceMatrix::scaled_identity(modes, x)
    }

    fn state(cov: PhaseSpaceMatrix) -> GaussianState {
        GaussianState::zero_mean(cov).unwrap()
    }

    fn gauss(mean: &[f64], cov: DMatrix<f64>) -> ClassicalGaussian {
        ClassicalGaussian::new(DVector::from_column_slice(mean), cov).unwrap()
    }

    /// Random pair with `V_σ − V_ρ >= margin` built as `V_ρ` plus a positive
    /// definite increment.
    fn random_pair(modes: usize, seed: u64) -> (PhaseSpaceMatrix, PhaseSpaceMatrix) {
        let spec = RandomCovSpec { thermal: (1.0, 3.0), max_squeeze: 0.6, rotate: true };
        let v_rho = random_cov(modes, &spec, seed).unwrap();
        let bump = random_cov(modes, &RandomCovSpec { thermal: (1.0, 2.0), ..spec }, seed ^ 0x5eed).unwrap();
        let v_sigma = PhaseSpaceMatrix::new(v_rho.as_matrix() + bump.as_matrix() * 0.5).unwrap();
        (v_rho, v_sigma)
    }

    #[test]
    fn likelihood_cov_examples() {
        let vm = likelihood_cov(&iso(1, 1.0), &iso(1, 3.0)).unwrap();
        assert!((vm.as_matrix() - DMatrix::identity(2, 2)).amax() < 1e-12);
        let vm = likelihood_cov(&iso(1, 3.0), &iso(1, 5.0)).unwrap();
        assert!((vm.as_matrix() - DMatrix::identity(2, 2) * 7.0).amax() < 1e-12);
        assert!(matches!(
            likelihood_cov(&iso(1, 3.0), &iso(1, 3.0)),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn top_eigvec_examples() {
        let z = top_eigvec_cov(&iso(1, 1.0)).unwrap();
        assert!((z.as_matrix() - DMatrix::identity(2, 2)).amax() < 1e-13);
        let z = top_eigvec_cov(&iso(1, 7.0)).unwrap();
        assert!((z.as_matrix() - DMatrix::identity(2, 2)).amax() < 1e-13);
    }

    #[test]
    fn dmax_examples() {
        let v = dmax_unrestricted(&state(iso(1, 1.0)), &state(iso(1, 3.0))).unwrap();
        assert!((v.value() - 2f64.ln()).abs() < 1e-12);
        let v = dmax_unrestricted(&state(iso(1, 3.0)), &state(iso(1, 5.0))).unwrap();
        assert!((v.value() - 1.5f64.ln()).abs() < 1e-12);
        let bad = dmax_unrestricted(&state(iso(1, 3.0)), &state(iso(1, 2.0)));
        assert!(matches!(bad, Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn thermal_pairs_follow_photon_ratio() {
        for (a, b) in [(1.0, 2.0), (2.0, 7.0), (4.5, 4.6)] {
            let v = dmax_unrestricted_cov(&iso(1, a), &iso(1, b)).unwrap().value();
            assert!((v - ((b + 1.0) / (a + 1.0)).ln()).abs() < 1e-11);
        }
    }

    #[test]
    fn arcoth_route_agrees_on_mixed_pairs() {
        for seed in 0..50 {
            let (v_rho, v_sigma) = random_pair(1 + (seed as usize % 3), seed);
            if symplectic_eigenvalues(&v_rho).unwrap().iter().any(|&n| n < 1.0 + 1e-3) {
                continue;
            }
            let stable = dmax_unrestricted_cov(&v_rho, &v_sigma).unwrap().value();
            let literal = dmax_unrestricted_arcoth(&v_rho, &v_sigma).unwrap().value();
            assert!((stable - literal).abs() < 1e-8, "seed {seed}: {stable} vs {literal}");
        }
        assert!(dmax_unrestricted_arcoth(&iso(1, 1.0), &iso(1, 3.0)).is_err());
    }

    #[test]
    fn measured_seed_examples() {
        let rho = state(iso(1, 1.0));
        let sigma = state(iso(1, 3.0));
        let v = measured_dmax_for_seed(&rho, &sigma, &iso(1, 1.0)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-13);
        let g = PhaseSpaceMatrix::diag(&[2.0, 0.5]).unwrap();
        let v = measured_dmax_for_seed(&rho, &sigma, &g).unwrap();
        assert!((v - 0.5 * (17.5f64 / 4.5).ln()).abs() < 1e-13);
        assert!(v < 2f64.ln());
        let bad = PhaseSpaceMatrix::diag(&[2.0, 0.4]).unwrap();
        assert!(matches!(
            measured_dmax_for_seed(&rho, &sigma, &bad),
            Err(Error::NotBonaFide { .. })
        ));
    }

    #[test]
    fn displacement_examples() {
        let rho = state(iso(1, 1.0));
        let sigma = state(iso(1, 2.0));
        assert_eq!(displacement_term(&rho, &sigma).unwrap(), 0.0);
        let shifted = GaussianState::new(DVector::from_vec(vec![1.0, 0.0]), iso(1, 1.0)).unwrap();
        assert!((displacement_term(&shifted, &sigma).unwrap() - 0.5).abs() < 1e-15);
        let shifted = GaussianState::new(DVector::from_vec(vec![0.0, 2.0]), iso(1, 1.0)).unwrap();
        let sigma = state(iso(1, 3.0));
        assert!((displacement_term(&shifted, &sigma).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn classical_dmax_examples() {
        let p = gauss(&[0.0, 0.0], DMatrix::identity(2, 2));
        let q = gauss(&[0.0, 0.0], DMatrix::identity(2, 2) * 2.0);
        assert!((classical_gauss_dmax(&p, &q).unwrap().value() - 2f64.ln()).abs() < 1e-14);
        let p1 = gauss(&[1.0, 0.0], DMatrix::identity(2, 2));
        assert!((classical_gauss_dmax(&p1, &q).unwrap().value() - 2f64.ln() - 0.5).abs() < 1e-14);
        assert_eq!(classical_gauss_dmax(&p, &p).unwrap(), Extended::Infinite);
    }

    #[test]
    fn classical_renyi_examples() {
        let p = gauss(&[0.0, 0.0], DMatrix::identity(2, 2));
        let q = gauss(&[0.0, 0.0], DMatrix::identity(2, 2) * 2.0);
        let kl = classical_gauss_renyi(&p, &q, 1.0).unwrap().value();
        assert!((kl - (0.5 * 4f64.ln() - 0.5)).abs() < 1e-14);
        for alpha in [1.0, 1.5, 3.0, 100.0] {
            assert!(classical_gauss_renyi(&p, &p, alpha).unwrap().value().abs() < 1e-14);
        }
        assert!(matches!(classical_gauss_renyi(&p, &q, 0.5), Err(Error::InvalidAlpha(_))));
        let inf = classical_gauss_renyi(&p, &q, f64::INFINITY).unwrap();
        assert_eq!(inf, classical_gauss_dmax(&p, &q).unwrap());
    }

    #[test]
    fn renyi_limit_approaches_dmax() {
        // the gap closes like d·ln(α)/(2α)
        let p = gauss(&[0.3], DMatrix::from_element(1, 1, 1.0));
        let q = gauss(&[0.0], DMatrix::from_element(1, 1, 2.0));
        let big = classical_gauss_renyi(&p, &q, 1e6).unwrap().value();
        let lim = classical_gauss_dmax(&p, &q).unwrap().value();
        assert!((big - lim).abs() < 1e-5);

        let p = gauss(&[0.0, 0.0], DMatrix::identity(2, 2));
        let q = gauss(&[0.0, 0.0], DMatrix::identity(2, 2) * 2.0);
        let big = classical_gauss_renyi(&p, &q, 1e8).unwrap().value();
        let lim = classical_gauss_dmax(&p, &q).unwrap().value();
        assert!((big - lim).abs() < 1e-6);
    }

    #[test]
    fn renyi_is_monotone_in_order() {
        let p = gauss(&[0.2, -0.1], DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.8]));
        let q = gauss(&[0.0, 0.0], DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.5]));
        let mut prev = 0.0;
        for alpha in [1.0, 1.1, 2.0, 5.0, 50.0, f64::INFINITY] {
            let v = classical_gauss_renyi(&p, &q, alpha).unwrap().value();
            assert!(v >= prev - 1e-12, "alpha {alpha}");
            prev = v;
        }
    }

    #[test]
    fn random_pairs_satisfy_engine_invariants() {
        for seed in 0..500u64 {
            let modes = 1 + (seed as usize % 3);
            let (v_rho, v_sigma) = random_pair(modes, seed);
            let spec = likelihood_spec(&v_rho, &v_sigma).unwrap();
            let bf = check_bona_fide(&spec.v_m);
            assert!(bf.min_eig >= -1e-9 * spec.v_m.as_matrix().amax().max(1.0), "seed {seed}");
            assert!(is_pure_cov(&spec.v_zeta).unwrap(), "seed {seed}");

            let dmax = dmax_unrestricted_cov(&v_rho, &v_sigma).unwrap().value();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_symplectic(modes, 1.0, &mut rng);
            let seed_cov = PhaseSpaceMatrix::new(&s * s.transpose()).unwrap();
            let measured = measured_dmax_for_seed(&state(v_rho.clone()), &state(v_sigma.clone()), &seed_cov).unwrap();
            assert!(measured <= dmax + 1e-9, "seed {seed}: {measured} > {dmax}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dmax_is_symplectic_invariant(seed in 0u64..100_000, modes in 1usize..4) {
            let (v_rho, v_sigma) = random_pair(modes, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31));
            let s = random_symplectic(modes, 0.8, &mut rng);
            let base = dmax_unrestricted_cov(&v_rho, &v_sigma).unwrap().value();
            let moved = dmax_unrestricted_cov(&v_rho.congruence(&s), &v_sigma.congruence(&s)).unwrap().value();
            prop_assert!((base - moved).abs() < 1e-9);
        }

        #[test]
        fn displacement_term_is_nonnegative(seed in 0u64..100_000, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let (v_rho, v_sigma) = random_pair(1, seed);
            let rho = GaussianState::new(DVector::from_vec(vec![x, y]), v_rho).unwrap();
            let sigma = state(v_sigma);
            prop_assert!(displacement_term(&rho, &sigma).unwrap() >= 0.0);
        }
    }
}
