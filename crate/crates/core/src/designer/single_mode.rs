//! Single-mode standard form `V_ρ = a·diag(μ, 1/μ)`, `V_σ = b·I` and the
//! closed-form Gaussian-measured max-relative entropy.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::divergence::Extended;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, sym_eig, symmetrize};
use crate::symplectic::{williamson, PhaseSpaceMatrix};
use crate::tolerance::Tolerances;

/// Relative distance below which `μ` counts as sitting on `b/a` or `a/b`.
const EDGE_REL: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardFormParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    /// `T` with `Tᵀ V_ρ T = a·diag(μ, 1/μ)` and `Tᵀ V_σ T = b·I`.
    #[serde(skip)]
    pub reducing_symplectic: DMatrix<f64>,
}

impl StandardFormParams {
    pub fn covariances(&self) -> Result<(PhaseSpaceMatrix, PhaseSpaceMatrix)> {
        standard_form_covs(self.a, self.b, self.mu)
    }
}

/// `(a·diag(μ, 1/μ), b·I₂)`.
pub fn standard_form_covs(a: f64, b: f64, mu: f64) -> Result<(PhaseSpaceMatrix, PhaseSpaceMatrix)> {
    Ok((
        PhaseSpaceMatrix::diag(&[a * mu, a / mu])?,
        PhaseSpaceMatrix::scaled_identity(1, b),
    ))
}

/// Reduces a single-mode pair to standard form. The larger diagonal entry of
/// the reduced `V_ρ` is placed on `q`, so `μ >= 1`. The support condition is
/// not required; pairs outside it land on the infinite branch of
/// [`single_mode_gdmax`].
pub fn standard_form_reduce(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<StandardFormParams> {
    if v_rho.modes() != 1 || v_sigma.modes() != 1 {
        return Err(Error::MultiMode(v_rho.modes().max(v_sigma.modes())));
    }
    crate::linalg::require_spd(v_rho.as_matrix())?;
    let w = williamson(v_sigma)?;
    let b = w.nu[0];
    let t = w
        .symplectic
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("Williamson symplectic"))?;
    let m = symmetrize(&(t.transpose() * v_rho.as_matrix() * &t));
    let (values, mut vectors) = sym_eig(&m);
    // descending, with a proper rotation
    vectors.swap_columns(0, 1);
    if vectors.determinant() < 0.0 {
        vectors.column_mut(1).neg_mut();
    }
    let (hi, lo) = (values[1], values[0]);
    let a = (hi * lo).sqrt();
    let mu = hi / a;
    let reducing = t * vectors;
    let params = StandardFormParams { a, b, mu, reducing_symplectic: reducing };

    let (rho_std, sigma_std) = params.covariances()?;
    let t = &params.reducing_symplectic;
    let scale = max_abs(v_rho.as_matrix()).max(max_abs(v_sigma.as_matrix())).max(1.0);
    let res_rho = max_abs(&(t.transpose() * v_rho.as_matrix() * t - rho_std.as_matrix()));
    let res_sigma = max_abs(&(t.transpose() * v_sigma.as_matrix() * t - sigma_std.as_matrix()));
    if res_rho.max(res_sigma) > Tolerances::DEFAULT.reconstruction * scale {
        return Err(Error::IllConditioned(format!(
            "standard form residual {:e}",
            res_rho.max(res_sigma)
        )));
    }
    Ok(params)
}

/// `(μ_min, μ_max) = (b(a²+1)/(a(b²+1)), a(b²+1)/(b(a²+1)))`.
pub fn mu_interval(a: f64, b: f64) -> (f64, f64) {
    let lo = b * (a * a + 1.0) / (a * (b * b + 1.0));
    let hi = a * (b * b + 1.0) / (b * (a * a + 1.0));
    (lo, hi)
}

fn check_params(a: f64, b: f64, mu: f64) -> Result<()> {
    if !(a.is_finite() && a >= 1.0) {
        return Err(Error::InvalidParameter(format!("a = {a} must be >= 1")));
    }
    if !(b.is_finite() && b > 1.0) {
        return Err(Error::InvalidParameter(format!("b = {b} must be > 1")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be > 0")));
    }
    Ok(())
}

/// q-variance `z` of the optimal seed `diag(z, 1/z)` for μ strictly inside
/// the achievable interval.
pub fn single_mode_zopt(a: f64, b: f64, mu: f64) -> Result<f64> {
    check_params(a, b, mu)?;
    let (lo, hi) = mu_interval(a, b);
    if !(mu > lo && mu < hi) {
        return Err(Error::OutsideInterval { mu, lo, hi });
    }
    let radicand = (a * b - mu) * (a * mu - b) * (a - b * mu) * (a * b * mu - 1.0);
    if radicand < -1e-12 {
        return Err(Error::OutsideInterval { mu, lo, hi });
    }
    let num = a * b * (mu * mu - 1.0) + radicand.max(0.0).sqrt();
    let den = a * (b * b + 1.0) - (a * a + 1.0) * b * mu;
    let z = num / den;
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::OutsideInterval { mu, lo, hi });
    }
    Ok(z)
}

/// Measured value `½ ln[μ(b+z)(bz+1)/((az+μ)(aμ+z))]` of the seed `diag(z, 1/z)`.
pub fn single_mode_seed_value(a: f64, b: f64, mu: f64, z: f64) -> f64 {
    0.5 * (mu * (b + z) * (b * z + 1.0) / ((a * z + mu) * (a * mu + z))).ln()
}

/// Which piece of the closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Interior,
    HomodyneQ,
    HomodyneP,
    Infinite,
}

pub fn single_mode_branch(a: f64, b: f64, mu: f64) -> Result<Branch> {
    check_params(a, b, mu)?;
    let near = |x: f64, y: f64| (x - y).abs() <= EDGE_REL * x.abs().max(y.abs());
    if near(a * mu, b) || near(b * mu, a) {
        return Err(Error::DomainViolation { min_eig: 0.0 });
    }
    if b * mu < a || a * mu > b {
        return Ok(Branch::Infinite);
    }
    let (lo, hi) = mu_interval(a, b);
    Ok(if mu >= hi {
        Branch::HomodyneQ
    } else if mu <= lo {
        Branch::HomodyneP
    } else {
        Branch::Interior
    })
}

/// Closed-form Gaussian-measured max-relative entropy of the zero-mean
/// standard-form pair `(a, b, μ)`.
pub fn single_mode_gdmax(a: f64, b: f64, mu: f64) -> Result<Extended> {
    Ok(match single_mode_branch(a, b, mu)? {
        Branch::Infinite => Extended::Infinite,
        Branch::HomodyneQ => Extended::Finite(0.5 * (b * mu / a).ln()),
        Branch::HomodyneP => Extended::Finite(0.5 * (b / (a * mu)).ln()),
        Branch::Interior => {
            let z = single_mode_zopt(a, b, mu)?;
            Extended::Finite(single_mode_seed_value(a, b, mu, z))
        }
    })
}
