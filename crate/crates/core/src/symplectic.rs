//! Real phase-space linear algebra: the symplectic form, bona fide tests,
//! Williamson normal form and the matrix functions used by the divergence
//! formulas.
//!
//! Conventions: quadratures are ordered `(q1, p1, ..., qN, pN)`, the vacuum
//! covariance is the identity and `Ω = ⊕ [[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_sym, max_abs, min_eig_hermitian, powm_spd, sqrtm_spd, sym_eig, symmetrize,
};
use crate::tolerance::Tolerances;

/// Largest supported mode count.
pub const MAX_MODES: usize = 32;
/// Largest accepted entry magnitude; keeps eigen-solvers away from overflow.
pub const MAX_ENTRY: f64 = 1e100;

/// A real symmetric `2N x 2N` matrix on an `N`-mode phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceMatrix {
    m: DMatrix<f64>,
}

impl PhaseSpaceMatrix {
    /// Validates shape and symmetry (relative tolerance 1e-12), then stores the
    /// exactly symmetrised matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::DimensionMismatch { expected: rows, found: cols });
        }
        if rows == 0 || rows % 2 != 0 {
            return Err(Error::OddDimension(rows));
        }
        if rows / 2 > MAX_MODES {
            return Err(Error::InvalidParameter(format!(
                "{} modes exceeds the supported maximum of {MAX_MODES}",
                rows / 2
            )));
        }
        if let Some((i, j)) = m.iter().position(|v| !v.is_finite()).map(|k| (k % rows, k / rows)) {
            return Err(Error::Parse(format!("non-finite entry at row {i}, column {j}")));
        }
        let scale = max_abs(&m).max(1.0);
        if scale > MAX_ENTRY {
            return Err(Error::InvalidParameter(format!("entry of magnitude {scale:e} exceeds {MAX_ENTRY:e}")));
        }
        for i in 0..rows {
            for j in (i + 1)..rows {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > Tolerances::DEFAULT.symmetry * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        Ok(Self { m: symmetrize(&m) })
    }

    pub fn from_row_slice(dim: usize, data: &[f64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn identity(modes: usize) -> Self {
        Self { m: DMatrix::identity(2 * modes, 2 * modes) }
    }

    pub fn scaled_identity(modes: usize, scale: f64) -> Self {
        Self { m: DMatrix::identity(2 * modes, 2 * modes) * scale }
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[PhaseSpaceMatrix]) -> Result<Self> {
        let dim: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = DMatrix::zeros(dim, dim);
        let mut offset = 0;
        for b in blocks {
            m.view_mut((offset, offset), (b.dim(), b.dim())).copy_from(&b.m);
            offset += b.dim();
        }
        Self::new(m)
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }

    /// `Sᵀ V S`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Self {
        Self { m: symmetrize(&(s.transpose() * &self.m * s)) }
    }

    /// The principal submatrix on the given modes.
    pub fn submatrix(&self, modes: &[usize]) -> Self {
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.m[(idx[i], idx[j])]);
        Self { m }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl Serialize for PhaseSpaceMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim()))?;
        for row in self.rows() {
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

/// The symplectic form `Ω = ⊕_{j=1}^{N} [[0, 1], [-1, 0]]`.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * modes, 2 * modes);
    for j in 0..modes {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

/// Outcome of the uncertainty-principle test `V + iΩ >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonaFide {
    pub ok: bool,
    /// Smallest eigenvalue of the Hermitian matrix `V + iΩ`.
    pub min_eig: f64,
}

pub fn check_bona_fide(v: &PhaseSpaceMatrix) -> BonaFide {
    check_bona_fide_with(v, &Tolerances::DEFAULT)
}

pub fn check_bona_fide_with(v: &PhaseSpaceMatrix, tol: &Tolerances) -> BonaFide {
    let w = omega(v.modes());
    let h = DMatrix::from_fn(v.dim(), v.dim(), |i, j| Complex64::new(v.m[(i, j)], w[(i, j)]));
    let min_eig = min_eig_hermitian(&h);
    let scale = crate::linalg::max_abs_eig(&v.m).max(1.0);
    BonaFide { ok: min_eig >= -tol.psd * scale, min_eig }
}

/// `V^{1/2} Ω V^{1/2}` together with `V^{1/2}`.
fn normal_antisymmetric(v: &PhaseSpaceMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let root = sqrtm_spd(&v.m)?;
    let a = &root * omega(v.modes()) * &root;
    Ok((root, (&a - a.transpose()) * 0.5))
}

/// Eigenpairs `(ν, u)` of the Hermitian matrix `i V^{1/2} Ω V^{1/2}` with
/// `ν > 0`, sorted by decreasing `ν`.
fn positive_spectrum(a: &DMatrix<f64>) -> Vec<(f64, DVector<Complex64>)> {
    let h = a.map(|x| Complex64::new(0.0, x));
    let eig = h.symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<Complex64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lam)| (lam, eig.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs.truncate(a.nrows() / 2);
    pairs
}

/// Symplectic eigenvalues in decreasing order.
pub fn symplectic_eigenvalues(v: &PhaseSpaceMatrix) -> Result<Vec<f64>> {
    let (_, a) = normal_antisymmetric(v)?;
    Ok(positive_spectrum(&a).into_iter().map(|(nu, _)| nu).collect())
}

/// `V = Sᵀ (⊕ νⱼ I₂) S` with `S Ω Sᵀ = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonDecomposition {
    pub symplectic: DMatrix<f64>,
    /// Symplectic eigenvalues, decreasing.
    pub nu: Vec<f64>,
}

impl WilliamsonDecomposition {
    pub fn diagonal(&self) -> DMatrix<f64> {
        let d: Vec<f64> = self.nu.iter().flat_map(|&n| [n, n]).collect();
        DMatrix::from_diagonal(&DVector::from_vec(d))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.symplectic.transpose() * self.diagonal() * &self.symplectic
    }
}

/// Williamson normal form.
///
/// The antisymmetric matrix `A = V^{1/2} Ω V^{1/2}` is brought to its real
/// normal form `Oᵀ A O = ⊕ νⱼ Ω₂` using the eigenvectors of the Hermitian
/// matrix `iA`: for `iA u = ν u` with `u = x + iy`, the real pair
/// `(√2 y, √2 x)` spans one canonical block. Then `S = D^{-1/2} Oᵀ V^{1/2}`.
/// Each pair's phase is chosen so the block is as close as possible to the
/// identity on the mode carrying most of its weight.
pub fn williamson(v: &PhaseSpaceMatrix) -> Result<WilliamsonDecomposition> {
    let n = v.modes();
    let (root, a) = normal_antisymmetric(v)?;
    let spectrum = positive_spectrum(&a);
    let mut basis = DMatrix::zeros(2 * n, 2 * n);
    let mut nu = Vec::with_capacity(n);
    for (j, (lam, u)) in spectrum.into_iter().enumerate() {
        let weight = |k: usize| u[2 * k].norm_sqr() + u[2 * k + 1].norm_sqr();
        let k = (0..n)
            .max_by(|&p, &q| weight(p).total_cmp(&weight(q)))
            .unwrap_or(0);
        let (xq, yq) = (u[2 * k].re, u[2 * k].im);
        let (xp, yp) = (u[2 * k + 1].re, u[2 * k + 1].im);
        let theta = (xq - yp).atan2(yq + xp);
        let phase = Complex64::from_polar(1.0, theta);
        let rotated = u.map(|z| z * phase);
        let sq2 = std::f64::consts::SQRT_2;
        for i in 0..2 * n {
            basis[(i, 2 * j)] = sq2 * rotated[i].im;
            basis[(i, 2 * j + 1)] = sq2 * rotated[i].re;
        }
        nu.push(lam);
    }
    let inv_sqrt_d: Vec<f64> = nu.iter().flat_map(|&x| [1.0 / x.sqrt(), 1.0 / x.sqrt()]).collect();
    let s = DMatrix::from_diagonal(&DVector::from_vec(inv_sqrt_d)) * basis.transpose() * root;
    Ok(WilliamsonDecomposition { symplectic: s, nu })
}

/// Largest entry of `S Ω Sᵀ − Ω`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let w = omega(s.nrows() / 2);
    max_abs(&(s * &w * s.transpose() - w))
}

/// Which ordering the argument of `G` takes: `V Ω` (left) or `Ω V` (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `G(VΩ) = sqrt(I + (VΩ)^{-2})` (left) or `G(ΩV)` (right) for `V > 0`.
///
/// With `A = V^{1/2} Ω V^{1/2}` one has `VΩ = V^{1/2} A V^{-1/2}`, so the
/// argument is similar to the symmetric matrix `I − (−A²)^{-1}` whose
/// eigenvalues are `1 − 1/νⱼ²`. `G(ΩV)` is the transpose of `G(VΩ)`.
pub fn matrix_g(v: &PhaseSpaceMatrix, side: Side) -> Result<DMatrix<f64>> {
    let (root, a) = normal_antisymmetric(v)?;
    let neg_sq = symmetrize(&(-(&a * &a)));
    let (values, _) = sym_eig(&neg_sq);
    if values[0] <= 0.0 {
        return Err(Error::Singular("V Ω"));
    }
    if let Some(bad) = values.iter().map(|x| 1.0 - 1.0 / x).find(|&g| g < -1e-10) {
        return Err(Error::NegativeArgument { eig: bad });
    }
    let g = apply_sym(&neg_sq, |x| (1.0 - 1.0 / x).max(0.0).sqrt());
    let inv_root = powm_spd(&v.m, -0.5)?;
    Ok(match side {
        Side::Left => root * g * inv_root,
        Side::Right => inv_root * g * root,
    })
}

/// Weighted geometric mean `A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
pub fn geometric_mean_t(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    crate::linalg::require_spd(b)?;
    let root = sqrtm_spd(a)?;
    let inv_root = powm_spd(a, -0.5)?;
    let inner = symmetrize(&(&inv_root * b * &inv_root));
    let powered = powm_spd(&inner, t)?;
    Ok(symmetrize(&(&root * powered * &root)))
}

/// `V = Ω V^{-1} Ωᵀ` up to a relative Frobenius residual of 1e-9.
pub fn is_pure_cov(v: &PhaseSpaceMatrix) -> Result<bool> {
    Ok(purity_residual(v)? <= Tolerances::DEFAULT.purity)
}

/// Relative residual `‖V − Ω V^{-1} Ωᵀ‖_F / ‖V‖_F`.
pub fn purity_residual(v: &PhaseSpaceMatrix) -> Result<f64> {
    let (inv, _) = crate::linalg::spd_inverse(&v.m)?;
    let w = omega(v.modes());
    let partner = &w * inv * w.transpose();
    Ok((&v.m - partner).norm() / v.m.norm())
}

/// `arcoth(X) = ½ ln((X + 1)/(X − 1))` for symmetric `X` with spectrum above `1 + 1e-12`.
pub fn arcoth_spd(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, _) = sym_eig(x);
    if values[0] <= 1.0 + Tolerances::DEFAULT.domain {
        return Err(Error::ArcothDomain { eig: values[0] });
    }
    Ok(apply_sym(x, |v| 0.5 * ((v + 1.0) / (v - 1.0)).ln()))
}

/// Orthogonal symplectic matrix `exp(K)` where `K` is the real image of the
/// anti-Hermitian generator `A + iB` (`A` antisymmetric, `B` symmetric).
///
/// `params` holds the `N(N−1)/2` strictly-upper entries of `A` followed by the
/// `N(N+1)/2` upper entries of `B`, `N²` values in total.
pub fn orthogonal_symplectic(modes: usize, params: &[f64]) -> Result<DMatrix<f64>> {
    Ok(generator(modes, params)?.exp())
}

pub(crate) fn generator(modes: usize, params: &[f64]) -> Result<DMatrix<f64>> {
    let n = modes;
    if params.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: params.len() });
    }
    let mut anti = DMatrix::zeros(n, n);
    let mut sym = DMatrix::zeros(n, n);
    let mut it = params.iter().copied();
    for j in 0..n {
        for k in (j + 1)..n {
            let x = it.next().unwrap_or(0.0);
            anti[(j, k)] = x;
            anti[(k, j)] = -x;
        }
    }
    for j in 0..n {
        for k in j..n {
            let x = it.next().unwrap_or(0.0);
            sym[(j, k)] = x;
            sym[(k, j)] = x;
        }
    }
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            g[(2 * j, 2 * k)] = anti[(j, k)];
            g[(2 * j + 1, 2 * k + 1)] = anti[(j, k)];
            g[(2 * j, 2 * k + 1)] = sym[(j, k)];
            g[(2 * j + 1, 2 * k)] = -sym[(j, k)];
        }
    }
    Ok(g)
}

/// `⊕ diag(e^{rⱼ}, e^{-rⱼ})`.
pub fn squeezer(log_squeeze: &[f64]) -> DMatrix<f64> {
    let d: Vec<f64> = log_squeeze.iter().flat_map(|&r| [r.exp(), (-r).exp()]).collect();
    DMatrix::from_diagonal(&DVector::from_vec(d))
}

/// Random orthogonal symplectic matrix.
pub fn random_orthogonal_symplectic<R: Rng>(modes: usize, rng: &mut R) -> DMatrix<f64> {
    let params: Vec<f64> = (0..modes * modes)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    generator(modes, &params).map(|g| g.exp()).unwrap_or_else(|_| DMatrix::identity(2 * modes, 2 * modes))
}

/// Random symplectic `O₁ Z O₂` with log-squeezings uniform in `[-max_squeeze, max_squeeze]`.
pub fn random_symplectic<R: Rng>(modes: usize, max_squeeze: f64, rng: &mut R) -> DMatrix<f64> {
    let o1 = random_orthogonal_symplectic(modes, rng);
    let r: Vec<f64> = (0..modes)
        .map(|_| if max_squeeze > 0.0 { rng.random_range(-max_squeeze..=max_squeeze) } else { 0.0 })
        .collect();
    let o2 = random_orthogonal_symplectic(modes, rng);
    o1 * squeezer(&r) * o2
}

/// Parameters for [`random_cov`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCovSpec {
    /// Range of symplectic eigenvalues, `1 <= lo <= hi`.
    pub thermal: (f64, f64),
    /// Maximum absolute log-squeezing per mode (0 disables squeezing).
    pub max_squeeze: f64,
    /// Apply random passive rotations.
    pub rotate: bool,
}

impl Default for RandomCovSpec {
    fn default() -> Self {
        Self { thermal: (1.0, 5.0), max_squeeze: 1.0, rotate: true }
    }
}

/// Deterministic random covariance `Sᵀ D S` with `D = ⊕ νⱼ I₂`.
pub fn random_cov(modes: usize, spec: &RandomCovSpec, seed: u64) -> Result<PhaseSpaceMatrix> {
    let (lo, hi) = spec.thermal;
    if modes == 0 || modes > MAX_MODES {
        return Err(Error::InvalidRange(format!("mode count {modes}")));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo < 1.0 || hi < lo {
        return Err(Error::InvalidRange(format!("thermal range [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
    }
    if !spec.max_squeeze.is_finite() || spec.max_squeeze < 0.0 {
        return Err(Error::InvalidRange(format!("squeezing bound {}", spec.max_squeeze)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nu: Vec<f64> = (0..modes)
        .map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .flat_map(|x| [x, x])
        .collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(nu));
    let s = if spec.rotate {
        random_symplectic(modes, spec.max_squeeze, &mut rng)
    } else {
        let r: Vec<f64> = (0..modes)
            .map(|_| if spec.max_squeeze > 0.0 { rng.random_range(-spec.max_squeeze..=spec.max_squeeze) } else { 0.0 })
            .collect();
        squeezer(&r)
    };
    PhaseSpaceMatrix::new(symmetrize(&(s.transpose() * d * s)))
}
